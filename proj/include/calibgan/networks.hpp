#ifndef CALIBGAN_NETWORKS_HPP
#define CALIBGAN_NETWORKS_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "layers.hpp"

/**
 * @file networks.hpp
 * @brief The generator and discriminator assemblies.
 */

namespace calibgan {

/**
 * Residual block `x + f(x)` with
 * `f = batch-norm(d) -> linear(d, h) -> ReLU -> batch-norm(h) -> linear(h, d)`.
 */
class ResidualBlock {
public:
    ResidualBlock() = default;
    ResidualBlock(std::size_t dim, std::size_t hidden, Rng& rng, BatchNormOptions bn = {});

    std::size_t dim() const { return norm_in_.dim(); }
    std::size_t hidden() const { return expand_.out_dim(); }

    Matrix forward(const Matrix& x, Mode mode);
    Matrix infer(const Matrix& x) const;
    Matrix backward(const Matrix& grad_out);

    void zero_grad();
    void collect(const std::string& prefix, std::vector<ParamRef>& params);
    void collect_buffers(const std::string& prefix, std::vector<BufferRef>& buffers);

    /** Zero both linear layers of the branch, making the block an exact identity. */
    void zero_branch();

    /** Zero only the closing linear layer; the block is still an identity but the inner layer keeps its weights. */
    void zero_output();

private:
    BatchNormLayer norm_in_;
    LinearLayer expand_;
    Activation relu_{ActivationKind::relu};
    BatchNormLayer norm_hidden_;
    LinearLayer project_;
};

struct GeneratorOptions {
    std::size_t dim = 25;
    std::size_t hidden = 64;
    std::size_t blocks = 2;
    BatchNormOptions batch_norm;
    /**
     * Start each residual branch with a zero closing layer, so the untrained generator is the identity map.
     * When false, every linear layer uses the He-normal initialization.
     */
    bool identity_init = true;
};

/**
 * Near-identity map from source space to target space: a chain of residual blocks
 * whose input and output dimensions are both `dim`.
 */
class GeneratorNet {
public:
    GeneratorNet() = default;
    GeneratorNet(const GeneratorOptions& options, Rng& rng);

    const GeneratorOptions& options() const { return options_; }
    std::size_t dim() const { return options_.dim; }

    Matrix forward(const Matrix& z, Mode mode);
    Matrix infer(const Matrix& z) const;
    Matrix backward(const Matrix& grad_out);

    void zero_grad();
    std::vector<ParamRef> parameters();
    std::vector<BufferRef> buffers();

    /** Make every block an identity, so the whole generator is the identity map. */
    void zero_residuals();

private:
    void check_input(const Matrix& z) const;
    void zero_residuals_output();

    GeneratorOptions options_;
    std::vector<ResidualBlock> blocks_;
};

struct DiscriminatorOptions {
    std::size_t dim = 25;
    std::size_t hidden = 64;
    BatchNormOptions batch_norm;
};

/**
 * Scores points as real (target) versus generated:
 * `batch-norm -> linear(d, h) -> ReLU -> batch-norm -> linear(h, h) -> ReLU -> linear(h, 1) -> sigmoid`.
 * Outputs are n x 1, strictly inside (0, 1).
 */
class DiscriminatorNet {
public:
    DiscriminatorNet() = default;
    DiscriminatorNet(const DiscriminatorOptions& options, Rng& rng);

    const DiscriminatorOptions& options() const { return options_; }
    std::size_t dim() const { return options_.dim; }

    Matrix forward(const Matrix& x, Mode mode);
    Matrix infer(const Matrix& x) const;
    /** `stats` applies to both batch-norm layers; see `BatchStats`. */
    Matrix backward(const Matrix& grad_out, BatchStats stats = BatchStats::coupled);

    void zero_grad();
    std::vector<ParamRef> parameters();
    std::vector<BufferRef> buffers();

    LinearLayer& output_layer() { return out_; }

private:
    void check_input(const Matrix& x) const;

    DiscriminatorOptions options_;
    BatchNormLayer norm_in_;
    LinearLayer hidden1_;
    Activation relu1_{ActivationKind::relu};
    BatchNormLayer norm_hidden_;
    LinearLayer hidden2_;
    Activation relu2_{ActivationKind::relu};
    LinearLayer out_;
    Activation sigmoid_{ActivationKind::sigmoid};
};

}

#endif
