#ifndef CALIBGAN_LAYERS_HPP
#define CALIBGAN_LAYERS_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "matrix.hpp"
#include "random.hpp"

/**
 * @file layers.hpp
 * @brief Differentiable layer primitives with explicit forward/backward passes.
 *
 * Every layer follows the same contract:
 * - `forward(x, Mode::train)` computes the output and caches whatever `backward()` needs.
 * - `forward(x, Mode::infer)` computes the inference output and drops any cache,
 *   so a following `backward()` throws `StateError`.
 * - `infer(x)` is the const, side-effect-free inference path.
 * - `backward(g)` returns the gradient with respect to the layer input and
 *   accumulates (adds) parameter gradients into the `grad_*` members.
 */

namespace calibgan {

enum class Mode { train, infer };

/** Non-owning view of one learnable parameter and its gradient accumulator. */
struct ParamRef {
    std::string name;
    Matrix* value;
    Matrix* grad;
};

/** Non-owning view of a non-learnable state tensor (batch-norm running statistics). */
struct BufferRef {
    std::string name;
    Matrix* value;
};

/** Fully connected layer computing `x * W^T + b` with `W` of shape out x in and `b` a single row. */
class LinearLayer {
public:
    LinearLayer() = default;

    /** Zero-initialized weights and bias. */
    LinearLayer(std::size_t in_dim, std::size_t out_dim);

    /** Weights drawn from N(0, 2 / in_dim), zero bias. */
    static LinearLayer he_normal(std::size_t in_dim, std::size_t out_dim, Rng& rng);

    std::size_t in_dim() const { return weight_.cols(); }
    std::size_t out_dim() const { return weight_.rows(); }

    Matrix forward(const Matrix& x, Mode mode = Mode::train);
    Matrix infer(const Matrix& x) const;
    Matrix backward(const Matrix& grad_out);

    void zero_grad();
    void collect(const std::string& prefix, std::vector<ParamRef>& params);

    Matrix& weight() { return weight_; }
    const Matrix& weight() const { return weight_; }
    Matrix& bias() { return bias_; }
    const Matrix& bias() const { return bias_; }
    const Matrix& grad_weight() const { return grad_weight_; }
    const Matrix& grad_bias() const { return grad_bias_; }

private:
    Matrix weight_;
    Matrix bias_;
    Matrix grad_weight_;
    Matrix grad_bias_;
    std::optional<Matrix> cached_input_;
};

/**
 * How a batch-norm backward pass treats the minibatch mean and variance.
 * `coupled` differentiates through them (the exact gradient of the training-mode forward);
 * `fixed` treats them as constants, so each output row depends only on its own input row.
 */
enum class BatchStats { coupled, fixed };

struct BatchNormOptions {
    double epsilon = 1e-5;
    /** Weight of the newest minibatch in the running-statistics moving average. */
    double momentum = 0.1;
};

/**
 * Per-feature batch normalization.
 *
 * Training mode normalizes by the minibatch mean and biased variance and folds both into the running
 * statistics, `running = (1 - momentum) * running + momentum * batch`. The running variance is also
 * the biased minibatch variance. Inference mode reads only the running statistics.
 */
class BatchNormLayer {
public:
    BatchNormLayer() = default;
    explicit BatchNormLayer(std::size_t dim, BatchNormOptions options = {});

    std::size_t dim() const { return gamma_.cols(); }
    const BatchNormOptions& options() const { return options_; }

    /** Training mode requires at least two rows; a single row throws `DomainError`. */
    Matrix forward(const Matrix& x, Mode mode = Mode::train);
    Matrix infer(const Matrix& x) const;

    /**
     * Gradient of the last training-mode forward; by default the full gradient through the minibatch statistics.
     * Throws `StateError` unless the last forward was in training mode.
     */
    Matrix backward(const Matrix& grad_out, BatchStats stats = BatchStats::coupled);

    void zero_grad();
    void collect(const std::string& prefix, std::vector<ParamRef>& params);
    void collect_buffers(const std::string& prefix, std::vector<BufferRef>& buffers);

    Matrix& gamma() { return gamma_; }
    const Matrix& gamma() const { return gamma_; }
    Matrix& beta() { return beta_; }
    const Matrix& beta() const { return beta_; }
    const Matrix& grad_gamma() const { return grad_gamma_; }
    const Matrix& grad_beta() const { return grad_beta_; }
    Matrix& running_mean() { return running_mean_; }
    const Matrix& running_mean() const { return running_mean_; }
    Matrix& running_var() { return running_var_; }
    const Matrix& running_var() const { return running_var_; }

private:
    void check_input(const Matrix& x) const;

    BatchNormOptions options_;
    Matrix gamma_, beta_;
    Matrix grad_gamma_, grad_beta_;
    Matrix running_mean_, running_var_;

    struct Cache {
        Matrix normalized;
        std::vector<double> inv_std;
    };
    std::optional<Cache> cache_;
};

enum class ActivationKind { relu, sigmoid };

/** Sigmoid outputs are clamped to `[sigmoid_clamp, 1 - sigmoid_clamp]` so that downstream logarithms stay finite. */
inline constexpr double sigmoid_clamp = 1e-7;

/**
 * Elementwise activation.
 * The sigmoid backward pass uses `s * (1 - s)` evaluated at the clamped output,
 * so gradients keep flowing when the output sits on the clamp.
 */
class Activation {
public:
    explicit Activation(ActivationKind kind = ActivationKind::relu) : kind_(kind) {}

    ActivationKind kind() const { return kind_; }

    Matrix forward(const Matrix& x, Mode mode = Mode::train);
    Matrix infer(const Matrix& x) const;
    Matrix backward(const Matrix& grad_out);

private:
    ActivationKind kind_;
    std::optional<Matrix> cache_;
};

double sigmoid(double x);

}

#endif
