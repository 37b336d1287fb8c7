#include "calibgan/networks.hpp"
#include "calibgan/error.hpp"

#include <algorithm>

namespace calibgan {

namespace {

void add_in_place(Matrix& acc, const Matrix& other) {
    auto a = acc.values();
    const auto b = other.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] += b[i];
    }
}

void fill_zero(Matrix& m) {
    std::fill(m.values().begin(), m.values().end(), 0.0);
}

}

/*** ResidualBlock ***/

ResidualBlock::ResidualBlock(std::size_t dim, std::size_t hidden, Rng& rng, BatchNormOptions bn) :
    norm_in_(dim, bn),
    expand_(LinearLayer::he_normal(dim, hidden, rng)),
    norm_hidden_(hidden, bn),
    project_(LinearLayer::he_normal(hidden, dim, rng)) {}

Matrix ResidualBlock::forward(const Matrix& x, Mode mode) {
    Matrix h = norm_in_.forward(x, mode);
    h = expand_.forward(h, mode);
    h = relu_.forward(h, mode);
    h = norm_hidden_.forward(h, mode);
    h = project_.forward(h, mode);
    add_in_place(h, x);
    return h;
}

Matrix ResidualBlock::infer(const Matrix& x) const {
    Matrix h = project_.infer(norm_hidden_.infer(relu_.infer(expand_.infer(norm_in_.infer(x)))));
    add_in_place(h, x);
    return h;
}

Matrix ResidualBlock::backward(const Matrix& grad_out) {
    Matrix g = project_.backward(grad_out);
    g = norm_hidden_.backward(g);
    g = relu_.backward(g);
    g = expand_.backward(g);
    g = norm_in_.backward(g);
    add_in_place(g, grad_out);
    return g;
}

void ResidualBlock::zero_grad() {
    norm_in_.zero_grad();
    expand_.zero_grad();
    norm_hidden_.zero_grad();
    project_.zero_grad();
}

void ResidualBlock::collect(const std::string& prefix, std::vector<ParamRef>& params) {
    norm_in_.collect(prefix + ".norm_in", params);
    expand_.collect(prefix + ".expand", params);
    norm_hidden_.collect(prefix + ".norm_hidden", params);
    project_.collect(prefix + ".project", params);
}

void ResidualBlock::collect_buffers(const std::string& prefix, std::vector<BufferRef>& buffers) {
    norm_in_.collect_buffers(prefix + ".norm_in", buffers);
    norm_hidden_.collect_buffers(prefix + ".norm_hidden", buffers);
}

void ResidualBlock::zero_output() {
    fill_zero(project_.weight());
    fill_zero(project_.bias());
}

void ResidualBlock::zero_branch() {
    fill_zero(expand_.weight());
    fill_zero(expand_.bias());
    fill_zero(project_.weight());
    fill_zero(project_.bias());
}

/*** GeneratorNet ***/

GeneratorNet::GeneratorNet(const GeneratorOptions& options, Rng& rng) : options_(options) {
    if (options.dim == 0 || options.hidden == 0) {
        throw DomainError("generator dimensions must be positive");
    }
    blocks_.reserve(options.blocks);
    for (std::size_t b = 0; b < options.blocks; ++b) {
        blocks_.emplace_back(options.dim, options.hidden, rng, options.batch_norm);
    }
    if (options.identity_init) {
        zero_residuals_output();
    }
}

void GeneratorNet::check_input(const Matrix& z) const {
    if (z.cols() != options_.dim) {
        throw ShapeError("generator expects " + std::to_string(options_.dim) + " columns, got input " + z.shape_string());
    }
}

Matrix GeneratorNet::forward(const Matrix& z, Mode mode) {
    check_input(z);
    Matrix h = z;
    for (auto& block : blocks_) {
        h = block.forward(h, mode);
    }
    return h;
}

Matrix GeneratorNet::infer(const Matrix& z) const {
    check_input(z);
    Matrix h = z;
    for (const auto& block : blocks_) {
        h = block.infer(h);
    }
    return h;
}

Matrix GeneratorNet::backward(const Matrix& grad_out) {
    Matrix g = grad_out;
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
        g = it->backward(g);
    }
    return g;
}

void GeneratorNet::zero_grad() {
    for (auto& block : blocks_) {
        block.zero_grad();
    }
}

std::vector<ParamRef> GeneratorNet::parameters() {
    std::vector<ParamRef> params;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        blocks_[b].collect("block" + std::to_string(b), params);
    }
    return params;
}

std::vector<BufferRef> GeneratorNet::buffers() {
    std::vector<BufferRef> buffers;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        blocks_[b].collect_buffers("block" + std::to_string(b), buffers);
    }
    return buffers;
}

void GeneratorNet::zero_residuals_output() {
    for (auto& block : blocks_) {
        block.zero_output();
    }
}

void GeneratorNet::zero_residuals() {
    for (auto& block : blocks_) {
        block.zero_branch();
    }
}

/*** DiscriminatorNet ***/

DiscriminatorNet::DiscriminatorNet(const DiscriminatorOptions& options, Rng& rng) :
    options_(options),
    norm_in_(options.dim, options.batch_norm),
    hidden1_(LinearLayer::he_normal(options.dim, options.hidden, rng)),
    norm_hidden_(options.hidden, options.batch_norm),
    hidden2_(LinearLayer::he_normal(options.hidden, options.hidden, rng)),
    out_(LinearLayer::he_normal(options.hidden, 1, rng))
{
    if (options.dim == 0 || options.hidden == 0) {
        throw DomainError("discriminator dimensions must be positive");
    }
}

void DiscriminatorNet::check_input(const Matrix& x) const {
    if (x.cols() != options_.dim) {
        throw ShapeError("discriminator expects " + std::to_string(options_.dim) + " columns, got input " + x.shape_string());
    }
}

Matrix DiscriminatorNet::forward(const Matrix& x, Mode mode) {
    check_input(x);
    Matrix h = norm_in_.forward(x, mode);
    h = relu1_.forward(hidden1_.forward(h, mode), mode);
    h = norm_hidden_.forward(h, mode);
    h = relu2_.forward(hidden2_.forward(h, mode), mode);
    return sigmoid_.forward(out_.forward(h, mode), mode);
}

Matrix DiscriminatorNet::infer(const Matrix& x) const {
    check_input(x);
    Matrix h = relu1_.infer(hidden1_.infer(norm_in_.infer(x)));
    h = relu2_.infer(hidden2_.infer(norm_hidden_.infer(h)));
    return sigmoid_.infer(out_.infer(h));
}

Matrix DiscriminatorNet::backward(const Matrix& grad_out, BatchStats stats) {
    Matrix g = out_.backward(sigmoid_.backward(grad_out));
    g = hidden2_.backward(relu2_.backward(g));
    g = norm_hidden_.backward(g, stats);
    g = hidden1_.backward(relu1_.backward(g));
    return norm_in_.backward(g, stats);
}

void DiscriminatorNet::zero_grad() {
    norm_in_.zero_grad();
    hidden1_.zero_grad();
    norm_hidden_.zero_grad();
    hidden2_.zero_grad();
    out_.zero_grad();
}

std::vector<ParamRef> DiscriminatorNet::parameters() {
    std::vector<ParamRef> params;
    norm_in_.collect("norm_in", params);
    hidden1_.collect("hidden1", params);
    norm_hidden_.collect("norm_hidden", params);
    hidden2_.collect("hidden2", params);
    out_.collect("out", params);
    return params;
}

std::vector<BufferRef> DiscriminatorNet::buffers() {
    std::vector<BufferRef> buffers;
    norm_in_.collect_buffers("norm_in", buffers);
    norm_hidden_.collect_buffers("norm_hidden", buffers);
    return buffers;
}

}
