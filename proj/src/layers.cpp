#include "calibgan/layers.hpp"
#include "calibgan/error.hpp"

#include <algorithm>
#include <cmath>

namespace calibgan {

/*** LinearLayer ***/

LinearLayer::LinearLayer(std::size_t in_dim, std::size_t out_dim) :
    weight_(out_dim, in_dim), bias_(1, out_dim), grad_weight_(out_dim, in_dim), grad_bias_(1, out_dim) {}

LinearLayer LinearLayer::he_normal(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
    LinearLayer out(in_dim, out_dim);
    out.weight_ = gaussian_matrix(out_dim, in_dim, 0.0, std::sqrt(2.0 / static_cast<double>(in_dim)), rng);
    return out;
}

Matrix LinearLayer::infer(const Matrix& x) const {
    if (x.cols() != in_dim()) {
        throw ShapeError("linear forward: input " + x.shape_string() + " does not match weight " + weight_.shape_string());
    }
    Matrix out = matmul_bt(x, weight_);
    const auto b = bias_.row(0);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] += b[c];
        }
    }
    return out;
}

Matrix LinearLayer::forward(const Matrix& x, Mode mode) {
    Matrix out = infer(x);
    if (mode == Mode::train) {
        cached_input_ = x;
    } else {
        cached_input_.reset();
    }
    return out;
}

Matrix LinearLayer::backward(const Matrix& grad_out) {
    if (!cached_input_) {
        throw StateError("linear backward called without a preceding training-mode forward");
    }
    const Matrix& x = *cached_input_;
    if (grad_out.rows() != x.rows() || grad_out.cols() != out_dim()) {
        throw ShapeError("linear backward: gradient " + grad_out.shape_string() + " does not match output shape " +
                         std::to_string(x.rows()) + "x" + std::to_string(out_dim()));
    }

    const Matrix gw = matmul_at(grad_out, x);
    auto gwv = grad_weight_.values();
    const auto src = gw.values();
    for (std::size_t i = 0; i < gwv.size(); ++i) {
        gwv[i] += src[i];
    }

    auto gb = grad_bias_.row(0);
    for (std::size_t r = 0; r < grad_out.rows(); ++r) {
        const auto row = grad_out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            gb[c] += row[c];
        }
    }

    return matmul(grad_out, weight_);
}

void LinearLayer::zero_grad() {
    std::fill(grad_weight_.values().begin(), grad_weight_.values().end(), 0.0);
    std::fill(grad_bias_.values().begin(), grad_bias_.values().end(), 0.0);
}

void LinearLayer::collect(const std::string& prefix, std::vector<ParamRef>& params) {
    params.push_back({prefix + ".weight", &weight_, &grad_weight_});
    params.push_back({prefix + ".bias", &bias_, &grad_bias_});
}

/*** BatchNormLayer ***/

BatchNormLayer::BatchNormLayer(std::size_t dim, BatchNormOptions options) :
    options_(options),
    gamma_(1, dim, 1.0),
    beta_(1, dim, 0.0),
    grad_gamma_(1, dim),
    grad_beta_(1, dim),
    running_mean_(1, dim, 0.0),
    running_var_(1, dim, 1.0)
{
    if (!(options.epsilon > 0)) {
        throw DomainError("batch-norm epsilon must be positive");
    }
    if (!(options.momentum > 0 && options.momentum < 1)) {
        throw DomainError("batch-norm momentum must lie in (0, 1)");
    }
}

void BatchNormLayer::check_input(const Matrix& x) const {
    if (x.cols() != dim()) {
        throw ShapeError("batch-norm forward: input " + x.shape_string() + " does not have " + std::to_string(dim()) + " columns");
    }
}

Matrix BatchNormLayer::infer(const Matrix& x) const {
    check_input(x);
    Matrix out(x.rows(), x.cols());
    const auto mean = running_mean_.row(0);
    const auto var = running_var_.row(0);
    const auto g = gamma_.row(0);
    const auto b = beta_.row(0);
    std::vector<double> inv_std(dim());
    for (std::size_t c = 0; c < dim(); ++c) {
        inv_std[c] = 1.0 / std::sqrt(var[c] + options_.epsilon);
    }
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto in = x.row(r);
        auto o = out.row(r);
        for (std::size_t c = 0; c < in.size(); ++c) {
            o[c] = g[c] * (in[c] - mean[c]) * inv_std[c] + b[c];
        }
    }
    return out;
}

Matrix BatchNormLayer::forward(const Matrix& x, Mode mode) {
    if (mode == Mode::infer) {
        cache_.reset();
        return infer(x);
    }

    check_input(x);
    if (x.rows() < 2) {
        throw DomainError("batch-norm training forward needs at least 2 rows, got " + std::to_string(x.rows()));
    }

    const Matrix mean = reduce(x, Axis::over_rows, Stat::mean);
    const Matrix var = reduce(x, Axis::over_rows, Stat::var);

    Cache cache;
    cache.inv_std.resize(dim());
    for (std::size_t c = 0; c < dim(); ++c) {
        cache.inv_std[c] = 1.0 / std::sqrt(var(0, c) + options_.epsilon);
    }

    cache.normalized = Matrix(x.rows(), x.cols());
    Matrix out(x.rows(), x.cols());
    const auto g = gamma_.row(0);
    const auto b = beta_.row(0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto in = x.row(r);
        auto xhat = cache.normalized.row(r);
        auto o = out.row(r);
        for (std::size_t c = 0; c < in.size(); ++c) {
            xhat[c] = (in[c] - mean(0, c)) * cache.inv_std[c];
            o[c] = g[c] * xhat[c] + b[c];
        }
    }

    const double m = options_.momentum;
    for (std::size_t c = 0; c < dim(); ++c) {
        running_mean_(0, c) = (1 - m) * running_mean_(0, c) + m * mean(0, c);
        running_var_(0, c) = (1 - m) * running_var_(0, c) + m * var(0, c);
    }

    cache_ = std::move(cache);
    return out;
}

Matrix BatchNormLayer::backward(const Matrix& grad_out, BatchStats stats) {
    if (!cache_) {
        throw StateError("batch-norm backward requires a preceding training-mode forward");
    }
    const Matrix& xhat = cache_->normalized;
    if (!grad_out.same_shape(xhat)) {
        throw ShapeError("batch-norm backward: gradient " + grad_out.shape_string() + " does not match " + xhat.shape_string());
    }

    const std::size_t n = xhat.rows();
    const std::size_t d = xhat.cols();
    std::vector<double> sum_g(d, 0.0), sum_g_xhat(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const auto g = grad_out.row(r);
        const auto xh = xhat.row(r);
        for (std::size_t c = 0; c < d; ++c) {
            sum_g[c] += g[c];
            sum_g_xhat[c] += g[c] * xh[c];
        }
    }

    for (std::size_t c = 0; c < d; ++c) {
        grad_gamma_(0, c) += sum_g_xhat[c];
        grad_beta_(0, c) += sum_g[c];
    }

    Matrix grad_in(n, d);
    if (stats == BatchStats::fixed) {
        for (std::size_t r = 0; r < n; ++r) {
            const auto g = grad_out.row(r);
            auto gi = grad_in.row(r);
            for (std::size_t c = 0; c < d; ++c) {
                gi[c] = gamma_(0, c) * cache_->inv_std[c] * g[c];
            }
        }
        return grad_in;
    }

    // dx = gamma * inv_std / n * (n * g - sum(g) - xhat * sum(g * xhat))
    const double nd = static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto g = grad_out.row(r);
        const auto xh = xhat.row(r);
        auto gi = grad_in.row(r);
        for (std::size_t c = 0; c < d; ++c) {
            const double scale = gamma_(0, c) * cache_->inv_std[c] / nd;
            gi[c] = scale * (nd * g[c] - sum_g[c] - xh[c] * sum_g_xhat[c]);
        }
    }
    return grad_in;
}

void BatchNormLayer::zero_grad() {
    std::fill(grad_gamma_.values().begin(), grad_gamma_.values().end(), 0.0);
    std::fill(grad_beta_.values().begin(), grad_beta_.values().end(), 0.0);
}

void BatchNormLayer::collect(const std::string& prefix, std::vector<ParamRef>& params) {
    params.push_back({prefix + ".gamma", &gamma_, &grad_gamma_});
    params.push_back({prefix + ".beta", &beta_, &grad_beta_});
}

void BatchNormLayer::collect_buffers(const std::string& prefix, std::vector<BufferRef>& buffers) {
    buffers.push_back({prefix + ".running_mean", &running_mean_});
    buffers.push_back({prefix + ".running_var", &running_var_});
}

/*** Activation ***/

double sigmoid(double x) {
    if (x >= 0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Matrix Activation::infer(const Matrix& x) const {
    Matrix out(x.rows(), x.cols());
    auto o = out.values();
    const auto in = x.values();
    if (kind_ == ActivationKind::relu) {
        for (std::size_t i = 0; i < o.size(); ++i) {
            o[i] = in[i] > 0 ? in[i] : 0.0;
        }
    } else {
        for (std::size_t i = 0; i < o.size(); ++i) {
            o[i] = std::clamp(sigmoid(in[i]), sigmoid_clamp, 1.0 - sigmoid_clamp);
        }
    }
    return out;
}

Matrix Activation::forward(const Matrix& x, Mode mode) {
    Matrix out = infer(x);
    if (mode == Mode::infer) {
        cache_.reset();
    } else {
        // ReLU needs the input sign, sigmoid needs its own output.
        cache_ = (kind_ == ActivationKind::relu) ? x : out;
    }
    return out;
}

Matrix Activation::backward(const Matrix& grad_out) {
    if (!cache_) {
        throw StateError("activation backward called without a preceding training-mode forward");
    }
    if (!grad_out.same_shape(*cache_)) {
        throw ShapeError("activation backward: gradient " + grad_out.shape_string() + " does not match " + cache_->shape_string());
    }
    Matrix grad_in(grad_out.rows(), grad_out.cols());
    auto gi = grad_in.values();
    const auto g = grad_out.values();
    const auto cached = cache_->values();
    if (kind_ == ActivationKind::relu) {
        for (std::size_t i = 0; i < gi.size(); ++i) {
            gi[i] = cached[i] > 0 ? g[i] : 0.0;
        }
    } else {
        for (std::size_t i = 0; i < gi.size(); ++i) {
            gi[i] = g[i] * cached[i] * (1.0 - cached[i]);
        }
    }
    return grad_in;
}

}
