#include "calibgan/adam.hpp"
#include "calibgan/error.hpp"

#include <algorithm>
#include <cmath>

namespace calibgan {

Adam::Adam(AdamOptions options) : options_(options) {
    if (!(options.learning_rate > 0)) {
        throw DomainError("Adam learning rate must be positive");
    }
    if (!(options.beta1 > 0 && options.beta1 < 1) || !(options.beta2 > 0 && options.beta2 < 1)) {
        throw DomainError("Adam betas must lie in (0, 1)");
    }
    if (!(options.epsilon > 0)) {
        throw DomainError("Adam epsilon must be positive");
    }
    if (options.weight_decay < 0 || options.clip_value < 0) {
        throw DomainError("Adam weight decay and clip value must be non-negative");
    }
}

void Adam::step(std::span<const ParamRef> params) {
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(p.value->rows(), p.value->cols());
            v_.emplace_back(p.value->rows(), p.value->cols());
        }
    }
    if (params.size() != m_.size()) {
        throw ShapeError("Adam: expected " + std::to_string(m_.size()) + " parameters, got " + std::to_string(params.size()));
    }

    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        if (!p.value->same_shape(*p.grad) || !p.value->same_shape(m_[i])) {
            throw ShapeError("Adam: parameter '" + p.name + "' has shape " + p.value->shape_string() +
                             " but gradient " + p.grad->shape_string() + " and state " + m_[i].shape_string());
        }
        require_finite(*p.grad, "Adam: gradient of '" + p.name + "'");
    }

    ++step_count_;
    const double b1 = options_.beta1;
    const double b2 = options_.beta2;
    const double t = static_cast<double>(step_count_);
    const double correction1 = 1.0 - std::pow(b1, t);
    const double correction2 = 1.0 - std::pow(b2, t);

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto value = params[i].value->values();
        const auto grad = params[i].grad->values();
        auto m = m_[i].values();
        auto v = v_[i].values();
        for (std::size_t j = 0; j < value.size(); ++j) {
            double g = grad[j];
            if (options_.weight_decay > 0) {
                g += options_.weight_decay * value[j];
            }
            if (options_.clip_value > 0) {
                g = std::clamp(g, -options_.clip_value, options_.clip_value);
            }
            m[j] = b1 * m[j] + (1 - b1) * g;
            v[j] = b2 * v[j] + (1 - b2) * g * g;
            const double m_hat = m[j] / correction1;
            const double v_hat = v[j] / correction2;
            value[j] -= options_.learning_rate * m_hat / (std::sqrt(v_hat) + options_.epsilon);
        }
    }
}

void Adam::restore(std::size_t steps, std::vector<Matrix> m, std::vector<Matrix> v) {
    if (m.size() != v.size()) {
        throw ShapeError("Adam::restore: moment lists differ in length");
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!m[i].same_shape(v[i])) {
            throw ShapeError("Adam::restore: moment shapes differ at index " + std::to_string(i));
        }
    }
    step_count_ = steps;
    m_ = std::move(m);
    v_ = std::move(v);
}

}
