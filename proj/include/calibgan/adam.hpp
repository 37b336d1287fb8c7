#ifndef CALIBGAN_ADAM_HPP
#define CALIBGAN_ADAM_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "layers.hpp"

namespace calibgan {

struct AdamOptions {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    /** L2 penalty folded into the gradient; 0 disables it. */
    double weight_decay = 0.0;
    /** Elementwise gradient clip magnitude; 0 disables it. */
    double clip_value = 0.0;
};

/**
 * Bias-corrected Adam.
 *
 * Moment buffers are created on the first `step()` and matched to parameters by position,
 * so the same parameter list (same order, same shapes) must be passed on every call.
 */
class Adam {
public:
    explicit Adam(AdamOptions options = {});

    const AdamOptions& options() const { return options_; }
    std::size_t steps() const { return step_count_; }

    /**
     * Apply one update to every parameter in place.
     * All gradients are validated before anything is modified; a non-finite gradient entry throws
     * `NumericError` naming the parameter and leaves parameters and moments untouched.
     */
    void step(std::span<const ParamRef> params);

    const std::vector<Matrix>& first_moments() const { return m_; }
    const std::vector<Matrix>& second_moments() const { return v_; }

    /** Reinstate a saved state, e.g. from a checkpoint. */
    void restore(std::size_t steps, std::vector<Matrix> m, std::vector<Matrix> v);

private:
    AdamOptions options_;
    std::size_t step_count_ = 0;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
};

}

#endif
