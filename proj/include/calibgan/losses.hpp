#ifndef CALIBGAN_LOSSES_HPP
#define CALIBGAN_LOSSES_HPP

#include "matrix.hpp"

/**
 * @file losses.hpp
 * @brief Adversarial objectives and their gradients with respect to discriminator outputs.
 *
 * Inputs are n x 1 columns of discriminator probabilities, which must lie strictly inside (0, 1);
 * anything else throws `NumericError`. Real points carry label 1 and generated points label 0.
 */

namespace calibgan {

/** `-mean(log d_real) - mean(log(1 - d_fake))`, minimized by the discriminator. */
double discriminator_loss(const Matrix& d_real, const Matrix& d_fake);

/** Non-saturating generator objective `-mean(log d_fake)`. */
double generator_loss(const Matrix& d_fake);

/** d(discriminator_loss)/d(d_real) = -1 / (n * d_real). */
Matrix discriminator_loss_grad_real(const Matrix& d_real);

/** d(discriminator_loss)/d(d_fake) = 1 / (n * (1 - d_fake)). */
Matrix discriminator_loss_grad_fake(const Matrix& d_fake);

/** d(generator_loss)/d(d_fake) = -1 / (n * d_fake). */
Matrix generator_loss_grad(const Matrix& d_fake);

}

#endif
