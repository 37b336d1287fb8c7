#include "calibgan/losses.hpp"
#include "calibgan/error.hpp"

#include <cmath>

namespace calibgan {

namespace {

void check_probabilities(const Matrix& d, const char* what) {
    if (d.cols() != 1 || d.rows() == 0) {
        throw ShapeError(std::string(what) + ": expected a non-empty n x 1 column, got " + d.shape_string());
    }
    for (std::size_t r = 0; r < d.rows(); ++r) {
        const double p = d(r, 0);
        if (!(p > 0.0 && p < 1.0)) {
            throw NumericError(std::string(what) + ": discriminator output " + std::to_string(p) + " at row " +
                               std::to_string(r) + " is outside (0, 1)");
        }
    }
}

double mean_log(const Matrix& d, bool complement) {
    double acc = 0;
    for (std::size_t r = 0; r < d.rows(); ++r) {
        acc += complement ? std::log1p(-d(r, 0)) : std::log(d(r, 0));
    }
    return acc / static_cast<double>(d.rows());
}

}

double discriminator_loss(const Matrix& d_real, const Matrix& d_fake) {
    check_probabilities(d_real, "discriminator_loss (real)");
    check_probabilities(d_fake, "discriminator_loss (fake)");
    return -mean_log(d_real, false) - mean_log(d_fake, true);
}

double generator_loss(const Matrix& d_fake) {
    check_probabilities(d_fake, "generator_loss");
    return -mean_log(d_fake, false);
}

Matrix discriminator_loss_grad_real(const Matrix& d_real) {
    check_probabilities(d_real, "discriminator_loss_grad_real");
    Matrix g(d_real.rows(), 1);
    const double n = static_cast<double>(d_real.rows());
    for (std::size_t r = 0; r < d_real.rows(); ++r) {
        g(r, 0) = -1.0 / (n * d_real(r, 0));
    }
    return g;
}

Matrix discriminator_loss_grad_fake(const Matrix& d_fake) {
    check_probabilities(d_fake, "discriminator_loss_grad_fake");
    Matrix g(d_fake.rows(), 1);
    const double n = static_cast<double>(d_fake.rows());
    for (std::size_t r = 0; r < d_fake.rows(); ++r) {
        g(r, 0) = 1.0 / (n * (1.0 - d_fake(r, 0)));
    }
    return g;
}

Matrix generator_loss_grad(const Matrix& d_fake) {
    check_probabilities(d_fake, "generator_loss_grad");
    Matrix g(d_fake.rows(), 1);
    const double n = static_cast<double>(d_fake.rows());
    for (std::size_t r = 0; r < d_fake.rows(); ++r) {
        g(r, 0) = -1.0 / (n * d_fake(r, 0));
    }
    return g;
}

}
