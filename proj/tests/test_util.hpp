#ifndef CALIBGAN_TEST_UTIL_HPP
#define CALIBGAN_TEST_UTIL_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "calibgan/matrix.hpp"
#include "calibgan/random.hpp"

namespace calibgan::test {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double std = 1.0) {
    Rng rng(seed);
    return gaussian_matrix(rows, cols, 0.0, std, rng);
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
    }
    return worst;
}

/** ||a - b|| / max(||a||, ||b||), or 0 when both vanish. */
inline double relative_error(const Matrix& a, const Matrix& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a.values()[i];
        const double y = b.values()[i];
        diff += (x - y) * (x - y);
        na += x * x;
        nb += y * y;
    }
    const double scale = std::sqrt(std::max(na, nb));
    return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

/** Central finite differences of `loss` with respect to every entry of `target`, which `loss` must read. */
inline Matrix numeric_gradient(Matrix& target, const std::function<double()>& loss, double step = 1e-6) {
    Matrix grad(target.rows(), target.cols());
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double saved = target.values()[i];
        target.values()[i] = saved + step;
        const double up = loss();
        target.values()[i] = saved - step;
        const double down = loss();
        target.values()[i] = saved;
        grad.values()[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

/** Sum of `out * weights`, the probe loss for gradient checks. */
inline double weighted_sum(const Matrix& out, const Matrix& weights) {
    double total = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        total += out.values()[i] * weights.values()[i];
    }
    return total;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

/** Fresh, empty directory under the system temp dir. */
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("calibgan_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}

#endif
