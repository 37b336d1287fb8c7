#include "calibgan/mmd.hpp"
#include "calibgan/error.hpp"

#include <algorithm>
#include <cmath>

namespace calibgan {

void KernelSpec::validate() const {
    if (scales.empty()) {
        throw DomainError("kernel spec needs at least one scale");
    }
    for (double s : scales) {
        if (!(s > 0) || !std::isfinite(s)) {
            throw DomainError("kernel scales must be positive and finite, got " + std::to_string(s));
        }
    }
}

namespace {

double squared_distance(std::span<const double> x, std::span<const double> y) {
    double acc = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x[i] - y[i];
        acc += diff * diff;
    }
    return acc;
}

// Precomputed -1 / (2 sigma^2) for each scale.
std::vector<double> kernel_coefficients(const KernelSpec& spec) {
    std::vector<double> coef;
    coef.reserve(spec.scales.size());
    for (double s : spec.scales) {
        coef.push_back(-1.0 / (2.0 * s * s));
    }
    return coef;
}

double kernel_from_distance(double d2, const std::vector<double>& coef) {
    double acc = 0;
    for (double c : coef) {
        acc += std::exp(c * d2);
    }
    return acc;
}

// Sum of k(a_i, b_j) over all pairs, optionally skipping i == j.
double kernel_sum(const Matrix& a, const Matrix& b, const std::vector<double>& coef, bool skip_diagonal) {
    double acc = 0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto ai = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            if (skip_diagonal && i == j) {
                continue;
            }
            acc += kernel_from_distance(squared_distance(ai, b.row(j)), coef);
        }
    }
    return acc;
}


}

double gaussian_kernel(std::span<const double> x, std::span<const double> y, const KernelSpec& spec) {
    if (x.size() != y.size()) {
        throw ShapeError("gaussian_kernel: points have " + std::to_string(x.size()) + " and " + std::to_string(y.size()) + " dimensions");
    }
    spec.validate();
    return kernel_from_distance(squared_distance(x, y), kernel_coefficients(spec));
}

std::string to_string(Estimator estimator) {
    return estimator == Estimator::biased ? "biased" : "unbiased";
}

Estimator parse_estimator(const std::string& name) {
    if (name == "biased") {
        return Estimator::biased;
    }
    if (name == "unbiased") {
        return Estimator::unbiased;
    }
    throw ConfigError("unknown estimator '" + name + "', expected 'biased' or 'unbiased'");
}

double mmd2_estimate(const Matrix& x, const Matrix& y, const KernelSpec& spec, Estimator estimator) {
    if (x.rows() == 0 || y.rows() == 0) {
        throw DomainError("mmd2_estimate: empty input (" + x.shape_string() + ", " + y.shape_string() + ")");
    }
    if (x.cols() != y.cols()) {
        throw ShapeError("mmd2_estimate: column mismatch between " + x.shape_string() + " and " + y.shape_string());
    }
    spec.validate();
    const auto coef = kernel_coefficients(spec);
    const double n = static_cast<double>(x.rows());
    const double m = static_cast<double>(y.rows());
    const double cross = kernel_sum(x, y, coef, false) / (n * m);

    if (estimator == Estimator::biased) {
        // Full double loops in the same order as the cross term, so identical inputs cancel exactly.
        const double xx = kernel_sum(x, x, coef, false) / (n * n);
        const double yy = kernel_sum(y, y, coef, false) / (m * m);
        // The V-statistic is a squared RKHS norm; clamp rounding noise below zero.
        return std::max(0.0, xx + yy - 2 * cross);
    }

    if (x.rows() < 2 || y.rows() < 2) {
        throw DomainError("mmd2_estimate: the unbiased estimator needs at least 2 rows per set");
    }
    const double xx = kernel_sum(x, x, coef, true) / (n * (n - 1));
    const double yy = kernel_sum(y, y, coef, true) / (m * (m - 1));
    return xx + yy - 2 * cross;
}

KernelSpec median_heuristic(const Matrix& x, const Matrix& y, Rng& rng, std::size_t max_rows) {
    if (x.cols() != y.cols()) {
        throw ShapeError("median_heuristic: column mismatch between " + x.shape_string() + " and " + y.shape_string());
    }
    Matrix pooled = vstack(x, y);
    if (pooled.rows() < 2) {
        throw DomainError("median_heuristic: need at least 2 pooled rows, got " + std::to_string(pooled.rows()));
    }
    if (max_rows >= 2 && pooled.rows() > max_rows) {
        pooled = sample_rows(pooled, max_rows, rng);
    }

    std::vector<double> distances;
    distances.reserve(pooled.rows() * (pooled.rows() - 1) / 2);
    for (std::size_t i = 0; i < pooled.rows(); ++i) {
        for (std::size_t j = i + 1; j < pooled.rows(); ++j) {
            distances.push_back(std::sqrt(squared_distance(pooled.row(i), pooled.row(j))));
        }
    }

    const double median = quantile(std::move(distances), 0.5);
    if (!(median > 0)) {
        throw DomainError("median_heuristic: median pairwise distance is zero (identical rows); pass explicit kernel scales");
    }
    return KernelSpec{{median / 2, median, 2 * median}};
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) {
        throw DomainError("quantile of an empty sample");
    }
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
    const double lower = values[lo];
    if (hi == lo) {
        return lower;
    }
    const double upper = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
    return lower + (upper - lower) * (pos - static_cast<double>(lo));
}

Summary summarize(std::span<const double> values) {
    if (values.empty()) {
        throw DomainError("summarize: empty sample");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    Summary s;
    s.min = sorted.front();
    s.max = sorted.back();
    s.q1 = quantile(sorted, 0.25);
    s.median = quantile(sorted, 0.5);
    s.q3 = quantile(sorted, 0.75);
    double acc = 0;
    for (double v : sorted) {
        acc += v;
    }
    s.mean = acc / static_cast<double>(sorted.size());
    return s;
}

MmdReport mmd_protocol(const Matrix& x, const Matrix& y, const KernelSpec& spec, const Rng& rng, const MmdProtocolOptions& options) {
    if (options.repeats == 0 || options.sample_size == 0) {
        throw DomainError("mmd_protocol: repeats and sample_size must be positive");
    }
    if (x.cols() != y.cols()) {
        throw ShapeError("mmd_protocol: column mismatch between " + x.shape_string() + " and " + y.shape_string());
    }
    spec.validate();

    MmdReport report;
    report.repeats = options.repeats;
    report.sample_size = options.sample_size;
    report.with_replacement = options.sample_size > x.rows() || options.sample_size > y.rows();
    report.estimator = options.estimator;
    report.kernel = spec;
    report.values.reserve(options.repeats);

    for (std::size_t r = 0; r < options.repeats; ++r) {
        Rng stream = rng.derive(r);
        const Matrix xs = sample_rows(x, options.sample_size, stream);
        const Matrix ys = sample_rows(y, options.sample_size, stream);
        report.values.push_back(mmd2_estimate(xs, ys, spec, options.estimator));
    }
    report.summary = summarize(report.values);
    return report;
}

}
