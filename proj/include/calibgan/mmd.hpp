#ifndef CALIBGAN_MMD_HPP
#define CALIBGAN_MMD_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "matrix.hpp"
#include "random.hpp"

/**
 * @file mmd.hpp
 * @brief Maximum mean discrepancy with sums of Gaussian kernels, and the resampling protocol used to report it.
 */

namespace calibgan {

/**
 * Sum of Gaussian kernels `k(x, y) = sum_k exp(-|x - y|^2 / (2 sigma_k^2))`.
 * Every scale must be positive and finite; `k(x, x)` equals the number of scales.
 */
struct KernelSpec {
    std::vector<double> scales;

    /** Throws `DomainError` if the scale list is empty or contains a non-positive value. */
    void validate() const;
};

double gaussian_kernel(std::span<const double> x, std::span<const double> y, const KernelSpec& spec);

enum class Estimator { biased, unbiased };

std::string to_string(Estimator estimator);
Estimator parse_estimator(const std::string& name);

/**
 * Squared MMD between the row sets `x` and `y`.
 *
 * The biased (V-statistic) form averages over all pairs including the diagonal and is non-negative.
 * The unbiased (U-statistic) form drops the diagonal from the within-set means and needs at least
 * two rows per set. Sums run in fixed row-major order, so results are bit-reproducible.
 */
double mmd2_estimate(const Matrix& x, const Matrix& y, const KernelSpec& spec, Estimator estimator = Estimator::biased);

/**
 * Multi-scale kernel from the median heuristic.
 * With `m` the median pairwise Euclidean distance of the pooled rows of `x` and `y`,
 * returns the scales `{m / 2, m, 2 m}`. When the pool exceeds `max_rows`, a subsample
 * of `max_rows` rows is drawn without replacement from `rng`.
 * Throws `DomainError` for fewer than two pooled rows or a zero median.
 */
KernelSpec median_heuristic(const Matrix& x, const Matrix& y, Rng& rng, std::size_t max_rows = 1000);

/** Five-number summary plus mean, with quantiles interpolated linearly between order statistics. */
struct Summary {
    double min = 0;
    double q1 = 0;
    double median = 0;
    double q3 = 0;
    double max = 0;
    double mean = 0;
};

Summary summarize(std::span<const double> values);

/** Linear-interpolation quantile of unsorted data, `p` in [0, 1]. */
double quantile(std::vector<double> values, double p);

struct MmdReport {
    std::size_t repeats = 0;
    std::size_t sample_size = 0;
    /** True if either set had fewer rows than `sample_size`, forcing draws with replacement. */
    bool with_replacement = false;
    Estimator estimator = Estimator::biased;
    KernelSpec kernel;
    std::vector<double> values;
    Summary summary;
};

struct MmdProtocolOptions {
    std::size_t sample_size = 256;
    std::size_t repeats = 100;
    Estimator estimator = Estimator::biased;
};

/**
 * Repeatedly subsample `sample_size` rows from each of `x` and `y` and record the squared MMD of each pair.
 * Repeat `r` draws from its own stream `rng.derive(r)`, so results do not depend on evaluation order.
 */
MmdReport mmd_protocol(const Matrix& x, const Matrix& y, const KernelSpec& spec, const Rng& rng, const MmdProtocolOptions& options = {});

}

#endif
