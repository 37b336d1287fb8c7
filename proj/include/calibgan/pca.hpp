#ifndef CALIBGAN_PCA_HPP
#define CALIBGAN_PCA_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "matrix.hpp"

/**
 * @file pca.hpp
 * @brief Principal component analysis for two-dimensional batch-effect diagnostics.
 */

namespace calibgan {

struct PcaModel {
    /** Column means of the training data, 1 x d. */
    Matrix mean;
    /** k x d, orthonormal rows sorted by decreasing explained variance. */
    Matrix components;
    /** Eigenvalues of the sample covariance (divisor n - 1), one per component. */
    std::vector<double> explained_variance;
};

/**
 * Fit the top `k` principal components by eigendecomposition of the sample covariance.
 *
 * The sign of each component is fixed so that its largest-magnitude entry is positive
 * (the first such entry on ties), which makes projections reproducible.
 * Requires at least two rows and `1 <= k <= min(rows - 1, cols)`, otherwise throws `DomainError`.
 */
PcaModel pca_fit(const Matrix& x, std::size_t k);

/** `(x - mean) * components^T`, n x k. */
Matrix pca_project(const PcaModel& model, const Matrix& x);

/** Map projected coordinates back to the original space, n x d. */
Matrix pca_reconstruct(const PcaModel& model, const Matrix& projected);

/**
 * How far apart two labelled groups sit in a low-dimensional embedding.
 * `within_std` is the pooled within-group standard deviation along the unit vector joining the
 * two centroids, so `ratio = centroid_distance / within_std` is large when the groups are visibly separated.
 */
struct Separation {
    double centroid_distance = 0;
    double within_std = 0;
    double ratio = 0;
};

/** `labels[i]` is 0 or 1 for row `i` of `coords`; both groups must be non-empty. */
Separation label_separation(const Matrix& coords, std::span<const int> labels);

}

#endif
