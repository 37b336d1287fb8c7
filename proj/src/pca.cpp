#include "calibgan/pca.hpp"
#include "calibgan/error.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace calibgan {

PcaModel pca_fit(const Matrix& x, std::size_t k) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    if (n < 2) {
        throw DomainError("pca_fit: need at least 2 rows, got " + std::to_string(n));
    }
    if (k == 0 || k > std::min(n - 1, d)) {
        throw DomainError("pca_fit: k = " + std::to_string(k) + " must lie in [1, " + std::to_string(std::min(n - 1, d)) + "]");
    }

    PcaModel model;
    model.mean = reduce(x, Axis::over_rows, Stat::mean);

    Eigen::MatrixXd centered(n, d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            centered(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x(r, c) - model.mean(0, c);
        }
    }
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

    // Eigenvalues come back in increasing order.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw NumericError("pca_fit: eigendecomposition failed");
    }
    const auto& values = solver.eigenvalues();
    const auto& vectors = solver.eigenvectors();

    model.components = Matrix(k, d);
    model.explained_variance.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto col = static_cast<Eigen::Index>(d - 1 - i);
        model.explained_variance[i] = std::max(0.0, values(col));

        Eigen::Index pivot = 0;
        for (Eigen::Index j = 1; j < static_cast<Eigen::Index>(d); ++j) {
            if (std::abs(vectors(j, col)) > std::abs(vectors(pivot, col))) {
                pivot = j;
            }
        }
        const double sign = vectors(pivot, col) < 0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < d; ++j) {
            model.components(i, j) = sign * vectors(static_cast<Eigen::Index>(j), col);
        }
    }
    return model;
}

Matrix pca_project(const PcaModel& model, const Matrix& x) {
    if (x.cols() != model.components.cols()) {
        throw ShapeError("pca_project: input " + x.shape_string() + " does not match model dimension " +
                         std::to_string(model.components.cols()));
    }
    return matmul_bt(elementwise(x, model.mean, ElementOp::sub), model.components);
}

Matrix pca_reconstruct(const PcaModel& model, const Matrix& projected) {
    if (projected.cols() != model.components.rows()) {
        throw ShapeError("pca_reconstruct: coordinates " + projected.shape_string() + " do not match " +
                         std::to_string(model.components.rows()) + " components");
    }
    return elementwise(matmul(projected, model.components), model.mean, ElementOp::add);
}

Separation label_separation(const Matrix& coords, std::span<const int> labels) {
    if (labels.size() != coords.rows()) {
        throw ShapeError("label_separation: " + std::to_string(labels.size()) + " labels for " + coords.shape_string() + " coordinates");
    }
    const std::size_t k = coords.cols();
    std::vector<double> centroid[2] = {std::vector<double>(k, 0.0), std::vector<double>(k, 0.0)};
    std::size_t count[2] = {0, 0};
    for (std::size_t r = 0; r < coords.rows(); ++r) {
        const int label = labels[r];
        if (label != 0 && label != 1) {
            throw DomainError("label_separation: labels must be 0 or 1");
        }
        for (std::size_t c = 0; c < k; ++c) {
            centroid[label][c] += coords(r, c);
        }
        ++count[label];
    }
    if (count[0] == 0 || count[1] == 0) {
        throw DomainError("label_separation: both groups must be non-empty");
    }
    for (int g = 0; g < 2; ++g) {
        for (auto& v : centroid[g]) {
            v /= static_cast<double>(count[g]);
        }
    }

    Separation out;
    std::vector<double> direction(k);
    double dist2 = 0;
    for (std::size_t c = 0; c < k; ++c) {
        direction[c] = centroid[1][c] - centroid[0][c];
        dist2 += direction[c] * direction[c];
    }
    out.centroid_distance = std::sqrt(dist2);
    if (out.centroid_distance == 0) {
        direction.assign(k, 0.0);
        direction[0] = 1.0;
    } else {
        for (auto& v : direction) {
            v /= out.centroid_distance;
        }
    }

    double ss = 0;
    for (std::size_t r = 0; r < coords.rows(); ++r) {
        const int label = labels[r];
        double proj = 0;
        for (std::size_t c = 0; c < k; ++c) {
            proj += (coords(r, c) - centroid[label][c]) * direction[c];
        }
        ss += proj * proj;
    }
    // Pooled variance with one degree of freedom spent per centroid.
    const std::size_t dof = coords.rows() > 2 ? coords.rows() - 2 : 1;
    out.within_std = std::sqrt(ss / static_cast<double>(dof));
    out.ratio = out.within_std > 0 ? out.centroid_distance / out.within_std : INFINITY;
    return out;
}

}
