#include "calibgan/matrix.hpp"
#include "calibgan/error.hpp"

#include <algorithm>
#include <cmath>

namespace calibgan {

namespace {

std::string op_name(ElementOp op) {
    switch (op) {
        case ElementOp::add: return "add";
        case ElementOp::sub: return "sub";
        case ElementOp::mul: return "mul";
        case ElementOp::div: return "div";
        case ElementOp::max: return "max";
    }
    return "?";
}

double apply_op(double x, double y, ElementOp op) {
    switch (op) {
        case ElementOp::add: return x + y;
        case ElementOp::sub: return x - y;
        case ElementOp::mul: return x * y;
        case ElementOp::div:
            if (y == 0.0) {
                throw NumericError("elementwise div: zero divisor element");
            }
            return x / y;
        case ElementOp::max: return std::max(x, y);
    }
    return 0.0;
}

}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill) :
    rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values) :
    rows_(rows), cols_(cols), values_(std::move(values))
{
    if (values_.size() != rows * cols) {
        throw ShapeError("matrix of shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                         " cannot hold " + std::to_string(values_.size()) + " values");
    }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double> > rows) {
    const std::size_t nr = rows.size();
    const std::size_t nc = nr ? rows.begin()->size() : 0;
    std::vector<double> values;
    values.reserve(nr * nc);
    std::size_t r = 0;
    for (const auto& row : rows) {
        if (row.size() != nc) {
            throw ShapeError("ragged initializer: row " + std::to_string(r) + " has " +
                             std::to_string(row.size()) + " values, expected " + std::to_string(nc));
        }
        values.insert(values.end(), row.begin(), row.end());
        ++r;
    }
    return Matrix(nr, nc, std::move(values));
}

Matrix Matrix::row_vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Matrix(1, n, std::move(values));
}

Matrix Matrix::identity(std::size_t n) {
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        out(i, i) = 1.0;
    }
    return out;
}

Matrix Matrix::transpose() const {
    Matrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) {
            out(c, r) = (*this)(r, c);
        }
    }
    return out;
}

std::string Matrix::shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: cannot multiply " + a.shape_string() + " by " + b.shape_string());
    }
    Matrix out(a.rows(), b.cols());
    const std::size_t inner = a.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto orow = out.row(i);
        for (std::size_t k = 0; k < inner; ++k) {
            const double aik = a(i, k);
            const auto brow = b.row(k);
            for (std::size_t j = 0; j < orow.size(); ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    return out;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_bt: cannot multiply " + a.shape_string() + " by transpose of " + b.shape_string());
    }
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto arow = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const auto brow = b.row(j);
            double acc = 0;
            for (std::size_t k = 0; k < arow.size(); ++k) {
                acc += arow[k] * brow[k];
            }
            out(i, j) = acc;
        }
    }
    return out;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("matmul_at: cannot multiply transpose of " + a.shape_string() + " by " + b.shape_string());
    }
    Matrix out(a.cols(), b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto arow = a.row(r);
        const auto brow = b.row(r);
        for (std::size_t i = 0; i < arow.size(); ++i) {
            const double ari = arow[i];
            auto orow = out.row(i);
            for (std::size_t j = 0; j < brow.size(); ++j) {
                orow[j] += ari * brow[j];
            }
        }
    }
    return out;
}

Matrix elementwise(const Matrix& a, const Matrix& b, ElementOp op) {
    Matrix out(a.rows(), a.cols());
    if (a.same_shape(b)) {
        auto ov = out.values();
        auto av = a.values();
        auto bv = b.values();
        for (std::size_t i = 0; i < ov.size(); ++i) {
            ov[i] = apply_op(av[i], bv[i], op);
        }
        return out;
    }
    if (b.rows() == 1 && b.cols() == a.cols()) {
        const auto brow = b.row(0);
        for (std::size_t r = 0; r < a.rows(); ++r) {
            const auto arow = a.row(r);
            auto orow = out.row(r);
            for (std::size_t c = 0; c < arow.size(); ++c) {
                orow[c] = apply_op(arow[c], brow[c], op);
            }
        }
        return out;
    }
    throw ShapeError("elementwise " + op_name(op) + ": incompatible shapes " + a.shape_string() + " and " + b.shape_string());
}

Matrix elementwise(const Matrix& a, double b, ElementOp op) {
    Matrix out(a.rows(), a.cols());
    auto ov = out.values();
    auto av = a.values();
    for (std::size_t i = 0; i < ov.size(); ++i) {
        ov[i] = apply_op(av[i], b, op);
    }
    return out;
}

Matrix reduce(const Matrix& a, Axis axis, Stat stat) {
    if (a.empty()) {
        throw DomainError("reduce: empty matrix (" + a.shape_string() + ")");
    }

    if (axis == Axis::all) {
        const auto v = a.values();
        double sum = 0;
        for (double x : v) {
            sum += x;
        }
        const double n = static_cast<double>(v.size());
        if (stat == Stat::sum) {
            return Matrix(1, 1, sum);
        }
        const double mean = sum / n;
        if (stat == Stat::mean) {
            return Matrix(1, 1, mean);
        }
        double ss = 0;
        for (double x : v) {
            ss += (x - mean) * (x - mean);
        }
        return Matrix(1, 1, ss / n);
    }

    if (axis == Axis::over_rows) {
        Matrix acc(1, a.cols());
        auto av = acc.row(0);
        for (std::size_t r = 0; r < a.rows(); ++r) {
            const auto row = a.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) {
                av[c] += row[c];
            }
        }
        if (stat == Stat::sum) {
            return acc;
        }
        const double n = static_cast<double>(a.rows());
        for (auto& x : av) {
            x /= n;
        }
        if (stat == Stat::mean) {
            return acc;
        }
        Matrix var(1, a.cols());
        auto vv = var.row(0);
        for (std::size_t r = 0; r < a.rows(); ++r) {
            const auto row = a.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) {
                const double dev = row[c] - av[c];
                vv[c] += dev * dev;
            }
        }
        for (auto& x : vv) {
            x /= n;
        }
        return var;
    }

    Matrix out(a.rows(), 1);
    const double n = static_cast<double>(a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto row = a.row(r);
        double sum = 0;
        for (double x : row) {
            sum += x;
        }
        if (stat == Stat::sum) {
            out(r, 0) = sum;
            continue;
        }
        const double mean = sum / n;
        if (stat == Stat::mean) {
            out(r, 0) = mean;
            continue;
        }
        double ss = 0;
        for (double x : row) {
            ss += (x - mean) * (x - mean);
        }
        out(r, 0) = ss / n;
    }
    return out;
}

double reduce_all(const Matrix& a, Stat stat) {
    return reduce(a, Axis::all, stat)(0, 0);
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
    if (top.cols() != bottom.cols()) {
        throw ShapeError("vstack: column mismatch between " + top.shape_string() + " and " + bottom.shape_string());
    }
    std::vector<double> values;
    values.reserve(top.size() + bottom.size());
    values.insert(values.end(), top.values().begin(), top.values().end());
    values.insert(values.end(), bottom.values().begin(), bottom.values().end());
    return Matrix(top.rows() + bottom.rows(), top.cols(), std::move(values));
}

Matrix slice_rows(const Matrix& a, std::size_t begin, std::size_t end) {
    if (begin > end || end > a.rows()) {
        throw ShapeError("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of bounds for " + a.shape_string());
    }
    const auto first = a.values().begin() + static_cast<std::ptrdiff_t>(begin * a.cols());
    const auto last = a.values().begin() + static_cast<std::ptrdiff_t>(end * a.cols());
    return Matrix(end - begin, a.cols(), std::vector<double>(first, last));
}

Matrix gather_rows(const Matrix& a, std::span<const std::size_t> indices) {
    Matrix out(indices.size(), a.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= a.rows()) {
            throw ShapeError("gather_rows: index " + std::to_string(indices[i]) + " out of bounds for " + a.shape_string());
        }
        const auto src = a.row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

void require_finite(const Matrix& a, const std::string& what) {
    const auto v = a.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            const std::size_t c = a.cols() ? a.cols() : 1;
            throw NumericError(what + ": non-finite value at (" + std::to_string(i / c) + ", " + std::to_string(i % c) + ")");
        }
    }
}

}
