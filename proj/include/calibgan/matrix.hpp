#ifndef CALIBGAN_MATRIX_HPP
#define CALIBGAN_MATRIX_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

/**
 * @file matrix.hpp
 * @brief Dense row-major matrix of doubles and the arithmetic used throughout the library.
 */

namespace calibgan {

/**
 * Dense two-dimensional array of 64-bit floats.
 * Rows are samples and columns are features; values are stored contiguously in row-major order.
 */
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

    /**
     * @param values Row-major values, must have length `rows * cols`.
     */
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    static Matrix from_rows(std::initializer_list<std::initializer_list<double> > rows);
    static Matrix row_vector(std::vector<double> values);
    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    Matrix transpose() const;

    /** "rows x cols", used in error messages. */
    std::string shape_string() const;

    bool same_shape(const Matrix& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/** Standard matrix product; throws `ShapeError` unless `a.cols() == b.rows()`. */
Matrix matmul(const Matrix& a, const Matrix& b);

/** `a * b^T` without materializing the transpose. Requires `a.cols() == b.cols()`. */
Matrix matmul_bt(const Matrix& a, const Matrix& b);

/** `a^T * b` without materializing the transpose. Requires `a.rows() == b.rows()`. */
Matrix matmul_at(const Matrix& a, const Matrix& b);

enum class ElementOp { add, sub, mul, div, max };

/**
 * Apply `op` per element.
 * `b` must either have the same shape as `a`, or be a single row with `a.cols()` columns,
 * in which case it is broadcast across every row of `a`.
 * Division by a zero element throws `NumericError`.
 */
Matrix elementwise(const Matrix& a, const Matrix& b, ElementOp op);

Matrix elementwise(const Matrix& a, double b, ElementOp op);

/**
 * Reduction direction.
 * `over_rows` collapses the row dimension and yields one value per column (1 x cols),
 * `over_cols` yields one value per row (rows x 1), and `all` yields a 1 x 1 matrix.
 */
enum class Axis { over_rows, over_cols, all };

/** Variance uses the biased convention, dividing by the number of reduced elements. */
enum class Stat { sum, mean, var };

/** Throws `DomainError` for an empty matrix. */
Matrix reduce(const Matrix& a, Axis axis, Stat stat);

/** Scalar shorthand for `reduce(a, Axis::all, stat)`. */
double reduce_all(const Matrix& a, Stat stat);

/** Stack `top` above `bottom`; column counts must agree. */
Matrix vstack(const Matrix& top, const Matrix& bottom);

/** Rows `[begin, end)` of `a`. */
Matrix slice_rows(const Matrix& a, std::size_t begin, std::size_t end);

/** Gather rows by index, in the given order. */
Matrix gather_rows(const Matrix& a, std::span<const std::size_t> indices);

/** Throws `NumericError` naming `what` if any entry is NaN or infinite. */
void require_finite(const Matrix& a, const std::string& what);

}

#endif
