#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace roundtrip {

/// Dense row-major matrix of doubles. Used for batches (one sample per row),
/// weights and Jacobians alike.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    /// Builds from nested rows; rejects ragged input and non-finite entries.
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    /// Validating constructor for data that comes from outside the library.
    static Matrix from_external(std::size_t rows, std::size_t cols, std::vector<double> data);
    static Matrix identity(std::size_t n);
    /// Single-row matrix holding `v`.
    static Matrix row_vector(std::span<const double> v);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    Matrix transposed() const;
    /// Rows selected by index, in the given order.
    Matrix gather_rows(std::span<const std::size_t> indices) const;
    bool all_finite() const noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T
Matrix matmul_bt(const Matrix& a, const Matrix& b);
/// a^T * b
Matrix matmul_at(const Matrix& a, const Matrix& b);

void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

double squared_norm(std::span<const double> v) noexcept;

} // namespace roundtrip
