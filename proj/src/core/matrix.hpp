// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace duration {

/// Cache-line aligned storage. Vectorized kernels split work into scalar and
/// packet parts by address, so a fixed alignment keeps results reproducible.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlignment{64};

    AlignedAllocator() noexcept = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const noexcept {
        return true;
    }
};

/// Row-major dense matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    Matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values)
        : Matrix(rows, cols, std::vector<double>(values)) {}

    static Matrix scalar(double v) { return Matrix(1, 1, v); }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }
    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    double item() const;  // value of a 1x1 matrix
    void fill(double v);

    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double, AlignedAllocator<double>> values_;
};

std::string shape_string(std::size_t rows, std::size_t cols);
bool all_finite(std::span<const double> values) noexcept;

// Plain kernels shared by the graph primitives and the non-differentiable
// helpers. All of them assume shapes were validated by the caller.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_transpose_a(const Matrix& a, const Matrix& b);  // aᵀ·b
Matrix matmul_transpose_b(const Matrix& a, const Matrix& b);  // a·bᵀ
Matrix transpose(const Matrix& a);
Matrix select_rows(const Matrix& a, std::span<const std::uint32_t> rows);
/// Unbiased covariance of the rows of `a`; the zero matrix when a has one row.
Matrix sample_covariance(const Matrix& a);
/// K_kl = exp(−λ‖a_k − b_l‖²).
Matrix rbf_kernel(const Matrix& a, const Matrix& b, double lambda);
/// Adds the adjoints of rbf_kernel given its output `k` and upstream `g`;
/// either target may be null.
void rbf_backward(const Matrix& a, const Matrix& b, const Matrix& k, const Matrix& g, double lambda, Matrix* da,
                  Matrix* db);

/// Compressed sparse rows: each row is a sparse vector of logical length `width`.
class SparseRows {
public:
    SparseRows() = default;
    explicit SparseRows(std::size_t width) : width_(width) {}

    void append_row(std::span<const std::pair<std::uint32_t, double>> entries);
    void append_row(std::span<const std::uint32_t> indices, std::span<const double> values);

    std::size_t rows() const noexcept { return offsets_.size() - 1; }
    std::size_t width() const noexcept { return width_; }
    std::size_t nonzeros() const noexcept { return indices_.size(); }

    std::span<const std::uint32_t> indices(std::size_t r) const {
        return {indices_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
    }
    std::span<const double> values(std::size_t r) const {
        return {values_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
    }

    /// Rows `picks` of this matrix, in that order.
    SparseRows gather(std::span<const std::uint32_t> picks) const;

private:
    std::size_t width_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<std::uint32_t> indices_;
    std::vector<double> values_;
};

}  // namespace duration
