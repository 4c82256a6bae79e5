// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/matrix.hpp"

#include <cmath>

#include <Eigen/Core>

#include "core/error.hpp"

namespace duration {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(values.begin(), values.end()) {
    require(values_.size() == rows_ * cols_, ErrorKind::InvalidArgument,
            "matrix value count " + std::to_string(values_.size()) + " does not match shape " +
                shape_string(rows_, cols_));
}

double Matrix::item() const {
    require(rows_ == 1 && cols_ == 1, ErrorKind::InvalidArgument,
            "item() on non-scalar matrix " + shape_string(rows_, cols_));
    return values_[0];
}

void Matrix::fill(double v) {
    for (auto& x : values_) x = v;
}

std::string shape_string(std::size_t rows, std::size_t cols) {
    return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

bool all_finite(std::span<const double> values) noexcept {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajor> view(const Matrix& m) {
    return {m.values().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

Eigen::Map<RowMajor> view(Matrix& m) {
    return {m.values().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows(), ErrorKind::InvalidArgument,
            "matmul " + shape_string(a.rows(), a.cols()) + " by " + shape_string(b.rows(), b.cols()));
    Matrix out(a.rows(), b.cols());
    if (a.cols() > 0) view(out).noalias() = view(a) * view(b);
    return out;
}

Matrix matmul_transpose_a(const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows(), ErrorKind::InvalidArgument,
            "matmul_transpose_a " + shape_string(a.rows(), a.cols()) + " by " + shape_string(b.rows(), b.cols()));
    Matrix out(a.cols(), b.cols());
    if (a.rows() > 0) view(out).noalias() = view(a).transpose() * view(b);
    return out;
}

Matrix matmul_transpose_b(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.cols(), ErrorKind::InvalidArgument,
            "matmul_transpose_b " + shape_string(a.rows(), a.cols()) + " by " + shape_string(b.rows(), b.cols()));
    Matrix out(a.rows(), b.rows());
    if (a.cols() > 0) view(out).noalias() = view(a) * view(b).transpose();
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Matrix select_rows(const Matrix& a, std::span<const std::uint32_t> rows) {
    Matrix out(rows.size(), a.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto src = a.row(rows[i]);
        auto dst = out.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) dst[j] = src[j];
    }
    return out;
}

Matrix sample_covariance(const Matrix& a) {
    const std::size_t n = a.rows(), d = a.cols();
    Matrix cov(d, d);
    if (n < 2) return cov;
    std::vector<double> mean(d, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < d; ++j) mean[j] += a(r, j);
    for (auto& m : mean) m /= static_cast<double>(n);
    std::vector<double> centered(d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < d; ++j) centered[j] = a(r, j) - mean[j];
        for (std::size_t i = 0; i < d; ++i) {
            const double ci = centered[i];
            if (ci == 0.0) continue;
            double* out = cov.row(i).data();
            for (std::size_t j = 0; j < d; ++j) out[j] += ci * centered[j];
        }
    }
    const double norm = 1.0 / static_cast<double>(n - 1);
    for (auto& v : cov.values()) v *= norm;
    return cov;
}

Matrix rbf_kernel(const Matrix& a, const Matrix& b, double lambda) {
    // Exponentiate in an owned, aligned buffer: on a Map of unaligned storage
    // Eigen picks scalar or packet exp per element by address, so results
    // would depend on where the allocator placed the matrix.
    RowMajor e(a.rows(), b.rows());
    const std::size_t d = a.cols();
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* x = a.row(k).data();
        for (std::size_t l = 0; l < b.rows(); ++l) {
            const double* y = b.row(l).data();
            double dist = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = x[j] - y[j];
                dist += diff * diff;
            }
            e(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = -lambda * dist;
        }
    }
    e.array() = e.array().exp();
    Matrix out(a.rows(), b.rows());
    view(out) = e;
    return out;
}

void rbf_backward(const Matrix& a, const Matrix& b, const Matrix& k, const Matrix& g, double lambda, Matrix* da,
                  Matrix* db) {
    // With W = −2λ (g ∘ K): dA = diag(W 1) A − W B and dB = diag(Wᵀ 1) B − Wᵀ A.
    const RowMajor w = (-2.0 * lambda) * (view(g).array() * view(k).array()).matrix();
    if (da) {
        auto out = view(*da);
        out.noalias() += w.rowwise().sum().asDiagonal() * view(a);
        out.noalias() -= w * view(b);
    }
    if (db) {
        auto out = view(*db);
        out.noalias() += w.colwise().sum().transpose().asDiagonal() * view(b);
        out.noalias() -= w.transpose() * view(a);
    }
}

void SparseRows::append_row(std::span<const std::pair<std::uint32_t, double>> entries) {
    for (const auto& [index, value] : entries) {
        require(index < width_, ErrorKind::InvalidArgument,
                "sparse index " + std::to_string(index) + " out of range " + std::to_string(width_));
        indices_.push_back(index);
        values_.push_back(value);
    }
    offsets_.push_back(indices_.size());
}

void SparseRows::append_row(std::span<const std::uint32_t> indices, std::span<const double> values) {
    require(indices.size() == values.size(), ErrorKind::InvalidArgument,
            "sparse row index/value length mismatch");
    for (std::size_t i = 0; i < indices.size(); ++i) {
        require(indices[i] < width_, ErrorKind::InvalidArgument,
                "sparse index " + std::to_string(indices[i]) + " out of range " +
                    std::to_string(width_));
        indices_.push_back(indices[i]);
        values_.push_back(values[i]);
    }
    offsets_.push_back(indices_.size());
}

SparseRows SparseRows::gather(std::span<const std::uint32_t> picks) const {
    SparseRows out(width_);
    for (auto r : picks) {
        auto idx = indices(r);
        auto val = values(r);
        out.indices_.insert(out.indices_.end(), idx.begin(), idx.end());
        out.values_.insert(out.values_.end(), val.begin(), val.end());
        out.offsets_.push_back(out.indices_.size());
    }
    return out;
}

}  // namespace duration
