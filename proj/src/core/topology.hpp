// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "core/autodiff.hpp"
#include "core/matrix.hpp"

namespace duration {

/// C = (1/(n−1)) (DᵀD − (1/n)(1ᵀD)ᵀ(1ᵀD)) over the n rows of `samples`;
/// the zero matrix when n = 1.
Matrix covariance(const Matrix& samples);

/// Raw-side covariance and mapped-side covariance, both zero-padded to a
/// common s × s with s = max(d_raw, d_mapped).
struct CovariancePair {
    Matrix raw;
    Matrix mapped;
};

CovariancePair padded_covariances(const Matrix& raw, const Matrix& mapped);

/// T = Σ_i ‖C_R^i − C_X^i‖²_F / (4 N_i), with the raw side treated as
/// constant data and gradients flowing into the mapped samples only.
NodeId topology_loss(Graph& graph, std::span<const Matrix> raw, std::span<const NodeId> mapped);

/// Value-only topology loss on constant data.
double topology_loss(std::span<const Matrix> raw, std::span<const Matrix> mapped);

}  // namespace duration
