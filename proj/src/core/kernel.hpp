// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "core/autodiff.hpp"
#include "core/matrix.hpp"

namespace duration {

/// Gaussian RBF kernel exp(-bandwidth * ||x - x'||^2). The mean embedding of a
/// distribution is never formed explicitly; every inner product between
/// embeddings is a mean of kernel values.
struct KernelSpec {
    double bandwidth = 1.0;

    explicit KernelSpec(double lambda);
    double operator()(std::span<const double> x, std::span<const double> y) const;
};

/// P × P matrix of mean pairwise kernel values between sample sets.
struct GramBlock {
    Matrix values;
    std::vector<std::size_t> counts;
};

/// Ĝ_ij = (1 / (N_i N_j)) Σ_k Σ_l κ(x_k^i, x_l^j). Each set is an N_i × d matrix.
GramBlock gram_block(std::span<const Matrix> sets, const KernelSpec& kernel);

/// (1/P) tr(Ĝ) − (1/P²) Σ_ij Ĝ_ij, evaluated directly from the Gram block.
double distributional_variance(std::span<const Matrix> sets, const KernelSpec& kernel);

/// Alignment loss as a graph node: Σ_ijkl A_ijkl with coefficient
/// (P−1)/(P² N_i²) on same-set pairs and −1/(P² N_i N_j) across sets.
NodeId alignment_loss(Graph& graph, std::span<const NodeId> sets, const KernelSpec& kernel);

/// Value-only alignment loss on constant sample sets.
double alignment_loss(std::span<const Matrix> sets, const KernelSpec& kernel);

struct BandwidthChoice {
    double bandwidth = 1.0;
    bool fallback = false;  // set when every pooled sample coincides
};

/// λ = 1 / (2 · median pairwise squared distance) over the pooled samples.
BandwidthChoice median_bandwidth(std::span<const Matrix> sets);

}  // namespace duration
