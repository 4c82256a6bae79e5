// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace duration {

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

/// Graph-built alignment loss against the Gram-block distributional variance
/// on random instances (P ∈ {2,3,4}, N_i ∈ [1,32], d ∈ [1,8]).
SuiteResult alignment_oracle_suite(std::uint64_t seed, std::size_t instances = 100);

/// Central finite differences against backward for C, A, T and L on a toy model.
SuiteResult gradient_suite(std::uint64_t seed);

/// A vanishes on identical sets and is bounded below on well-separated ones.
SuiteResult separation_suite(std::uint64_t seed);

/// Rank AUC against direct pair counting on random score/label sets.
SuiteResult auc_oracle_suite(std::uint64_t seed, std::size_t sets = 1000);

std::vector<SuiteResult> run_oracle_checks(std::uint64_t seed);

}  // namespace duration
