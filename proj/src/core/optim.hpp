// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

#include "core/autodiff.hpp"

namespace duration {

struct AdamHyper {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    bool operator==(const AdamHyper&) const = default;
};

/// First/second moment estimates for every parameter plus the step counter.
struct AdamState {
    AdamHyper hyper;
    std::uint64_t step = 0;
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;

    static AdamState for_parameters(const ParameterSet& params, AdamHyper hyper = {});
    bool operator==(const AdamState& other) const = default;
};

/// One bias-corrected Adam update. Throws a numeric error, leaving `params`
/// and `state` untouched, if any gradient entry is non-finite.
void adam_step(ParameterSet& params, const Gradients& grads, AdamState& state);

/// Uniform(±sqrt(6 / (fan_in + fan_out))).
Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

}  // namespace duration
