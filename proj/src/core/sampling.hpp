// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "core/dataset.hpp"
#include "core/random.hpp"

namespace duration {

struct BatchTriple {
    std::uint32_t user = 0;
    std::uint32_t kind = 0;
    std::uint32_t item = 0;
    std::uint8_t label = 0;

    bool operator==(const BatchTriple&) const = default;
};

/// Inputs of one optimizer step: labelled triples for the classification
/// loss, plus one independent item sample per kind for the alignment and
/// topology losses.
struct BatchBundle {
    std::vector<BatchTriple> interactions;
    std::vector<std::vector<std::uint32_t>> kind_samples;
};

/// Uniform with-replacement draws from the train split.
class InteractionSampler {
public:
    InteractionSampler(const HeteroDataset& dataset, std::uint64_t seed);

    std::vector<BatchTriple> sample(std::size_t batch_size);
    std::size_t population() const noexcept { return pool_.size(); }

    Rng& rng() noexcept { return rng_; }
    const Rng& rng() const noexcept { return rng_; }

private:
    std::vector<BatchTriple> pool_;
    Rng rng_;
};

/// Uniform with-replacement draws from each item catalog.
class KindSampler {
public:
    KindSampler(const HeteroDataset& dataset, std::uint64_t seed);

    std::vector<std::uint32_t> sample(std::size_t kind, std::size_t batch_size);

    Rng& rng() noexcept { return rng_; }
    const Rng& rng() const noexcept { return rng_; }

private:
    std::vector<std::size_t> catalog_sizes_;
    Rng rng_;
};

/// Seeds of the two sampler streams derived from one training seed.
inline std::uint64_t interaction_stream_seed(std::uint64_t seed) { return derive_seed(seed, 1); }
inline std::uint64_t kind_stream_seed(std::uint64_t seed) { return derive_seed(seed, 2); }

}  // namespace duration
