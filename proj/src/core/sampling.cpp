// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/sampling.hpp"

#include "core/error.hpp"

namespace duration {

InteractionSampler::InteractionSampler(const HeteroDataset& dataset, std::uint64_t seed) : rng_(seed) {
    for (const auto& x : dataset.interactions)
        if (x.split == SplitTag::Train) pool_.push_back(BatchTriple{x.user, x.kind, x.item, x.label});
}

std::vector<BatchTriple> InteractionSampler::sample(std::size_t batch_size) {
    require(batch_size >= 1, ErrorKind::InvalidArgument, "batch size must be at least 1");
    require(!pool_.empty(), ErrorKind::State, "train split is empty");
    std::vector<BatchTriple> out;
    out.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) out.push_back(pool_[rng_.index(pool_.size())]);
    return out;
}

KindSampler::KindSampler(const HeteroDataset& dataset, std::uint64_t seed) : rng_(seed) {
    for (const auto& c : dataset.catalogs) catalog_sizes_.push_back(c.items.size());
}

std::vector<std::uint32_t> KindSampler::sample(std::size_t kind, std::size_t batch_size) {
    require(kind < catalog_sizes_.size(), ErrorKind::InvalidArgument, "kind index out of range");
    require(catalog_sizes_[kind] > 0, ErrorKind::State, "catalog " + std::to_string(kind) + " is empty");
    std::vector<std::uint32_t> out;
    out.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i)
        out.push_back(static_cast<std::uint32_t>(rng_.index(catalog_sizes_[kind])));
    return out;
}

}  // namespace duration
