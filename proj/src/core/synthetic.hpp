// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/dataset.hpp"

namespace duration {

struct SyntheticKind {
    std::string name;
    std::size_t items = 0;
    double density = 0.0;  // fraction of user × item cells carrying an interaction
    std::size_t numeric_attributes = 0;
    std::size_t categorical_attributes = 0;
    std::size_t cardinality = 5;
};

/// Generator settings. Users and items get N(0, I) latent vectors; every kind
/// observes its items only through its own fixed random nonlinear image of the
/// latent, so the kinds live in different feature spaces while sharing one
/// latent distribution. Labels threshold a noisy user·item latent product.
struct SyntheticConfig {
    std::string name = "synthetic";
    std::vector<SyntheticKind> kinds{
        {"book", 3000, 2.7e-3, 8, 3, 5},
        {"music", 2000, 3.1e-3, 5, 3, 5},
        {"movie", 1000, 8.9e-3, 7, 3, 5},
    };
    std::size_t users = 5000;
    std::size_t latent_dim = 8;
    std::size_t user_attributes = 4;
    double label_noise = 0.5;       // std of the noise added to the latent score
    double attribute_noise = 0.1;   // std of the noise on numeric attributes
    double category_temperature = 0.5;
    /// The first `paired_items` items of every kind share their latent vector
    /// (item i of one kind is the "adaptation" of item i of another).
    std::size_t paired_items = 0;

    void validate() const;
};

HeteroDataset synthesize_dataset(const SyntheticConfig& config, std::uint64_t seed);

}  // namespace duration
