// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "core/config.hpp"
#include "core/training.hpp"

namespace duration {

inline constexpr int kCheckpointVersion = 1;

/// Checkpoint directory layout:
///
///   manifest.json  format version, ordered tensor list (name, shape,
///                  "f64le"), configs, epoch and early-stopping counters,
///                  Adam step, sampler streams, resolved bandwidth, and the
///                  FNV-1a hash of weights.bin
///   weights.bin    parameters, then Adam first and second moments, as
///                  little-endian 64-bit floats in manifest order
struct LoadedCheckpoint {
    TrainerState state;
    TrainConfig train;
    Json run_config;  // null when the writer supplied none
};

/// Writes into a sibling temporary directory, then swaps it into place.
void save_checkpoint(const std::filesystem::path& dir, const TrainerState& state, const TrainConfig& train,
                     const Json& run_config = nullptr);

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace duration
