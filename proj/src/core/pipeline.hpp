// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "core/checkpoint.hpp"
#include "core/config.hpp"
#include "core/dataset.hpp"
#include "core/encoding.hpp"
#include "core/evaluation.hpp"
#include "core/training.hpp"

namespace duration {

/// Synthesizes or loads the dataset named by `source`, without splitting.
HeteroDataset materialize_dataset(const DatasetSource& source);

struct PreparedData {
    HeteroDataset dataset;  // split assigned
    EncodedDataset encoded;
};

PreparedData prepare_data(HeteroDataset dataset, const SplitConfig& split);
PreparedData prepare_data(const RunConfig& config);

/// `{name}-{dataset}-{UTC timestamp}` under the configured output directory.
std::filesystem::path default_run_dir(const RunConfig& config, const std::string& dataset_name);

struct TrainRunResult {
    std::filesystem::path run_dir;
    std::size_t epochs = 0;
    std::size_t best_epoch = 0;
    double best_val_auc = 0.0;
    bool stopped_early = false;
    std::vector<std::string> warnings;
    EvalReport test;  // best checkpoint on the test split
    std::optional<EvalReport> cold;
};

/// Trains into `run_dir`: config.json (resolved), log.jsonl, best/, last/ and
/// summary.json. A numeric-health failure leaves the last good checkpoint in
/// last/ and rethrows.
TrainRunResult train_run(const PreparedData& data, const RunConfig& config, const std::filesystem::path& run_dir);

/// Checkpoint model checked against the prepared dataset's shape.
DurationModel load_model_for(const std::filesystem::path& checkpoint, const PreparedData& data);

}  // namespace duration
