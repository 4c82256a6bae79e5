// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/evaluation.hpp"
#include "core/model.hpp"
#include "core/synthetic.hpp"
#include "core/training.hpp"

namespace duration {

using Json = nlohmann::json;

struct DatasetSource {
    std::optional<SyntheticConfig> synthetic;  // generate instead of loading
    std::uint64_t synthetic_seed = 0;
    std::filesystem::path path;                // dataset directory when not synthetic
    std::optional<std::vector<std::string>> kinds;
};

enum class SplitProtocol : std::uint8_t { Standard, ColdStart };

struct SplitConfig {
    SplitProtocol protocol = SplitProtocol::Standard;
    std::array<double, 3> ratios{0.7, 0.2, 0.1};
    std::uint64_t seed = 0;
    std::size_t cold_cap = 3;
    double cold_fraction = 0.2;
};

struct ExportConfig {
    std::string kind_a;  // empty: first kind
    std::string kind_b;  // empty: last kind
    std::size_t count = 10;
};

struct EvalConfig {
    TopologyF1Options topology;
    ExportConfig similarity;
};

struct RunConfig {
    std::string name = "duration";
    DatasetSource dataset;
    SplitConfig split;
    ModelConfig model;
    TrainConfig train;
    EvalConfig eval;
    std::filesystem::path output_dir = "runs";
    std::optional<std::filesystem::path> run_dir;  // explicit directory instead of a timestamped one
};

/// Strict parsers: unknown keys and ill-typed values raise config errors that
/// name the offending field, e.g. "train.batch_size: expected an integer".
SyntheticConfig parse_synthetic_config(const Json& j, const std::string& where = "synthetic");
ModelConfig parse_model_config(const Json& j, const std::string& where = "model");
TrainConfig parse_train_config(const Json& j, const std::string& where = "train");
RunConfig parse_run_config(const Json& j);

Json to_json(const SyntheticConfig& c);
Json to_json(const ModelConfig& c);
Json to_json(const TrainConfig& c);
Json to_json(const DatasetShape& s);
Json to_json(const RunConfig& c);
Json to_json(const EvalReport& r);
Json to_json(const TopologyF1Table& t);
DatasetShape parse_dataset_shape(const Json& j);

/// Reads a JSON file; relative dataset paths resolve against the file's directory.
Json read_json_file(const std::filesystem::path& path);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace duration
