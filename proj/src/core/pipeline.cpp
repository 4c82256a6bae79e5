// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "core/error.hpp"
#include "core/synthetic.hpp"

namespace duration {

namespace fs = std::filesystem;

HeteroDataset materialize_dataset(const DatasetSource& source) {
    if (source.synthetic) return synthesize_dataset(*source.synthetic, source.synthetic_seed);
    require(!source.path.empty(), ErrorKind::Config, "dataset: no path given");
    return load_dataset(source.path, source.kinds);
}

PreparedData prepare_data(HeteroDataset dataset, const SplitConfig& split_config) {
    if (split_config.protocol == SplitProtocol::ColdStart) {
        ColdStartOptions options;
        options.cap = split_config.cold_cap;
        options.cold_fraction = split_config.cold_fraction;
        options.ratios = split_config.ratios;
        cold_start_split(dataset, split_config.seed, options);
    } else {
        split(dataset, split_config.ratios, split_config.seed);
    }
    EncodedDataset encoded = encode_dataset(dataset);
    return PreparedData{std::move(dataset), std::move(encoded)};
}

PreparedData prepare_data(const RunConfig& config) {
    return prepare_data(materialize_dataset(config.dataset), config.split);
}

fs::path default_run_dir(const RunConfig& config, const std::string& dataset_name) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &utc);
    fs::path dir = config.output_dir / (config.name + "-" + dataset_name + "-" + stamp);
    // Two runs within one second get distinct directories.
    for (int n = 2; fs::exists(dir); ++n)
        dir = config.output_dir / (config.name + "-" + dataset_name + "-" + stamp + "-" + std::to_string(n));
    return dir;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
    require(out.good(), ErrorKind::Io, "cannot write " + path.string());
}

Json epoch_json(const EpochRecord& r) {
    return {{"epoch", r.epoch},
            {"C", r.mean.classification},
            {"A", r.mean.alignment},
            {"T", r.mean.topology},
            {"L", r.mean.total},
            {"val_auc", r.val_auc},
            {"best_val_auc", r.best_val_auc},
            {"wall_time", r.wall_time}};
}

}  // namespace

TrainRunResult train_run(const PreparedData& data, const RunConfig& config, const fs::path& run_dir) {
    config.model.validate();
    config.train.validate();
    std::error_code ec;
    fs::create_directories(run_dir, ec);
    require(!ec, ErrorKind::Io, "cannot create run directory " + run_dir.string() + ": " + ec.message());

    Json resolved = to_json(config);
    resolved.erase("run_dir");
    write_text(run_dir / "config.json", resolved.dump(2) + "\n");

    std::ofstream log(run_dir / "log.jsonl");
    require(log.good(), ErrorKind::Io, "cannot write " + (run_dir / "log.jsonl").string());

    TrainerState initial = TrainerState::initial(config.model, DatasetShape::of(data.encoded), config.train);
    const auto on_epoch = [&](const EpochRecord& record, const TrainerState& last, bool improved) {
        log << epoch_json(record).dump() << '\n';
        log.flush();
        save_checkpoint(run_dir / "last", last, config.train, resolved);
        if (improved) save_checkpoint(run_dir / "best", last, config.train, resolved);
    };
    FitResult fitted = fit(data.dataset, data.encoded, std::move(initial), config.train, on_epoch);

    if (fitted.failure) {
        save_checkpoint(run_dir / "last", fitted.last, config.train, resolved);
        write_text(run_dir / "failure.txt", *fitted.failure + "\n");
        fail(ErrorKind::Numeric, "training aborted, last good checkpoint kept in " + (run_dir / "last").string() +
                                     ": " + *fitted.failure);
    }

    TrainRunResult result;
    result.run_dir = run_dir;
    result.epochs = fitted.last.epoch;
    result.best_epoch = fitted.last.stopping.best_epoch();
    result.best_val_auc = fitted.last.stopping.best().value_or(0.0);
    result.stopped_early = fitted.stopped_early;
    result.warnings = fitted.warnings;

    const DurationModel best = load_checkpoint(run_dir / "best").state.model;
    result.test = evaluate(best, data.dataset, data.encoded, {SplitTag::Test, false});
    if (!data.dataset.cold_users.empty()) result.cold = evaluate(best, data.dataset, data.encoded, {SplitTag::Test, true});

    Json summary = {{"epochs", result.epochs},
                    {"best_epoch", result.best_epoch},
                    {"best_val_auc", result.best_val_auc},
                    {"stopped_early", result.stopped_early},
                    {"warnings", result.warnings},
                    {"test", to_json(result.test)}};
    if (result.cold) summary["cold_test"] = to_json(*result.cold);
    write_text(run_dir / "summary.json", summary.dump(2) + "\n");
    return result;
}

DurationModel load_model_for(const fs::path& checkpoint, const PreparedData& data) {
    DurationModel model = load_checkpoint(checkpoint).state.model;
    require(model.shape() == DatasetShape::of(data.encoded), ErrorKind::State,
            checkpoint.string() + ": checkpoint was trained on a dataset of a different shape");
    return model;
}

}  // namespace duration
