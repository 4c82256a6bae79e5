// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/encoding.hpp"
#include "core/model.hpp"
#include "core/optim.hpp"
#include "core/random.hpp"
#include "core/sampling.hpp"

namespace duration {

struct TrainConfig {
    std::size_t batch_size = 1024;
    double learning_rate = 0.001;
    std::size_t max_epochs = 100;
    std::size_t patience = 5;
    std::uint64_t seed = 0;
    std::size_t alignment_batch = 128;  // items drawn per kind for A and T
    bool disable_alignment = false;
    bool disable_topology = false;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

/// Stops after `patience` consecutive epochs without a strict improvement.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience = 5) : patience_(patience) {}

    /// Records the metric of the next epoch; true if it is a new best.
    bool observe(double metric);
    bool should_stop() const noexcept { return stale_ >= patience_; }

    std::size_t patience() const noexcept { return patience_; }
    std::optional<double> best() const noexcept { return best_; }
    std::size_t best_epoch() const noexcept { return best_epoch_; }  // 1-based, 0 before any epoch
    std::size_t stale() const noexcept { return stale_; }
    std::size_t epochs() const noexcept { return epochs_; }

    static EarlyStopping restore(std::size_t patience, std::optional<double> best, std::size_t best_epoch,
                                 std::size_t stale, std::size_t epochs);
    bool operator==(const EarlyStopping&) const = default;

private:
    std::size_t patience_;
    std::optional<double> best_;
    std::size_t best_epoch_ = 0;
    std::size_t stale_ = 0;
    std::size_t epochs_ = 0;
};

/// Everything needed to continue training exactly where it stopped.
struct TrainerState {
    DurationModel model;
    AdamState adam;
    Rng interaction_rng;
    Rng kind_rng;
    std::size_t epoch = 0;  // completed epochs
    std::optional<double> bandwidth;  // resolved on the first step
    bool bandwidth_fallback = false;
    EarlyStopping stopping;

    static TrainerState initial(const ModelConfig& model, const DatasetShape& shape, const TrainConfig& train);
};

struct LossTerms {
    double classification = 0.0;
    double alignment = 0.0;
    double topology = 0.0;
    double total = 0.0;
};

/// Draws the next bundle from the state's sampler streams.
BatchBundle next_bundle(TrainerState& state, InteractionSampler& interactions, KindSampler& kinds,
                        const TrainConfig& config);

/// Freezes the kernel bandwidth: the configured value, else the median
/// heuristic over the mapped kind samples of `bundle`.
void resolve_bandwidth(TrainerState& state, const BatchBundle& bundle, const EncodedDataset& data);

/// Forward, backward and one Adam update. The returned terms are the batch
/// values before the update.
LossTerms step(TrainerState& state, const BatchBundle& bundle, const EncodedDataset& data,
               const TrainConfig& config);

struct EpochRecord {
    std::size_t epoch = 0;
    LossTerms mean;  // averaged over the epoch's steps
    double val_auc = 0.0;
    double best_val_auc = 0.0;
    bool improved = false;
    double wall_time = 0.0;  // seconds since fit started
};

struct FitResult {
    TrainerState last;
    std::optional<TrainerState> best;  // best epoch reached during this call
    std::vector<EpochRecord> log;
    bool stopped_early = false;
    std::optional<std::string> failure;  // numeric-health diagnostic
    std::vector<std::string> warnings;
};

using EpochCallback = std::function<void(const EpochRecord&, const TrainerState& last, bool improved)>;

/// Epoch loop with validation AUC after every epoch and early stopping.
/// Passing a restored state resumes from its epoch counter and streams.
FitResult fit(const HeteroDataset& dataset, const EncodedDataset& data, TrainerState state,
              const TrainConfig& config, const EpochCallback& on_epoch = {});

std::size_t steps_per_epoch(std::size_t train_size, std::size_t batch_size);

}  // namespace duration
