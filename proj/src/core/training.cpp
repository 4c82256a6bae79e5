// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "core/error.hpp"
#include "core/evaluation.hpp"
#include "core/kernel.hpp"

namespace duration {

void TrainConfig::validate() const {
    require(batch_size > 0, ErrorKind::Config, "train.batch_size: must be positive");
    require(std::isfinite(learning_rate) && learning_rate >= 0.0, ErrorKind::Config,
            "train.learning_rate: must be non-negative");
    require(max_epochs > 0, ErrorKind::Config, "train.max_epochs: must be positive");
    require(patience > 0, ErrorKind::Config, "train.patience: must be positive");
    require(patience <= max_epochs, ErrorKind::Config, "train.patience: must not exceed train.max_epochs");
    require(alignment_batch > 0, ErrorKind::Config, "train.alignment_batch: must be positive");
}

bool EarlyStopping::observe(double metric) {
    ++epochs_;
    if (!best_ || metric > *best_) {
        best_ = metric;
        best_epoch_ = epochs_;
        stale_ = 0;
        return true;
    }
    ++stale_;
    return false;
}

EarlyStopping EarlyStopping::restore(std::size_t patience, std::optional<double> best, std::size_t best_epoch,
                                     std::size_t stale, std::size_t epochs) {
    require(best_epoch <= epochs && stale <= epochs, ErrorKind::Format, "inconsistent early-stopping counters");
    EarlyStopping s(patience);
    s.best_ = best;
    s.best_epoch_ = best_epoch;
    s.stale_ = stale;
    s.epochs_ = epochs;
    return s;
}

TrainerState TrainerState::initial(const ModelConfig& model, const DatasetShape& shape, const TrainConfig& train) {
    train.validate();
    DurationModel m = DurationModel::create(model, shape, derive_seed(train.seed, 0));
    AdamHyper hyper;
    hyper.learning_rate = train.learning_rate;
    AdamState adam = AdamState::for_parameters(m.params(), hyper);
    return TrainerState{std::move(m),
                        std::move(adam),
                        Rng(interaction_stream_seed(train.seed)),
                        Rng(kind_stream_seed(train.seed)),
                        0,
                        std::nullopt,
                        false,
                        EarlyStopping(train.patience)};
}

namespace {

bool needs_kind_samples(const TrainConfig& config) {
    return !config.disable_alignment || !config.disable_topology;
}

}  // namespace

BatchBundle next_bundle(TrainerState& state, InteractionSampler& interactions, KindSampler& kinds,
                        const TrainConfig& config) {
    BatchBundle bundle;
    interactions.rng() = state.interaction_rng;
    bundle.interactions = interactions.sample(config.batch_size);
    state.interaction_rng = interactions.rng();
    if (needs_kind_samples(config)) {
        kinds.rng() = state.kind_rng;
        for (std::size_t p = 0; p < state.model.num_kinds(); ++p)
            bundle.kind_samples.push_back(kinds.sample(p, config.alignment_batch));
        state.kind_rng = kinds.rng();
    }
    return bundle;
}

void resolve_bandwidth(TrainerState& state, const BatchBundle& bundle, const EncodedDataset& data) {
    if (state.bandwidth) return;
    if (state.model.config().bandwidth) {
        state.bandwidth = *state.model.config().bandwidth;
        return;
    }
    require(bundle.kind_samples.size() == state.model.num_kinds(), ErrorKind::InvalidArgument,
            "median bandwidth needs one item sample per kind");
    std::vector<Matrix> mapped;
    for (std::size_t p = 0; p < bundle.kind_samples.size(); ++p)
        mapped.push_back(state.model.map_items(p, select_rows(data.item_features[p], bundle.kind_samples[p])));
    const BandwidthChoice choice = median_bandwidth(mapped);
    state.bandwidth = choice.bandwidth;
    state.bandwidth_fallback = choice.fallback;
}

LossTerms step(TrainerState& state, const BatchBundle& bundle, const EncodedDataset& data,
               const TrainConfig& config) {
    LossWeights weights;
    weights.alpha = state.model.config().alpha;
    weights.beta = state.model.config().beta;
    weights.use_alignment = !config.disable_alignment;
    weights.use_topology = !config.disable_topology;
    if (weights.use_alignment) {
        resolve_bandwidth(state, bundle, data);
        weights.bandwidth = *state.bandwidth;
    }

    StepGraph sg = build_step_graph(bundle, state.model, data, weights);
    sg.graph.forward();
    LossTerms terms;
    terms.classification = sg.graph.value(sg.classification).item();
    if (sg.alignment) terms.alignment = sg.graph.value(*sg.alignment).item();
    if (sg.topology) terms.topology = sg.graph.value(*sg.topology).item();
    terms.total = sg.graph.value(sg.total).item();
    const Gradients grads = sg.graph.backward(sg.total);
    state.adam.hyper.learning_rate = config.learning_rate;
    adam_step(state.model.params(), grads, state.adam);
    return terms;
}

std::size_t steps_per_epoch(std::size_t train_size, std::size_t batch_size) {
    require(batch_size > 0, ErrorKind::InvalidArgument, "batch size must be positive");
    return (train_size + batch_size - 1) / batch_size;
}

FitResult fit(const HeteroDataset& dataset, const EncodedDataset& data, TrainerState state,
              const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    const SplitCounts counts = count_splits(dataset);
    require(counts.train > 0, ErrorKind::State, "fit needs a non-empty train split");
    require(counts.val > 0, ErrorKind::State, "fit needs a non-empty validation split");
    require(state.model.shape() == DatasetShape::of(data), ErrorKind::State,
            "model was built for a different dataset shape");

    InteractionSampler interactions(dataset, 0);
    KindSampler kinds(dataset, 0);
    const std::size_t steps = steps_per_epoch(interactions.population(), config.batch_size);
    const auto start = std::chrono::steady_clock::now();

    FitResult result{state, std::nullopt, {}, false, std::nullopt, {}};
    while (state.epoch < config.max_epochs && !state.stopping.should_stop()) {
        TrainerState checkpoint = state;
        LossTerms sum;
        try {
            for (std::size_t s = 0; s < steps; ++s) {
                const BatchBundle bundle = next_bundle(state, interactions, kinds, config);
                const LossTerms t = step(state, bundle, data, config);
                sum.classification += t.classification;
                sum.alignment += t.alignment;
                sum.topology += t.topology;
                sum.total += t.total;
            }
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Numeric) throw;
            result.last = std::move(checkpoint);
            result.failure = "epoch " + std::to_string(state.epoch + 1) + ": " + e.what();
            return result;
        }

        EpochRecord record;
        record.epoch = ++state.epoch;
        const double n = static_cast<double>(steps);
        record.mean = {sum.classification / n, sum.alignment / n, sum.topology / n, sum.total / n};
        record.val_auc = evaluate(state.model, dataset, data, {SplitTag::Val, false}).overall_auc;
        record.improved = state.stopping.observe(record.val_auc);
        record.best_val_auc = *state.stopping.best();
        record.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        if (result.log.empty() && state.epoch == 1 && !config.disable_alignment && !config.disable_topology) {
            const double c = record.mean.classification;
            const double a = state.model.config().alpha * record.mean.alignment;
            const double t = state.model.config().beta * record.mean.topology;
            const double hi = std::max({c, a, t});
            const double lo = std::min({c, a, t});
            if (!(lo > 0.0) || hi / lo > 100.0) {
                result.warnings.push_back("loss terms differ by more than two orders of magnitude after epoch 1: C=" +
                                          std::to_string(c) + " alpha*A=" + std::to_string(a) +
                                          " beta*T=" + std::to_string(t));
            }
        }

        result.log.push_back(record);
        if (record.improved) result.best = state;
        result.last = state;
        if (on_epoch) on_epoch(record, state, record.improved);
    }
    result.stopped_early = state.stopping.should_stop();
    result.last = std::move(state);
    return result;
}

}  // namespace duration
