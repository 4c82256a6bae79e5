// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/encoding.hpp"
#include "core/model.hpp"

namespace duration {

/// Mann–Whitney AUC with average ranks for tied scores. Needs both classes.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct KindReport {
    std::string kind;
    std::size_t count = 0;
    std::size_t positives = 0;
    std::optional<double> auc;  // nullopt when the kind's slice is single-class
};

struct EvalReport {
    std::string split;
    bool cold_start = false;
    std::size_t count = 0;
    double overall_auc = 0.0;
    std::vector<KindReport> kinds;
};

struct EvalOptions {
    SplitTag split = SplitTag::Test;
    bool cold_only = false;  // restrict to users flagged cold by the split
};

/// Scores every interaction of the selected split with the frozen model.
EvalReport evaluate(const DurationModel& model, const HeteroDataset& dataset, const EncodedDataset& data,
                    const EvalOptions& options = {});

struct KMeansResult {
    std::vector<std::uint32_t> assignments;
    Matrix centroids;
    double inertia = 0.0;
    std::size_t iterations = 0;
    std::vector<double> inertia_trace;  // after every assignment pass
};

/// k-means++ seeding, then Lloyd passes until the assignment stops changing.
KMeansResult kmeans(const Matrix& vectors, std::size_t k, std::uint64_t seed, std::size_t max_iter = 100);

struct PairwiseScore {
    std::uint64_t true_positive = 0;
    std::uint64_t false_positive = 0;
    std::uint64_t false_negative = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Pair counts over all unordered item pairs: a pair is positive when both
/// items share a raw cluster and predicted positive when they share a
/// unified cluster.
PairwiseScore pairwise_f1(std::span<const std::uint32_t> raw, std::span<const std::uint32_t> unified);

struct TopologyF1Options {
    std::vector<std::size_t> k_values{5, 10, 20, 50};
    std::vector<std::uint64_t> seeds{0, 1, 2};
    std::size_t max_iter = 100;
};

struct TopologyF1Row {
    std::size_t k = 0;
    std::vector<double> with_topology;  // macro F1 per (model, seed)
    std::vector<double> without_topology;
    double with_median = 0.0;
    double without_median = 0.0;
};

struct TopologyF1Table {
    std::vector<TopologyF1Row> rows;
    std::size_t wins() const noexcept;  // rows where with ≥ without
};

/// Macro pairwise F1, over item kinds, between k-means on the raw encoded
/// attributes and k-means on each model's unified vectors. Every model in
/// `with_topology` and `without_topology` is clustered with every seed.
TopologyF1Table topology_f1_protocol(std::span<const DurationModel* const> with_topology,
                                     std::span<const DurationModel* const> without_topology,
                                     const EncodedDataset& data, const TopologyF1Options& options = {});

double median(std::vector<double> values);

/// Cosine similarity of every row of `a` against every row of `b`. Entries
/// involving a zero vector are NaN.
Matrix similarity_matrix(const Matrix& a, const Matrix& b);

void write_similarity(const Matrix& similarity, std::span<const std::string> row_labels,
                      std::span<const std::string> col_labels, const std::filesystem::path& path);

/// Unified representation of every item: id, kind, coordinates.
void export_embeddings(const DurationModel& model, const HeteroDataset& dataset, const EncodedDataset& data,
                       const std::filesystem::path& path);

}  // namespace duration
