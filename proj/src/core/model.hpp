// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "core/autodiff.hpp"
#include "core/encoding.hpp"
#include "core/sampling.hpp"

namespace duration {

/// How the topology loss compares a d_p-wide raw covariance with the d-wide
/// mapped one: zero-pad both to max(d_p, d), or project the raw features to
/// width d with a fixed random matrix first.
enum class TopologyMode : std::uint8_t { Pad, Project };

struct ModelConfig {
    std::size_t unified_dim = 64;
    std::size_t embedding_dim = 64;
    std::vector<std::size_t> mapping_hidden{128};
    std::vector<std::size_t> tower_hidden{128};
    double alpha = 5e8;
    double beta = 0.001;
    std::optional<double> bandwidth;  // nullopt: median heuristic on the first batch
    TopologyMode topology_mode = TopologyMode::Pad;

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

/// The dataset dimensions a parameter layout depends on.
struct DatasetShape {
    std::size_t num_users = 0;
    std::vector<std::size_t> kind_items;
    std::vector<std::size_t> kind_widths;
    std::size_t user_width = 0;

    static DatasetShape of(const EncodedDataset& data);
    std::size_t num_items() const noexcept;
    bool operator==(const DatasetShape&) const = default;
};

/// Parameters of the two-tower network with one mapping MLP per item kind.
///
///   user  u = ReLU-MLP(Y_u ⊕ user_attrs), ReLU on the output layer too
///   item  x = MLP(Y_x ⊕ f_p(item_attrs)), linear output layer
///   f_p     = MLP(item_attrs) into the unified space of width unified_dim
///
/// The first layer of each tower splits its weight into an interaction block
/// (consumed as a sparse product) and an attribute block; that equals the
/// affine map of the concatenated input.
class DurationModel {
public:
    static DurationModel create(const ModelConfig& config, const DatasetShape& shape, std::uint64_t seed);

    /// Rebuilds the layout and adopts `values`, which must match it name for name.
    static DurationModel restore(const ModelConfig& config, const DatasetShape& shape, std::uint64_t seed,
                                 ParameterSet values);

    const ModelConfig& config() const noexcept { return config_; }
    const DatasetShape& shape() const noexcept { return shape_; }
    std::uint64_t seed() const noexcept { return seed_; }
    ParameterSet& params() noexcept { return params_; }
    const ParameterSet& params() const noexcept { return params_; }
    std::size_t num_kinds() const noexcept { return mapping_.size(); }

    NodeId map_items(Graph& graph, std::size_t kind, NodeId attrs) const;
    NodeId item_tower(Graph& graph, std::shared_ptr<const SparseRows> interactions, NodeId mapped) const;
    NodeId user_tower(Graph& graph, std::shared_ptr<const SparseRows> interactions,
                      std::optional<NodeId> attrs) const;

    /// Unified representation f_p(attrs) of each row of `attrs`.
    Matrix map_items(std::size_t kind, const Matrix& attrs) const;
    /// Item-tower outputs for the listed items of one kind.
    Matrix item_embeddings(const EncodedDataset& data, std::size_t kind, std::span<const std::uint32_t> items) const;
    Matrix user_embeddings(const EncodedDataset& data, std::span<const std::uint32_t> users) const;

    /// Raw features as the topology loss sees them (projected in Project mode).
    Matrix topology_view(std::size_t kind, const Matrix& raw) const;

private:
    struct Layer {
        std::size_t weight = 0;
        std::size_t bias = 0;
    };
    struct Tower {
        std::size_t interaction_weight = 0;
        std::optional<std::size_t> attr_weight;
        std::size_t input_bias = 0;
        std::vector<Layer> layers;  // after the input layer
    };

    DurationModel() = default;
    void build_layout(std::mt19937_64& rng);
    NodeId run_tower(Graph& graph, const Tower& tower, std::shared_ptr<const SparseRows> interactions,
                     std::optional<NodeId> attrs, bool relu_output) const;

    ModelConfig config_;
    DatasetShape shape_;
    std::uint64_t seed_ = 0;
    ParameterSet params_;
    std::vector<std::vector<Layer>> mapping_;
    Tower user_;
    Tower item_;
    std::vector<Matrix> projections_;
};

/// logistic(⟨u, x⟩).
double predict(std::span<const double> user, std::span<const double> item);

/// −(1/n) Σ [y ln ŷ + (1 − y) ln(1 − ŷ)] on probabilities.
double bce_loss(std::span<const double> predictions, std::span<const std::uint8_t> labels);
/// Same loss from logits, without overflow for large |z|.
double bce_loss_from_logits(std::span<const double> logits, std::span<const std::uint8_t> labels);

/// C + αA + βT.
double total_loss(double classification, double alignment, double topology, double alpha, double beta);

struct LossWeights {
    double alpha = 0.0;
    double beta = 0.0;
    bool use_alignment = true;
    bool use_topology = true;
    double bandwidth = 1.0;
};

struct StepGraph {
    Graph graph;
    NodeId total;
    NodeId classification;
    std::optional<NodeId> alignment;
    std::optional<NodeId> topology;
};

/// Graph of C over the batch triples, A over the mapped per-kind samples and
/// T over the same raw/mapped pairs, combined into one scalar L.
StepGraph build_step_graph(const BatchBundle& batch, const DurationModel& model, const EncodedDataset& data,
                           const LossWeights& weights);

}  // namespace duration
