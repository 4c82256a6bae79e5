// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"
#include "core/kernel.hpp"
#include "core/optim.hpp"
#include "core/topology.hpp"

namespace duration {

void ModelConfig::validate() const {
    require(unified_dim > 0, ErrorKind::Config, "model.unified_dim: must be positive");
    require(embedding_dim > 0, ErrorKind::Config, "model.embedding_dim: must be positive");
    for (auto h : mapping_hidden) require(h > 0, ErrorKind::Config, "model.mapping_hidden: sizes must be positive");
    for (auto h : tower_hidden) require(h > 0, ErrorKind::Config, "model.tower_hidden: sizes must be positive");
    require(std::isfinite(alpha) && alpha >= 0.0, ErrorKind::Config, "model.alpha: must be non-negative");
    require(std::isfinite(beta) && beta >= 0.0, ErrorKind::Config, "model.beta: must be non-negative");
    if (bandwidth)
        require(std::isfinite(*bandwidth) && *bandwidth > 0.0, ErrorKind::Config,
                "model.bandwidth: must be positive or \"median\"");
}

DatasetShape DatasetShape::of(const EncodedDataset& data) {
    DatasetShape s;
    s.num_users = data.num_users();
    for (const auto& f : data.item_features) {
        s.kind_items.push_back(f.rows());
        s.kind_widths.push_back(f.cols());
    }
    s.user_width = data.user_features.cols();
    return s;
}

std::size_t DatasetShape::num_items() const noexcept {
    return std::accumulate(kind_items.begin(), kind_items.end(), std::size_t{0});
}

DurationModel DurationModel::create(const ModelConfig& config, const DatasetShape& shape, std::uint64_t seed) {
    config.validate();
    require(!shape.kind_items.empty() && shape.kind_items.size() == shape.kind_widths.size(),
            ErrorKind::InvalidArgument, "dataset shape needs at least one item kind");
    require(shape.num_users > 0 && shape.num_items() > 0, ErrorKind::InvalidArgument,
            "dataset shape needs users and items");
    for (std::size_t p = 0; p < shape.kind_widths.size(); ++p)
        require(shape.kind_widths[p] > 0, ErrorKind::InvalidArgument,
                "item kind " + std::to_string(p) + " has no encoded attributes");
    DurationModel m;
    m.config_ = config;
    m.shape_ = shape;
    m.seed_ = seed;
    std::mt19937_64 rng(seed);
    m.build_layout(rng);
    return m;
}

DurationModel DurationModel::restore(const ModelConfig& config, const DatasetShape& shape, std::uint64_t seed,
                                     ParameterSet values) {
    DurationModel m = create(config, shape, seed);
    require(values.size() == m.params_.size(), ErrorKind::Format,
            "checkpoint has " + std::to_string(values.size()) + " tensors, model expects " +
                std::to_string(m.params_.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        require(values.name(i) == m.params_.name(i) && values[i].same_shape(m.params_[i]), ErrorKind::Format,
                "checkpoint tensor '" + values.name(i) + "' does not match model tensor '" + m.params_.name(i) + "'");
    }
    m.params_ = std::move(values);
    return m;
}

void DurationModel::build_layout(std::mt19937_64& rng) {
    auto dense = [&](const std::string& prefix, std::size_t in, std::size_t out) {
        Layer l;
        l.weight = params_.add(prefix + ".weight", glorot_uniform(in, out, rng));
        l.bias = params_.add(prefix + ".bias", Matrix(1, out));
        return l;
    };

    for (std::size_t p = 0; p < shape_.kind_widths.size(); ++p) {
        std::vector<Layer> layers;
        std::size_t width = shape_.kind_widths[p];
        std::size_t index = 0;
        for (auto h : config_.mapping_hidden) {
            layers.push_back(dense("map." + std::to_string(p) + "." + std::to_string(index++), width, h));
            width = h;
        }
        layers.push_back(dense("map." + std::to_string(p) + "." + std::to_string(index), width, config_.unified_dim));
        mapping_.push_back(std::move(layers));
    }

    auto tower = [&](const std::string& name, std::size_t interaction_width, std::size_t attr_width) {
        Tower t;
        const std::size_t first = config_.tower_hidden.empty() ? config_.embedding_dim : config_.tower_hidden.front();
        // Glorot bounds use the width of the concatenated input.
        Matrix joint = glorot_uniform(interaction_width + attr_width, first, rng);
        Matrix inter(interaction_width, first), attr(attr_width, first);
        for (std::size_t r = 0; r < interaction_width; ++r)
            std::copy(joint.row(r).begin(), joint.row(r).end(), inter.row(r).begin());
        for (std::size_t r = 0; r < attr_width; ++r)
            std::copy(joint.row(interaction_width + r).begin(), joint.row(interaction_width + r).end(),
                      attr.row(r).begin());
        t.interaction_weight = params_.add(name + ".in.interaction_weight", std::move(inter));
        if (attr_width > 0) t.attr_weight = params_.add(name + ".in.attr_weight", std::move(attr));
        t.input_bias = params_.add(name + ".in.bias", Matrix(1, first));
        std::size_t width = first;
        for (std::size_t i = 1; i < config_.tower_hidden.size(); ++i) {
            t.layers.push_back(dense(name + "." + std::to_string(i), width, config_.tower_hidden[i]));
            width = config_.tower_hidden[i];
        }
        if (!config_.tower_hidden.empty())
            t.layers.push_back(dense(name + "." + std::to_string(config_.tower_hidden.size()), width,
                                     config_.embedding_dim));
        return t;
    };
    user_ = tower("user", shape_.num_items(), shape_.user_width);
    item_ = tower("item", shape_.num_users, config_.unified_dim);

    if (config_.topology_mode == TopologyMode::Project) {
        for (auto width : shape_.kind_widths) {
            Matrix q(width, config_.unified_dim);
            std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(width)));
            for (auto& v : q.values()) v = gauss(rng);
            projections_.push_back(std::move(q));
        }
    }
}

NodeId DurationModel::map_items(Graph& graph, std::size_t kind, NodeId attrs) const {
    require(kind < mapping_.size(), ErrorKind::InvalidArgument, "kind index out of range");
    require(graph.cols(attrs) == shape_.kind_widths[kind], ErrorKind::InvalidArgument,
            "kind " + std::to_string(kind) + " attributes have width " + std::to_string(graph.cols(attrs)) +
                ", expected " + std::to_string(shape_.kind_widths[kind]));
    NodeId h = attrs;
    const auto& layers = mapping_[kind];
    for (std::size_t i = 0; i < layers.size(); ++i) {
        h = graph.affine(h, graph.parameter(layers[i].weight), graph.parameter(layers[i].bias));
        if (i + 1 < layers.size()) h = graph.relu(h);
    }
    return h;
}

NodeId DurationModel::run_tower(Graph& graph, const Tower& tower, std::shared_ptr<const SparseRows> interactions,
                                std::optional<NodeId> attrs, bool relu_output) const {
    NodeId h = graph.sparse_matmul(std::move(interactions), graph.parameter(tower.interaction_weight));
    if (tower.attr_weight) {
        require(attrs.has_value(), ErrorKind::InvalidArgument, "tower expects attribute input");
        h = graph.add(h, graph.matmul(*attrs, graph.parameter(*tower.attr_weight)));
    }
    h = graph.add_bias(h, graph.parameter(tower.input_bias));
    for (const auto& layer : tower.layers) {
        h = graph.relu(h);
        h = graph.affine(h, graph.parameter(layer.weight), graph.parameter(layer.bias));
    }
    return relu_output ? graph.relu(h) : h;
}

NodeId DurationModel::item_tower(Graph& graph, std::shared_ptr<const SparseRows> interactions, NodeId mapped) const {
    require(graph.cols(mapped) == config_.unified_dim, ErrorKind::InvalidArgument,
            "item tower expects unified vectors of width " + std::to_string(config_.unified_dim));
    require(interactions && interactions->rows() == graph.rows(mapped), ErrorKind::InvalidArgument,
            "item tower: interaction rows do not match attribute rows");
    return run_tower(graph, item_, std::move(interactions), mapped, false);
}

NodeId DurationModel::user_tower(Graph& graph, std::shared_ptr<const SparseRows> interactions,
                                 std::optional<NodeId> attrs) const {
    if (attrs) {
        require(graph.cols(*attrs) == shape_.user_width, ErrorKind::InvalidArgument,
                "user attributes have the wrong width");
        require(interactions && interactions->rows() == graph.rows(*attrs), ErrorKind::InvalidArgument,
                "user tower: interaction rows do not match attribute rows");
    }
    return run_tower(graph, user_, std::move(interactions), user_.attr_weight ? attrs : std::nullopt, true);
}

Matrix DurationModel::map_items(std::size_t kind, const Matrix& attrs) const {
    Graph graph(params_);
    const NodeId out = map_items(graph, kind, graph.constant(attrs));
    graph.forward();
    return graph.value(out);
}

namespace {

constexpr std::size_t kInferenceChunk = 2048;

template <typename Fn>
Matrix chunked(std::span<const std::uint32_t> ids, std::size_t width, Fn&& run) {
    Matrix out(ids.size(), width);
    for (std::size_t start = 0; start < ids.size(); start += kInferenceChunk) {
        const auto chunk = ids.subspan(start, std::min(kInferenceChunk, ids.size() - start));
        Matrix part = run(chunk);
        std::copy(part.values().begin(), part.values().end(), out.values().begin() + start * width);
    }
    return out;
}

}  // namespace

Matrix DurationModel::item_embeddings(const EncodedDataset& data, std::size_t kind,
                                      std::span<const std::uint32_t> items) const {
    return chunked(items, config_.embedding_dim, [&](std::span<const std::uint32_t> chunk) {
        Graph graph(params_);
        auto rows = std::make_shared<const SparseRows>(data.item_interactions.at(kind).gather(chunk));
        const NodeId mapped = map_items(graph, kind, graph.constant(select_rows(data.item_features.at(kind), chunk)));
        const NodeId out = item_tower(graph, rows, mapped);
        graph.forward();
        return graph.value(out);
    });
}

Matrix DurationModel::user_embeddings(const EncodedDataset& data, std::span<const std::uint32_t> users) const {
    return chunked(users, config_.embedding_dim, [&](std::span<const std::uint32_t> chunk) {
        Graph graph(params_);
        auto rows = std::make_shared<const SparseRows>(data.user_interactions.gather(chunk));
        std::optional<NodeId> attrs;
        if (shape_.user_width > 0) attrs = graph.constant(select_rows(data.user_features, chunk));
        const NodeId out = user_tower(graph, rows, attrs);
        graph.forward();
        return graph.value(out);
    });
}

Matrix DurationModel::topology_view(std::size_t kind, const Matrix& raw) const {
    if (config_.topology_mode == TopologyMode::Pad) return raw;
    return matmul(raw, projections_.at(kind));
}

// ---------------------------------------------------------------------------

double predict(std::span<const double> user, std::span<const double> item) {
    require(user.size() == item.size(), ErrorKind::InvalidArgument,
            "predict: user width " + std::to_string(user.size()) + " vs item width " + std::to_string(item.size()));
    double z = 0.0;
    for (std::size_t j = 0; j < user.size(); ++j) z += user[j] * item[j];
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double bce_loss(std::span<const double> predictions, std::span<const std::uint8_t> labels) {
    require(!predictions.empty(), ErrorKind::InvalidArgument, "bce over an empty batch");
    require(predictions.size() == labels.size(), ErrorKind::InvalidArgument, "bce: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double p = predictions[i];
        require(p > 0.0 && p < 1.0, ErrorKind::InvalidArgument, "bce: predictions must lie in (0, 1)");
        acc += labels[i] ? std::log(p) : std::log1p(-p);
    }
    return -acc / static_cast<double>(predictions.size());
}

double bce_loss_from_logits(std::span<const double> logits, std::span<const std::uint8_t> labels) {
    require(!logits.empty(), ErrorKind::InvalidArgument, "bce over an empty batch");
    require(logits.size() == labels.size(), ErrorKind::InvalidArgument, "bce: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double z = logits[i];
        acc += std::max(z, 0.0) - z * labels[i] + std::log1p(std::exp(-std::abs(z)));
    }
    return acc / static_cast<double>(logits.size());
}

double total_loss(double classification, double alignment, double topology, double alpha, double beta) {
    require(alpha >= 0.0 && beta >= 0.0, ErrorKind::InvalidArgument, "loss weights must be non-negative");
    return classification + alpha * alignment + beta * topology;
}

StepGraph build_step_graph(const BatchBundle& batch, const DurationModel& model, const EncodedDataset& data,
                           const LossWeights& weights) {
    require(!batch.interactions.empty(), ErrorKind::InvalidArgument, "batch has no interactions");
    const std::size_t kinds = model.num_kinds();

    // Group triples by kind so every kind's mapped block is one contiguous slab.
    std::vector<BatchTriple> triples = batch.interactions;
    std::stable_sort(triples.begin(), triples.end(), [](const auto& a, const auto& b) { return a.kind < b.kind; });

    StepGraph sg{Graph(model.params()), {}, {}, {}, {}};
    Graph& g = sg.graph;

    std::vector<std::uint32_t> users;
    Matrix labels(triples.size(), 1);
    auto item_rows = std::make_shared<SparseRows>(data.num_users());
    std::vector<std::vector<std::uint32_t>> items_by_kind(kinds);
    for (std::size_t i = 0; i < triples.size(); ++i) {
        const auto& t = triples[i];
        require(t.kind < kinds, ErrorKind::InvalidArgument, "batch triple references an unknown kind");
        users.push_back(t.user);
        labels[i] = t.label;
        items_by_kind[t.kind].push_back(t.item);
        const auto& rows = data.item_interactions[t.kind];
        item_rows->append_row(rows.indices(t.item), rows.values(t.item));
    }

    auto user_rows = std::make_shared<const SparseRows>(data.user_interactions.gather(users));
    std::optional<NodeId> user_attrs;
    if (data.user_features.cols() > 0) user_attrs = g.constant(select_rows(data.user_features, users));
    const NodeId u = model.user_tower(g, user_rows, user_attrs);

    std::vector<NodeId> mapped_parts;
    for (std::size_t p = 0; p < kinds; ++p) {
        if (items_by_kind[p].empty()) continue;
        mapped_parts.push_back(model.map_items(g, p, g.constant(select_rows(data.item_features[p], items_by_kind[p]))));
    }
    const NodeId mapped = mapped_parts.size() == 1 ? mapped_parts.front() : g.concat_rows(mapped_parts);
    const NodeId x = model.item_tower(g, item_rows, mapped);

    sg.classification = g.bce_with_logits(g.rowwise_dot(u, x), g.constant(std::move(labels)));
    NodeId total = sg.classification;

    if (weights.use_alignment || weights.use_topology) {
        require(batch.kind_samples.size() == kinds, ErrorKind::InvalidArgument,
                "batch needs one item sample per kind");
        std::vector<Matrix> raw;
        std::vector<NodeId> unified;
        for (std::size_t p = 0; p < kinds; ++p) {
            require(!batch.kind_samples[p].empty(), ErrorKind::InvalidArgument,
                    "kind " + std::to_string(p) + " sample is empty");
            Matrix attrs = select_rows(data.item_features[p], batch.kind_samples[p]);
            unified.push_back(model.map_items(g, p, g.constant(attrs)));
            raw.push_back(model.topology_view(p, attrs));
        }
        if (weights.use_alignment) {
            sg.alignment = alignment_loss(g, unified, KernelSpec(weights.bandwidth));
            total = g.add(total, g.scale(*sg.alignment, weights.alpha));
        }
        if (weights.use_topology) {
            sg.topology = topology_loss(g, raw, unified);
            total = g.add(total, g.scale(*sg.topology, weights.beta));
        }
    }
    sg.total = total;
    return sg;
}

}  // namespace duration
