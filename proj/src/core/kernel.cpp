// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace duration {

KernelSpec::KernelSpec(double lambda) : bandwidth(lambda) {
    require(std::isfinite(lambda) && lambda > 0.0, ErrorKind::InvalidArgument,
            "kernel bandwidth must be finite and positive");
}

double KernelSpec::operator()(std::span<const double> x, std::span<const double> y) const {
    double dist = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - y[j];
        dist += d * d;
    }
    return std::exp(-bandwidth * dist);
}

namespace {

void check_sets(std::span<const Matrix> sets) {
    require(!sets.empty(), ErrorKind::InvalidArgument, "at least one sample set is required");
    const std::size_t d = sets.front().cols();
    for (std::size_t i = 0; i < sets.size(); ++i) {
        require(sets[i].rows() > 0, ErrorKind::InvalidArgument, "sample set " + std::to_string(i) + " is empty");
        require(sets[i].cols() == d, ErrorKind::InvalidArgument,
                "sample set " + std::to_string(i) + " has dimension " + std::to_string(sets[i].cols()) +
                    ", expected " + std::to_string(d));
    }
}

}  // namespace

GramBlock gram_block(std::span<const Matrix> sets, const KernelSpec& kernel) {
    check_sets(sets);
    const std::size_t p = sets.size();
    GramBlock g{Matrix(p, p), {}};
    for (const auto& s : sets) g.counts.push_back(s.rows());
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < sets[i].rows(); ++k)
                for (std::size_t l = 0; l < sets[j].rows(); ++l) acc += kernel(sets[i].row(k), sets[j].row(l));
            const double mean =
                acc / (static_cast<double>(sets[i].rows()) * static_cast<double>(sets[j].rows()));
            g.values(i, j) = mean;
            g.values(j, i) = mean;
        }
    }
    return g;
}

double distributional_variance(std::span<const Matrix> sets, const KernelSpec& kernel) {
    const GramBlock g = gram_block(sets, kernel);
    const auto p = static_cast<double>(sets.size());
    double trace = 0.0, total = 0.0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        trace += g.values(i, i);
        for (std::size_t j = 0; j < sets.size(); ++j) total += g.values(i, j);
    }
    return trace / p - total / (p * p);
}

NodeId alignment_loss(Graph& graph, std::span<const NodeId> sets, const KernelSpec& kernel) {
    require(!sets.empty(), ErrorKind::InvalidArgument, "at least one sample set is required");
    const std::size_t p = sets.size();
    const auto pd = static_cast<double>(p);
    for (std::size_t i = 0; i < p; ++i) {
        require(graph.rows(sets[i]) > 0, ErrorKind::InvalidArgument, "sample set " + std::to_string(i) + " is empty");
        require(graph.cols(sets[i]) == graph.cols(sets[0]), ErrorKind::InvalidArgument,
                "sample sets must share one dimension");
    }
    // The (i, j) and (j, i) cross blocks are equal, so each is built once
    // with a doubled coefficient.
    std::vector<NodeId> terms;
    for (std::size_t i = 0; i < p; ++i) {
        const auto ni = static_cast<double>(graph.rows(sets[i]));
        const NodeId same = graph.sum(graph.rbf_pairwise(sets[i], sets[i], kernel.bandwidth));
        terms.push_back(graph.scale(same, (pd - 1.0) / (pd * pd * ni * ni)));
        for (std::size_t j = i + 1; j < p; ++j) {
            const auto nj = static_cast<double>(graph.rows(sets[j]));
            const NodeId cross = graph.sum(graph.rbf_pairwise(sets[i], sets[j], kernel.bandwidth));
            terms.push_back(graph.scale(cross, -2.0 / (pd * pd * ni * nj)));
        }
    }
    NodeId total = terms.front();
    for (std::size_t t = 1; t < terms.size(); ++t) total = graph.add(total, terms[t]);
    return total;
}

double alignment_loss(std::span<const Matrix> sets, const KernelSpec& kernel) {
    check_sets(sets);
    ParameterSet none;
    Graph graph(none);
    std::vector<NodeId> nodes;
    for (const auto& s : sets) nodes.push_back(graph.constant(s));
    const NodeId loss = alignment_loss(graph, nodes, kernel);
    graph.forward();
    return graph.value(loss).item();
}

BandwidthChoice median_bandwidth(std::span<const Matrix> sets) {
    std::vector<std::span<const double>> pooled;
    for (const auto& s : sets)
        for (std::size_t r = 0; r < s.rows(); ++r) pooled.push_back(s.row(r));
    require(pooled.size() >= 2, ErrorKind::InvalidArgument, "median bandwidth needs at least two samples");
    std::vector<double> dists;
    dists.reserve(pooled.size() * (pooled.size() - 1) / 2);
    for (std::size_t a = 0; a < pooled.size(); ++a) {
        for (std::size_t b = a + 1; b < pooled.size(); ++b) {
            require(pooled[a].size() == pooled[b].size(), ErrorKind::InvalidArgument,
                    "sample sets must share one dimension");
            double d = 0.0;
            for (std::size_t j = 0; j < pooled[a].size(); ++j) {
                const double diff = pooled[a][j] - pooled[b][j];
                d += diff * diff;
            }
            dists.push_back(d);
        }
    }
    const std::size_t mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
    double median = dists[mid];
    if (dists.size() % 2 == 0) {
        const double lower = *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (median + lower);
    }
    if (!(median > 0.0) || !std::isfinite(1.0 / (2.0 * median))) return {1.0, true};
    return {1.0 / (2.0 * median), false};
}

}  // namespace duration
