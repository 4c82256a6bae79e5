// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/topology.hpp"

#include <algorithm>

#include "core/error.hpp"

namespace duration {

Matrix covariance(const Matrix& samples) {
    require(samples.rows() >= 1, ErrorKind::InvalidArgument, "covariance of zero samples");
    return sample_covariance(samples);
}

namespace {

Matrix pad_to(const Matrix& m, std::size_t s) {
    Matrix out(s, s);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
    return out;
}

}  // namespace

CovariancePair padded_covariances(const Matrix& raw, const Matrix& mapped) {
    require(raw.rows() == mapped.rows(), ErrorKind::InvalidArgument,
            "raw and mapped batches need the same sample count");
    const std::size_t s = std::max(raw.cols(), mapped.cols());
    return {pad_to(covariance(raw), s), pad_to(covariance(mapped), s)};
}

NodeId topology_loss(Graph& graph, std::span<const Matrix> raw, std::span<const NodeId> mapped) {
    require(!raw.empty() && raw.size() == mapped.size(), ErrorKind::InvalidArgument,
            "topology loss needs one raw batch per mapped batch");
    std::vector<NodeId> terms;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const std::size_t n = raw[i].rows();
        require(n >= 1, ErrorKind::InvalidArgument, "topology loss on an empty batch");
        require(graph.rows(mapped[i]) == n, ErrorKind::InvalidArgument,
                "kind " + std::to_string(i) + ": raw batch has " + std::to_string(n) +
                    " samples, mapped batch " + std::to_string(graph.rows(mapped[i])));
        const std::size_t s = std::max(raw[i].cols(), graph.cols(mapped[i]));
        const NodeId raw_cov = graph.constant(pad_to(covariance(raw[i]), s));
        const NodeId mapped_cov = graph.pad(graph.covariance(mapped[i]), s, s);
        const NodeId diff = graph.frobenius_sq(graph.subtract(raw_cov, mapped_cov));
        terms.push_back(graph.scale(diff, 1.0 / (4.0 * static_cast<double>(n))));
    }
    NodeId total = terms.front();
    for (std::size_t t = 1; t < terms.size(); ++t) total = graph.add(total, terms[t]);
    return total;
}

double topology_loss(std::span<const Matrix> raw, std::span<const Matrix> mapped) {
    ParameterSet none;
    Graph graph(none);
    std::vector<NodeId> nodes;
    for (const auto& m : mapped) nodes.push_back(graph.constant(m));
    const NodeId loss = topology_loss(graph, raw, nodes);
    graph.forward();
    return graph.value(loss).item();
}

}  // namespace duration
