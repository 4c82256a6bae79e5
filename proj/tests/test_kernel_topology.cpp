// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "core/autodiff.hpp"
#include "core/kernel.hpp"
#include "core/random.hpp"
#include "core/topology.hpp"

using namespace duration;

namespace {

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double shift = 0.0) {
    Matrix m(rows, cols);
    for (auto& v : m.values()) v = rng.normal() + shift;
    return m;
}

// Distributional variance written out as the squared distance of every mean
// embedding to the average embedding, expanded into kernel sums.
double variance_by_expansion(const std::vector<Matrix>& sets, const KernelSpec& k) {
    const std::size_t P = sets.size();
    auto mean_kernel = [&](const Matrix& a, const Matrix& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < b.rows(); ++j) s += k(a.row(i), b.row(j));
        return s / static_cast<double>(a.rows() * b.rows());
    };
    double total = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
        double d = mean_kernel(sets[i], sets[i]);
        for (std::size_t j = 0; j < P; ++j) d -= 2.0 / static_cast<double>(P) * mean_kernel(sets[i], sets[j]);
        for (std::size_t j = 0; j < P; ++j)
            for (std::size_t l = 0; l < P; ++l)
                d += mean_kernel(sets[j], sets[l]) / static_cast<double>(P * P);
        total += d;
    }
    return total / static_cast<double>(P);
}

double graph_alignment(const std::vector<Matrix>& sets, const KernelSpec& kernel) {
    ParameterSet none;
    Graph g(none);
    std::vector<NodeId> nodes;
    for (const auto& s : sets) nodes.push_back(g.constant(s));
    const NodeId a = alignment_loss(g, nodes, kernel);
    g.forward();
    return g.value(a).item();
}

}  // namespace

TEST_CASE("gram block") {
    const KernelSpec k(1.0);
    const std::vector<Matrix> one{Matrix(1, 2, {0.3, -1})};
    CHECK(gram_block(one, k).values.item() == 1.0);

    const std::vector<Matrix> pair{Matrix(1, 1, {0}), Matrix(1, 1, {1})};
    const GramBlock g = gram_block(pair, k);
    CHECK(g.values(0, 0) == 1.0);
    CHECK(g.values(1, 1) == 1.0);
    CHECK(g.values(0, 1) == doctest::Approx(std::exp(-1.0)));
    CHECK(g.values(1, 0) == g.values(0, 1));

    Rng rng(2);
    const Matrix s = random_matrix(rng, 4, 3);
    const GramBlock same = gram_block(std::vector<Matrix>{s, s}, k);
    CHECK(same.values(0, 1) == doctest::Approx(same.values(0, 0)).epsilon(1e-15));
    CHECK(same.values(1, 1) == doctest::Approx(same.values(0, 0)).epsilon(1e-15));
    CHECK_THROWS(KernelSpec(0.0));
}

TEST_CASE("distributional variance and alignment loss") {
    const KernelSpec k(1.0);
    const std::vector<Matrix> pair{Matrix(1, 1, {0}), Matrix(1, 1, {1})};
    const double expected = 0.5 * (1.0 - std::exp(-1.0));
    CHECK(distributional_variance(pair, k) == doctest::Approx(expected).epsilon(1e-15));
    CHECK(alignment_loss(pair, k) == doctest::Approx(expected).epsilon(1e-15));
    CHECK(graph_alignment(pair, k) == doctest::Approx(0.3160603).epsilon(1e-7));

    Rng rng(3);
    const Matrix s = random_matrix(rng, 5, 2);
    CHECK(distributional_variance(std::vector<Matrix>{s}, k) == 0.0);
    CHECK(alignment_loss(std::vector<Matrix>{s}, k) == 0.0);
    CHECK(std::abs(distributional_variance(std::vector<Matrix>{s, s}, k)) <= 1e-12);
    CHECK(std::abs(alignment_loss(std::vector<Matrix>{s, s, s}, k)) <= 1e-12);
}

TEST_CASE("alignment loss agrees with the expanded variance on random sets") {
    Rng rng(4);
    for (int t = 0; t < 50; ++t) {
        const std::size_t P = 2 + rng.index(3), d = 1 + rng.index(8);
        const KernelSpec k(rng.uniform(0.05, 2.0));
        std::vector<Matrix> sets;
        for (std::size_t p = 0; p < P; ++p) sets.push_back(random_matrix(rng, 1 + rng.index(12), d, 0.4 * p));
        const double oracle = variance_by_expansion(sets, k);
        CHECK(graph_alignment(sets, k) == doctest::Approx(oracle).epsilon(1e-10));
        CHECK(distributional_variance(sets, k) == doctest::Approx(oracle).epsilon(1e-10));
        CHECK(oracle >= -1e-12);
    }
}

TEST_CASE("alignment gradient flows into the sample sets") {
    Rng rng(5);
    ParameterSet params;
    const std::size_t a = params.add("a", random_matrix(rng, 3, 2));
    const std::size_t b = params.add("b", random_matrix(rng, 4, 2, 0.5));
    Graph g(params);
    const NodeId sets[] = {g.parameter(a), g.parameter(b)};
    const NodeId loss = alignment_loss(g, sets, KernelSpec(0.7));
    const auto report = finite_diff_check(g, loss, params);
    CHECK(report.passed());
    CHECK(report.checked == 14);
}

TEST_CASE("median bandwidth") {
    const std::vector<Matrix> sets{Matrix(1, 1, {0}), Matrix(1, 1, {2})};
    const BandwidthChoice c = median_bandwidth(sets);
    CHECK(c.bandwidth == 0.125);
    CHECK_FALSE(c.fallback);

    const std::vector<Matrix> flat{Matrix(2, 2, 1.0), Matrix(1, 2, 1.0)};
    const BandwidthChoice f = median_bandwidth(flat);
    CHECK(f.bandwidth == 1.0);
    CHECK(f.fallback);
}

TEST_CASE("covariance") {
    CHECK(covariance(Matrix(1, 3, {1, 2, 3})) == Matrix(3, 3));
    CHECK(covariance(Matrix(2, 1, {0, 2})) == Matrix(1, 1, {2.0}));
    const Matrix c = covariance(Matrix(3, 2, {1, 5, 2, 5, 4, 5}));
    CHECK(c(0, 1) == 0.0);
    CHECK(c(1, 0) == 0.0);
    CHECK(c(1, 1) == 0.0);
    CHECK(c(0, 0) == doctest::Approx(7.0 / 3.0));

    Rng rng(6);
    const Matrix x = random_matrix(rng, 6, 3);
    const Matrix ref = sample_covariance(x);
    const Matrix got = covariance(x);
    for (std::size_t i = 0; i < 9; ++i) CHECK(got[i] == doctest::Approx(ref[i]).epsilon(1e-12));

    const CovariancePair padded = padded_covariances(Matrix(6, 2, 1.0), x);
    CHECK(padded.raw.rows() == 3);
    CHECK(padded.mapped.cols() == 3);
}

TEST_CASE("topology loss") {
    const Matrix raw(2, 1, {0, 2}), mapped(2, 1, {0, 1});
    CHECK(topology_loss(std::vector<Matrix>{raw}, std::vector<Matrix>{mapped}) == doctest::Approx(0.28125));
    CHECK(topology_loss(std::vector<Matrix>{raw}, std::vector<Matrix>{raw}) == 0.0);
    CHECK(topology_loss(std::vector<Matrix>{Matrix(1, 3, 2.0)}, std::vector<Matrix>{Matrix(1, 2, 5.0)}) == 0.0);

    SUBCASE("graph node matches and differentiates into the mapped side") {
        Rng rng(7);
        ParameterSet params;
        const std::size_t m0 = params.add("m0", random_matrix(rng, 5, 3));
        const std::size_t m1 = params.add("m1", random_matrix(rng, 4, 3));
        const std::vector<Matrix> raws{random_matrix(rng, 5, 2), random_matrix(rng, 4, 4)};
        Graph g(params);
        const NodeId mapped_nodes[] = {g.parameter(m0), g.parameter(m1)};
        const NodeId t = topology_loss(g, raws, mapped_nodes);
        g.forward();
        const double value = topology_loss(raws, std::vector<Matrix>{params[m0], params[m1]});
        CHECK(g.value(t).item() == doctest::Approx(value).epsilon(1e-12));
        CHECK(finite_diff_check(g, t, params).passed());
    }
}
