// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "core/evaluation.hpp"
#include "core/random.hpp"
#include "core/synthetic.hpp"
#include "core/training.hpp"
#include "helpers.hpp"

using namespace duration;
using duration::testing::TempDir;

namespace {

double pair_count_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
    double pairs = 0.0, wins = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] && !y[j]) {
                pairs += 1.0;
                wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
            }
    return wins / pairs;
}

// Pair-level F1 by enumerating every unordered pair.
double brute_f1(const std::vector<std::uint32_t>& raw, const std::vector<std::uint32_t>& uni) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < raw.size(); ++i)
        for (std::size_t j = i + 1; j < raw.size(); ++j) {
            const bool truth = raw[i] == raw[j], guess = uni[i] == uni[j];
            tp += truth && guess;
            fp += !truth && guess;
            fn += truth && !guess;
        }
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0, r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

ModelConfig small_model() {
    ModelConfig m;
    m.unified_dim = 6;
    m.embedding_dim = 6;
    m.mapping_hidden = {8};
    m.tower_hidden = {8};
    m.alpha = 1.0;
    m.beta = 0.1;
    return m;
}

}  // namespace

TEST_CASE("auc examples") {
    const double s1[] = {0.9, 0.8, 0.1};
    const std::uint8_t y1[] = {1, 0, 0};
    CHECK(auc(s1, y1) == 1.0);
    const double s2[] = {0.5, 0.5};
    const std::uint8_t y2[] = {1, 0};
    CHECK(auc(s2, y2) == 0.5);
    const double s3[] = {0.1, 0.4, 0.35, 0.8};
    const std::uint8_t y3[] = {0, 0, 1, 1};
    CHECK(auc(s3, y3) == 0.75);
    const std::uint8_t all_pos[] = {1, 1};
    CHECK_THROWS_AS(auc(s2, all_pos), Error);
    const double nan_scores[] = {NAN, 0.1};
    CHECK_THROWS_AS(auc(nan_scores, y2), Error);
}

TEST_CASE("auc matches pair counting on random tied sets") {
    Rng rng(8);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 2 + rng.index(120);
        std::vector<double> s(n);
        std::vector<std::uint8_t> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng.index(8));
            y[i] = rng.uniform() < 0.5;
        }
        y[0] = 1;
        y[1] = 0;
        CHECK(std::abs(auc(s, y) - pair_count_auc(s, y)) <= 1e-12);
        // Monotone transforms of the scores leave the AUC unchanged.
        std::vector<double> shifted = s;
        for (auto& v : shifted) v = std::exp(v) - 3.0;
        CHECK(auc(shifted, y) == auc(s, y));
    }
}

TEST_CASE("evaluate") {
    HeteroDataset ds = synthesize_dataset(SyntheticConfig{}, 3);
    cold_start_split(ds, 3, {});
    const EncodedDataset data = encode_dataset(ds);

    SUBCASE("untrained models score near chance") {
        std::vector<double> aucs;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const DurationModel m = DurationModel::create(small_model(), DatasetShape::of(data), seed);
            aucs.push_back(evaluate(m, ds, data).overall_auc);
        }
        CHECK(median(aucs) >= 0.45);
        CHECK(median(aucs) <= 0.55);
    }
    SUBCASE("report layout and determinism") {
        const DurationModel m = DurationModel::create(small_model(), DatasetShape::of(data), 1);
        const EvalReport a = evaluate(m, ds, data);
        const EvalReport b = evaluate(m, ds, data);
        CHECK(a.split == "test");
        REQUIRE(a.kinds.size() == 3);
        CHECK(a.kinds[0].kind == "book");
        CHECK(a.kinds[2].kind == "movie");
        std::size_t total = 0;
        for (const auto& k : a.kinds) total += k.count;
        CHECK(total == a.count);
        CHECK(a.overall_auc == b.overall_auc);

        const EvalReport cold = evaluate(m, ds, data, {SplitTag::Test, true});
        CHECK(cold.cold_start);
        CHECK(cold.count < a.count);
        CHECK(cold.count > 0);
    }
    SUBCASE("cold-only needs a cold-start split") {
        HeteroDataset plain = ds;
        split(plain, {0.7, 0.2, 0.1}, 0);
        const DurationModel m = DurationModel::create(small_model(), DatasetShape::of(data), 1);
        CHECK_THROWS_AS(evaluate(m, plain, data, {SplitTag::Test, true}), Error);
    }
}

TEST_CASE("kmeans") {
    const Matrix pts(4, 2, {0, 0, 0.1, 0, 10, 10, 10.1, 10});
    const KMeansResult r = kmeans(pts, 2, 0);
    CHECK(r.assignments[0] == r.assignments[1]);
    CHECK(r.assignments[2] == r.assignments[3]);
    CHECK(r.assignments[0] != r.assignments[2]);
    CHECK(r.inertia == doctest::Approx(4 * 0.05 * 0.05));

    const KMeansResult own = kmeans(pts, 4, 1);
    CHECK(own.inertia == 0.0);

    const Matrix dup(5, 1, {1, 1, 5, 5, 9});
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const KMeansResult d = kmeans(dup, 3, seed);
        CHECK(d.assignments[0] == d.assignments[1]);
        CHECK(d.assignments[2] == d.assignments[3]);
    }
    CHECK_THROWS_AS(kmeans(pts, 5, 0), Error);
    CHECK_THROWS_AS(kmeans(pts, 0, 0), Error);

    SUBCASE("inertia never increases across Lloyd passes") {
        Rng rng(2);
        Matrix cloud(200, 3);
        for (auto& v : cloud.values()) v = rng.normal();
        const KMeansResult c = kmeans(cloud, 7, 4);
        for (std::size_t i = 1; i < c.inertia_trace.size(); ++i)
            CHECK(c.inertia_trace[i] <= c.inertia_trace[i - 1] + 1e-9);
        CHECK(kmeans(cloud, 7, 4).assignments == c.assignments);
    }
}

TEST_CASE("pairwise f1") {
    const std::vector<std::uint32_t> raw{0, 0, 1}, one{0, 0, 0};
    const PairwiseScore s = pairwise_f1(raw, one);
    CHECK(s.true_positive == 1);
    CHECK(s.false_positive == 2);
    CHECK(s.false_negative == 0);
    CHECK(s.precision == doctest::Approx(1.0 / 3.0));
    CHECK(s.recall == 1.0);
    CHECK(s.f1 == doctest::Approx(0.5));

    CHECK(pairwise_f1(raw, raw).f1 == 1.0);
    const std::vector<std::uint32_t> lumped{0, 0, 0, 0}, singletons{0, 1, 2, 3};
    const PairwiseScore degenerate = pairwise_f1(lumped, singletons);
    CHECK(degenerate.recall == 0.0);
    CHECK(degenerate.f1 == 0.0);

    Rng rng(9);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 2 + rng.index(40);
        std::vector<std::uint32_t> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<std::uint32_t>(rng.index(4));
            b[i] = static_cast<std::uint32_t>(rng.index(5));
        }
        CHECK(pairwise_f1(a, b).f1 == doctest::Approx(brute_f1(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("topology f1 protocol") {
    HeteroDataset ds = synthesize_dataset(testing::toy_synthetic(20), 4);
    split(ds, {0.7, 0.2, 0.1}, 4);
    const EncodedDataset data = encode_dataset(ds);
    const DurationModel a = DurationModel::create(small_model(), DatasetShape::of(data), 1);
    const DurationModel b = DurationModel::create(small_model(), DatasetShape::of(data), 2);
    const DurationModel* with[] = {&a};
    const DurationModel* without[] = {&b};

    TopologyF1Options opts;
    opts.k_values = {1, 2, 3};
    const TopologyF1Table t = topology_f1_protocol(with, without, data, opts);
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[0].with_median == 1.0);
    CHECK(t.rows[0].without_median == 1.0);
    CHECK(t.rows[1].with_topology.size() == 3);

    const DurationModel* same[] = {&a};
    const TopologyF1Table twin = topology_f1_protocol(with, same, data, opts);
    for (const auto& row : twin.rows) CHECK(row.with_topology == row.without_topology);
    CHECK(twin.wins() == 3);
}

TEST_CASE("similarity") {
    const Matrix a(3, 2, {1, 0, 0, 2, 0, 0});
    const Matrix s = similarity_matrix(a, a);
    CHECK(s(0, 0) == 1.0);
    CHECK(s(1, 1) == 1.0);
    CHECK(s(0, 1) == 0.0);
    CHECK(std::isnan(s(2, 0)));
    CHECK_THROWS_AS(similarity_matrix(a, Matrix(1, 3)), Error);

    TempDir dir;
    const std::vector<std::string> labels{"p", "q", "r"};
    write_similarity(s, labels, labels, dir / "sim.tsv");
    std::istringstream in(testing::read_file(dir / "sim.tsv"));
    std::string header, first, last;
    std::getline(in, header);
    std::getline(in, first);
    std::getline(in, last);
    std::getline(in, last);
    CHECK(header == "id\tp\tq\tr");
    CHECK(first == "p\t1\t0\tNA");
    CHECK(last.rfind("r\tNA", 0) == 0);
}

TEST_CASE("paired items end up closest to their counterpart") {
    SyntheticConfig c = testing::toy_synthetic(300);
    c.latent_dim = 4;
    c.kinds = {{"book", 60, 0.05, 6, 0, 2}, {"movie", 60, 0.05, 6, 0, 2}};
    c.paired_items = 60;
    c.attribute_noise = 0.02;
    HeteroDataset ds = synthesize_dataset(c, 5);
    split(ds, {0.8, 0.1, 0.1}, 5);
    const EncodedDataset data = encode_dataset(ds);

    ModelConfig m = small_model();
    m.alpha = 1.0;
    m.beta = 0.01;
    TrainConfig t;
    t.batch_size = 64;
    t.learning_rate = 0.01;
    t.max_epochs = 30;
    t.patience = 30;
    t.alignment_batch = 60;
    const FitResult r = fit(ds, data, TrainerState::initial(m, DatasetShape::of(data), t), t);

    const Matrix books = r.last.model.map_items(0, data.item_features[0]);
    const Matrix movies = r.last.model.map_items(1, data.item_features[1]);
    const Matrix sim = similarity_matrix(books, movies);
    double diag = 0.0, off = 0.0;
    for (std::size_t i = 0; i < 60; ++i)
        for (std::size_t j = 0; j < 60; ++j) (i == j ? diag : off) += sim(i, j);
    CHECK(diag / 60.0 > off / (60.0 * 59.0));
}

TEST_CASE("embedding export") {
    HeteroDataset ds = synthesize_dataset(testing::toy_synthetic(), 6);
    split(ds, {0.7, 0.2, 0.1}, 6);
    const EncodedDataset data = encode_dataset(ds);
    const DurationModel model = DurationModel::create(small_model(), DatasetShape::of(data), 3);
    TempDir dir;
    export_embeddings(model, ds, data, dir / "emb.tsv");

    std::istringstream in(testing::read_file(dir / "emb.tsv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "id\tkind\tx0\tx1\tx2\tx3\tx4\tx5");
    std::size_t rows = 0;
    const Matrix a = model.map_items(0, data.item_features[0]);
    const Matrix b = model.map_items(1, data.item_features[1]);
    while (std::getline(in, line)) {
        std::istringstream cells(line);
        std::string id, kind;
        cells >> id >> kind;
        const std::size_t p = kind == "a" ? 0 : 1;
        CHECK(ds.catalogs[p].items[rows < 6 ? rows : rows - 6].id == id);
        const Matrix& ref = p == 0 ? a : b;
        for (std::size_t j = 0; j < 6; ++j) {
            double v = 0.0;
            cells >> v;
            CHECK(v == ref(rows < 6 ? rows : rows - 6, j));
        }
        ++rows;
    }
    CHECK(rows == ds.num_items());
}
