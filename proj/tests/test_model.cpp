// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <memory>

#include "core/dataset.hpp"
#include "core/encoding.hpp"
#include "core/error.hpp"
#include "core/kernel.hpp"
#include "core/model.hpp"
#include "core/random.hpp"
#include "core/sampling.hpp"
#include "core/synthetic.hpp"
#include "core/topology.hpp"
#include "helpers.hpp"

using namespace duration;

namespace {

struct Fixture {
    HeteroDataset dataset;
    EncodedDataset data;

    explicit Fixture(std::uint64_t seed = 1) : dataset(synthesize_dataset(testing::toy_synthetic(), seed)) {
        split(dataset, {0.7, 0.2, 0.1}, seed);
        data = encode_dataset(dataset);
    }
};

ModelConfig small_config() {
    ModelConfig c;
    c.unified_dim = 4;
    c.embedding_dim = 3;
    c.mapping_hidden = {5};
    c.tower_hidden = {4};
    c.alpha = 2.0;
    c.beta = 0.5;
    return c;
}

void zero_all(DurationModel& m) {
    for (std::size_t i = 0; i < m.params().size(); ++i) m.params()[i].fill(0.0);
}

Matrix& param(DurationModel& m, const std::string& name) {
    const auto i = m.params().index_of(name);
    REQUIRE(i.has_value());
    return m.params()[*i];
}

BatchBundle bundle_for(const HeteroDataset& ds, std::size_t batch, std::size_t per_kind, std::uint64_t seed) {
    InteractionSampler is(ds, seed);
    KindSampler ks(ds, seed + 1);
    BatchBundle b;
    b.interactions = is.sample(batch);
    for (std::size_t p = 0; p < ds.num_kinds(); ++p) b.kind_samples.push_back(ks.sample(p, per_kind));
    return b;
}

std::vector<std::uint32_t> all_ids(std::size_t n) {
    std::vector<std::uint32_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<std::uint32_t>(i);
    return ids;
}

}  // namespace

TEST_CASE("parameter layout") {
    Fixture f;
    const DatasetShape shape = DatasetShape::of(f.data);
    const DurationModel m = DurationModel::create(small_config(), shape, 3);
    CHECK(m.num_kinds() == 2);
    CHECK(m.params().index_of("map.0.0.weight").has_value());
    CHECK(m.params().index_of("map.1.1.bias").has_value());
    CHECK(m.params()[*m.params().index_of("user.in.interaction_weight")].rows() == shape.num_items());
    CHECK(m.params()[*m.params().index_of("item.in.interaction_weight")].rows() == shape.num_users);
    CHECK(m.params()[*m.params().index_of("item.in.attr_weight")].rows() == 4);
    CHECK(m.params()[*m.params().index_of("item.1.weight")].cols() == 3);

    SUBCASE("same seed, same parameters") {
        CHECK(DurationModel::create(small_config(), shape, 3).params() == m.params());
        CHECK_FALSE(DurationModel::create(small_config(), shape, 4).params() == m.params());
    }
    SUBCASE("restore checks names and shapes") {
        ParameterSet wrong;
        wrong.add("x", Matrix(1, 1));
        CHECK_THROWS_AS(DurationModel::restore(small_config(), shape, 3, wrong), Error);
        const DurationModel back = DurationModel::restore(small_config(), shape, 3, m.params());
        CHECK(back.params() == m.params());
    }
    SUBCASE("invalid configs") {
        ModelConfig bad = small_config();
        bad.unified_dim = 0;
        CHECK_THROWS_AS(DurationModel::create(bad, shape, 0), Error);
        bad = small_config();
        bad.alpha = -1.0;
        CHECK_THROWS_AS(bad.validate(), Error);
    }
}

TEST_CASE("mapping functions") {
    Fixture f;
    DurationModel m = DurationModel::create(small_config(), DatasetShape::of(f.data), 5);
    const Matrix& attrs = f.data.item_features[0];
    const Matrix mapped = m.map_items(0, attrs);
    CHECK(mapped.rows() == attrs.rows());
    CHECK(mapped.cols() == 4);

    Matrix twins(2, attrs.cols());
    std::copy(attrs.row(1).begin(), attrs.row(1).end(), twins.row(0).begin());
    std::copy(attrs.row(1).begin(), attrs.row(1).end(), twins.row(1).begin());
    const Matrix t = m.map_items(0, twins);
    CHECK(t.row(0)[2] == t.row(1)[2]);
    CHECK(std::equal(t.row(0).begin(), t.row(0).end(), t.row(1).begin()));

    CHECK_THROWS_AS(m.map_items(0, Matrix(1, attrs.cols() + 1)), Error);
    zero_all(m);
    CHECK(m.map_items(1, f.data.item_features[1]) == Matrix(f.data.item_features[1].rows(), 4));
}

TEST_CASE("towers") {
    Fixture f;
    DurationModel m = DurationModel::create(small_config(), DatasetShape::of(f.data), 7);
    const auto users = all_ids(f.data.num_users());
    const Matrix u = m.user_embeddings(f.data, users);
    for (double v : u.values()) CHECK(v >= 0.0);

    SUBCASE("zero parameters give zero embeddings") {
        zero_all(m);
        CHECK(m.user_embeddings(f.data, users) == Matrix(users.size(), 3));
        const auto items = all_ids(f.data.item_features[0].rows());
        CHECK(m.item_embeddings(f.data, 0, items) == Matrix(items.size(), 3));
    }
    SUBCASE("an entity without feedback depends only on its attributes") {
        // Drop every interaction of kind 1, item 0 and of user 0 from train.
        HeteroDataset ds = f.dataset;
        for (auto& x : ds.interactions)
            if ((x.kind == 1 && x.item == 0) || x.user == 0) x.split = SplitTag::Test;
        const EncodedDataset cold = encode_dataset(ds);
        const DurationModel model = DurationModel::create(small_config(), DatasetShape::of(cold), 7);
        DurationModel scrambled = model;
        Rng rng(1);
        for (auto& v : param(scrambled, "item.in.interaction_weight").values()) v = rng.normal();
        for (auto& v : param(scrambled, "user.in.interaction_weight").values()) v = rng.normal();
        const std::uint32_t zero[] = {0};
        CHECK(model.item_embeddings(cold, 1, zero) == scrambled.item_embeddings(cold, 1, zero));
        CHECK(model.user_embeddings(cold, zero) == scrambled.user_embeddings(cold, zero));
    }
}

TEST_CASE("two-unit tower by hand") {
    // One user, one kind with a single one-attribute item; no hidden layers.
    DatasetShape shape;
    shape.num_users = 1;
    shape.kind_items = {1};
    shape.kind_widths = {1};
    shape.user_width = 1;
    ModelConfig c;
    c.unified_dim = 2;
    c.embedding_dim = 2;
    c.mapping_hidden = {};
    c.tower_hidden = {};
    DurationModel m = DurationModel::create(c, shape, 0);
    param(m, "map.0.0.weight") = Matrix(1, 2, {2.0, -1.0});
    param(m, "map.0.0.bias") = Matrix(1, 2, {0.5, 0.0});
    param(m, "item.in.interaction_weight") = Matrix(1, 2, {1.0, 1.0});
    param(m, "item.in.attr_weight") = Matrix(2, 2, {1.0, 0.0, 3.0, -1.0});
    param(m, "item.in.bias") = Matrix(1, 2, {0.0, -2.0});
    param(m, "user.in.interaction_weight") = Matrix(1, 2, {0.5, -0.5});
    param(m, "user.in.attr_weight") = Matrix(1, 2, {1.0, -3.0});
    param(m, "user.in.bias") = Matrix(1, 2, {0.0, 0.0});

    Graph g(m.params());
    auto item_rows = std::make_shared<SparseRows>(1);
    const std::pair<std::uint32_t, double> fb[] = {{0, 0.8}};
    item_rows->append_row(fb);
    auto user_rows = std::make_shared<SparseRows>(1);
    user_rows->append_row(fb);
    const NodeId mapped = m.map_items(g, 0, g.constant(Matrix(1, 1, {1.0})));
    const NodeId x = m.item_tower(g, item_rows, mapped);
    const NodeId u = m.user_tower(g, user_rows, g.constant(Matrix(1, 1, {1.0})));
    g.forward();
    // f = [2.5, -1]; x = 0.8·[1,1] + [2.5,-1]·[[1,0],[3,-1]] + [0,-2] = [0.3, -0.2]
    CHECK(g.value(mapped) == Matrix(1, 2, {2.5, -1.0}));
    CHECK(g.value(x)[0] == doctest::Approx(0.3));
    CHECK(g.value(x)[1] == doctest::Approx(-0.2));
    // u = ReLU(0.8·[.5,-.5] + [1,-3]) = [1.4, 0]
    CHECK(g.value(u)[0] == doctest::Approx(1.4));
    CHECK(g.value(u)[1] == 0.0);
}

TEST_CASE("prediction and classification loss") {
    const double zero[] = {0.0, 0.0}, v[] = {1.0, 2.0};
    CHECK(predict(zero, v) == 0.5);
    const double a[] = {std::log(3.0)}, one[] = {1.0};
    CHECK(predict(a, one) == doctest::Approx(0.75));
    const double big[] = {800.0}, neg[] = {-800.0};
    CHECK(predict(big, one) <= 1.0);
    CHECK(predict(neg, one) >= 0.0);
    CHECK(std::isfinite(predict(neg, one)));
    CHECK_THROWS_AS(predict(a, v), Error);

    const double halves[] = {0.5, 0.5, 0.5};
    const std::uint8_t mixed[] = {1, 0, 1};
    CHECK(bce_loss(halves, mixed) == doctest::Approx(std::log(2.0)));
    const double p[] = {0.9, 0.2};
    const std::uint8_t y[] = {1, 0};
    CHECK(bce_loss(p, y) == doctest::Approx(-(std::log(0.9) + std::log(0.8)) / 2).epsilon(1e-12));
    CHECK(bce_loss(p, y) == doctest::Approx(0.164252).epsilon(1e-6));

    double previous = INFINITY;
    for (double z = 1.0; z < 1000.0; z *= 2.0) {
        const double logits[] = {z, -z};
        const double c = bce_loss_from_logits(logits, y);
        CHECK(c < previous);
        CHECK(c >= 0.0);
        previous = c;
    }
    const double logits[] = {2.0, -1.5};
    const double probs[] = {1.0 / (1.0 + std::exp(-2.0)), 1.0 / (1.0 + std::exp(1.5))};
    CHECK(bce_loss_from_logits(logits, y) == doctest::Approx(bce_loss(probs, y)).epsilon(1e-12));
}

TEST_CASE("combined objective") {
    CHECK(total_loss(0.7, 1e-9, 100.0, 5e8, 0.001) == doctest::Approx(1.3).epsilon(1e-12));
    CHECK(total_loss(0.7, 3.0, 4.0, 0.0, 0.0) == 0.7);
    CHECK_THROWS_AS(total_loss(0.7, 1.0, 1.0, -1.0, 0.0), Error);
}

TEST_CASE("step graph") {
    Fixture f;
    DurationModel m = DurationModel::create(small_config(), DatasetShape::of(f.data), 2);
    const BatchBundle b = bundle_for(f.dataset, 16, 6, 9);

    SUBCASE("terms assemble into L") {
        StepGraph sg = build_step_graph(b, m, f.data, {2.0, 0.5, true, true, 0.4});
        sg.graph.forward();
        const double c = sg.graph.value(sg.classification).item();
        const double a = sg.graph.value(*sg.alignment).item();
        const double t = sg.graph.value(*sg.topology).item();
        CHECK(sg.graph.value(sg.total).item() == doctest::Approx(total_loss(c, a, t, 2.0, 0.5)).epsilon(1e-14));

        std::vector<Matrix> unified, raw;
        for (std::size_t p = 0; p < 2; ++p) {
            const Matrix attrs = select_rows(f.data.item_features[p], b.kind_samples[p]);
            unified.push_back(m.map_items(p, attrs));
            raw.push_back(attrs);
        }
        CHECK(a == doctest::Approx(alignment_loss(unified, KernelSpec(0.4))).epsilon(1e-12));
        CHECK(t == doctest::Approx(topology_loss(raw, unified)).epsilon(1e-12));
    }
    SUBCASE("ablation graph equals the plain classification graph") {
        StepGraph full = build_step_graph(b, m, f.data, {0.0, 0.0, true, true, 0.4});
        StepGraph plain = build_step_graph(b, m, f.data, {0.0, 0.0, false, false, 0.4});
        full.graph.forward();
        plain.graph.forward();
        CHECK(full.graph.value(full.total).item() == plain.graph.value(plain.total).item());
        CHECK_FALSE(plain.alignment.has_value());
        const Gradients gf = full.graph.backward(full.total), gp = plain.graph.backward(plain.total);
        for (std::size_t i = 0; i < gf.size(); ++i) CHECK(gf[i] == gp[i]);
    }
    SUBCASE("a mapping weight moves L through A when alpha is positive") {
        BatchBundle only_kind_zero = b;
        std::erase_if(only_kind_zero.interactions, [](const BatchTriple& t) { return t.kind == 0; });
        REQUIRE_FALSE(only_kind_zero.interactions.empty());
        // Kind 0's mapping sees no triple, so only the alignment/topology terms reach it.
        StepGraph sg = build_step_graph(only_kind_zero, m, f.data, {2.0, 0.0, true, false, 0.4});
        sg.graph.forward();
        const Gradients g = sg.graph.backward(sg.total);
        const auto w = *m.params().index_of("map.0.0.weight");
        double norm = 0.0;
        for (double v : g[w].values()) norm += v * v;
        CHECK(norm > 0.0);
        CHECK(finite_diff_check(sg.graph, sg.total, m.params()).passed());
    }
    SUBCASE("a single kind contributes an exact zero alignment") {
        HeteroDataset one = f.dataset;
        one.catalogs.resize(1);
        std::erase_if(one.interactions, [](const Interaction& x) { return x.kind != 0; });
        const EncodedDataset data = encode_dataset(one);
        const DurationModel single = DurationModel::create(small_config(), DatasetShape::of(data), 2);
        StepGraph sg = build_step_graph(bundle_for(one, 8, 5, 3), single, data, {2.0, 0.5, true, true, 0.4});
        sg.graph.forward();
        CHECK(sg.graph.value(*sg.alignment).item() == 0.0);
    }
    SUBCASE("gradients match central differences") {
        Rng jitter(4);
        for (std::size_t i = 0; i < m.params().size(); ++i)
            if (m.params().name(i).ends_with("bias"))
                for (auto& v : m.params()[i].values()) v = 0.1 * jitter.normal();
        StepGraph sg = build_step_graph(b, m, f.data, {2.0, 0.5, true, true, 0.4});
        const auto report = finite_diff_check(sg.graph, sg.total, m.params());
        CHECK(report.passed());
        CHECK(report.checked > 50);
    }
    SUBCASE("an empty kind sample is rejected") {
        BatchBundle bad = b;
        bad.kind_samples[1].clear();
        CHECK_THROWS_AS(build_step_graph(bad, m, f.data, {1.0, 1.0, true, true, 0.4}), Error);
    }
}

TEST_CASE("projected topology view") {
    Fixture f;
    ModelConfig c = small_config();
    c.topology_mode = TopologyMode::Project;
    const DurationModel m = DurationModel::create(c, DatasetShape::of(f.data), 2);
    const Matrix view = m.topology_view(0, f.data.item_features[0]);
    CHECK(view.cols() == c.unified_dim);
    CHECK(view == m.topology_view(0, f.data.item_features[0]));
}
