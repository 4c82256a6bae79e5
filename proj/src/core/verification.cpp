// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/verification.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "core/encoding.hpp"
#include "core/error.hpp"
#include "core/evaluation.hpp"
#include "core/kernel.hpp"
#include "core/model.hpp"
#include "core/random.hpp"
#include "core/sampling.hpp"
#include "core/synthetic.hpp"

namespace duration {

namespace {

template <typename Fn>
SuiteResult timed(std::string name, Fn&& body) {
    SuiteResult r;
    r.name = std::move(name);
    const auto start = std::chrono::steady_clock::now();
    try {
        body(r);
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double shift = 0.0) {
    Matrix m(rows, cols);
    for (auto& v : m.values()) v = rng.normal() + shift;
    return m;
}

}  // namespace

SuiteResult alignment_oracle_suite(std::uint64_t seed, std::size_t instances) {
    return timed("alignment-oracle", [&](SuiteResult& r) {
        Rng rng(seed);
        double worst = 0.0;
        std::size_t failures = 0;
        for (std::size_t t = 0; t < instances; ++t) {
            const std::size_t P = 2 + rng.index(3);
            const std::size_t d = 1 + rng.index(8);
            const KernelSpec kernel(rng.uniform(0.05, 2.0));
            std::vector<Matrix> sets;
            for (std::size_t p = 0; p < P; ++p) sets.push_back(random_matrix(rng, 1 + rng.index(32), d, 0.3 * p));
            const double v = distributional_variance(sets, kernel);

            ParameterSet none;
            Graph g(none);
            std::vector<NodeId> nodes;
            for (const auto& s : sets) nodes.push_back(g.constant(s));
            const NodeId a = alignment_loss(g, nodes, kernel);
            g.forward();
            const double err = std::abs(g.value(a).item() - v) / std::max(1.0, std::abs(v));
            worst = std::max(worst, err);
            if (err > 1e-10) ++failures;
        }
        r.passed = failures == 0;
        std::ostringstream os;
        os << instances << " instances, worst scaled error " << worst << ", " << failures << " above 1e-10";
        r.detail = os.str();
    });
}

SuiteResult gradient_suite(std::uint64_t seed) {
    return timed("gradient-check", [&](SuiteResult& r) {
        SyntheticConfig sc;
        sc.name = "toy";
        sc.users = 8;
        sc.latent_dim = 3;
        sc.user_attributes = 2;
        sc.kinds = {{"a", 5, 0.5, 2, 1, 2}, {"b", 5, 0.5, 3, 0, 2}};
        HeteroDataset ds = synthesize_dataset(sc, seed);
        split(ds, {0.7, 0.2, 0.1}, seed);
        const EncodedDataset data = encode_dataset(ds);

        ModelConfig mc;
        mc.unified_dim = 4;
        mc.embedding_dim = 4;
        mc.mapping_hidden = {3};
        mc.tower_hidden = {4};
        mc.alpha = 2.0;
        mc.beta = 0.5;
        DurationModel model = DurationModel::create(mc, DatasetShape::of(data), seed);
        // Zero biases put dead ReLU rows exactly on the kink; move off it.
        Rng jitter(derive_seed(seed, 7));
        for (std::size_t i = 0; i < model.params().size(); ++i) {
            const auto& name = model.params().name(i);
            if (name.size() >= 4 && name.compare(name.size() - 4, 4, "bias") == 0)
                for (auto& v : model.params()[i].values()) v = 0.1 * jitter.normal();
        }

        InteractionSampler isampler(ds, interaction_stream_seed(seed));
        KindSampler ksampler(ds, kind_stream_seed(seed));
        BatchBundle bundle;
        bundle.interactions = isampler.sample(8);
        for (std::size_t p = 0; p < ds.num_kinds(); ++p) bundle.kind_samples.push_back(ksampler.sample(p, 5));

        LossWeights w{mc.alpha, mc.beta, true, true, 0.5};
        StepGraph sg = build_step_graph(bundle, model, data, w);
        std::ostringstream os;
        bool ok = true;
        const std::pair<const char*, NodeId> terms[] = {
            {"C", sg.classification}, {"A", *sg.alignment}, {"T", *sg.topology}, {"L", sg.total}};
        for (const auto& [name, node] : terms) {
            const auto rep = finite_diff_check(sg.graph, node, model.params());
            ok = ok && rep.passed() && rep.checked > 0;
            os << name << ": " << rep.checked << " coords, max rel err " << rep.max_relative_error << "; ";
        }
        r.passed = ok;
        r.detail = os.str();
    });
}

SuiteResult separation_suite(std::uint64_t seed) {
    return timed("separation", [&](SuiteResult& r) {
        Rng rng(seed);
        bool ok = true;
        std::ostringstream os;
        for (std::size_t P = 2; P <= 4; ++P) {
            const double lambda = 0.5;
            const KernelSpec kernel(lambda);
            const Matrix base = random_matrix(rng, 6, 3);
            std::vector<Matrix> same(P, base);
            const double a_same = alignment_loss(same, kernel);

            std::vector<Matrix> apart;
            const double gap = 10.0 / std::sqrt(lambda);
            for (std::size_t p = 0; p < P; ++p) {
                Matrix m(6, 3);
                for (auto& v : m.values()) v = 0.01 * rng.normal();
                for (std::size_t i = 0; i < m.rows(); ++i) m(i, 0) += 2.0 * gap * static_cast<double>(p);
                apart.push_back(std::move(m));
            }
            const double a_apart = alignment_loss(apart, kernel);
            const double bound = 0.1 * static_cast<double>(P - 1) / static_cast<double>(P * P);
            ok = ok && a_same <= 1e-12 && a_apart > bound;
            os << "P=" << P << " same " << a_same << " apart " << a_apart << " (> " << bound << "); ";
        }
        r.passed = ok;
        r.detail = os.str();
    });
}

SuiteResult auc_oracle_suite(std::uint64_t seed, std::size_t sets) {
    return timed("auc-oracle", [&](SuiteResult& r) {
        Rng rng(seed);
        double worst = 0.0;
        std::size_t evaluated = 0;
        for (std::size_t t = 0; t < sets; ++t) {
            const std::size_t n = 2 + rng.index(199);
            std::vector<double> scores(n);
            std::vector<std::uint8_t> labels(n);
            for (std::size_t i = 0; i < n; ++i) {
                // Coarse scores force plenty of ties.
                scores[i] = static_cast<double>(rng.index(12)) / 4.0;
                labels[i] = rng.uniform() < 0.4 ? 1 : 0;
            }
            labels[0] = 1;
            labels[1] = 0;
            double pairs = 0.0, wins = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (!labels[i]) continue;
                for (std::size_t j = 0; j < n; ++j) {
                    if (labels[j]) continue;
                    pairs += 1.0;
                    wins += scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
                }
            }
            worst = std::max(worst, std::abs(auc(scores, labels) - wins / pairs));
            ++evaluated;
        }
        r.passed = worst <= 1e-12;
        std::ostringstream os;
        os << evaluated << " sets, worst difference " << worst;
        r.detail = os.str();
    });
}

std::vector<SuiteResult> run_oracle_checks(std::uint64_t seed) {
    return {alignment_oracle_suite(seed), gradient_suite(seed), separation_suite(seed), auc_oracle_suite(seed)};
}

}  // namespace duration
