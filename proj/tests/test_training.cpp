// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "core/checkpoint.hpp"
#include "core/error.hpp"
#include "core/evaluation.hpp"
#include "core/synthetic.hpp"
#include "core/training.hpp"
#include "helpers.hpp"

using namespace duration;
using duration::testing::TempDir;

namespace {

struct Setup {
    HeteroDataset dataset;
    EncodedDataset data;
    ModelConfig model;
    TrainConfig train;

    Setup() : dataset(synthesize_dataset(testing::toy_synthetic(30), 2)) {
        split(dataset, {0.7, 0.2, 0.1}, 2);
        data = encode_dataset(dataset);
        model.unified_dim = 4;
        model.embedding_dim = 4;
        model.mapping_hidden = {6};
        model.tower_hidden = {6};
        model.alpha = 1.0;
        model.beta = 0.1;
        train.batch_size = 16;
        train.learning_rate = 0.01;
        train.max_epochs = 3;
        train.patience = 3;
        train.alignment_batch = 8;
    }

    TrainerState initial() const { return TrainerState::initial(model, DatasetShape::of(data), train); }
};

void check_same_state(const TrainerState& a, const TrainerState& b) {
    CHECK(a.model.params() == b.model.params());
    CHECK(a.adam == b.adam);
    CHECK(a.interaction_rng == b.interaction_rng);
    CHECK(a.kind_rng == b.kind_rng);
    CHECK(a.epoch == b.epoch);
    CHECK(a.bandwidth == b.bandwidth);
    CHECK(a.stopping == b.stopping);
}

BatchBundle draw(TrainerState& state, const Setup& s, const TrainConfig& config) {
    InteractionSampler is(s.dataset, 0);
    KindSampler ks(s.dataset, 0);
    return next_bundle(state, is, ks, config);
}

}  // namespace

TEST_CASE("early stopping") {
    EarlyStopping stop(5);
    const double seq[] = {.70, .71, .71, .71, .71, .71, .71};
    std::size_t ran = 0;
    for (double v : seq) {
        if (stop.should_stop()) break;
        stop.observe(v);
        ++ran;
    }
    CHECK(ran == 7);
    CHECK(stop.should_stop());
    CHECK(stop.best_epoch() == 2);
    CHECK(*stop.best() == .71);

    EarlyStopping fresh(2);
    CHECK(fresh.observe(0.5));
    CHECK_FALSE(fresh.observe(0.5));
    CHECK(fresh.observe(0.6));
    CHECK(fresh.stale() == 0);
    CHECK_THROWS_AS(EarlyStopping::restore(2, 0.5, 4, 0, 3), Error);
}

TEST_CASE("train config validation") {
    TrainConfig c;
    c.validate();
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.patience = c.max_epochs + 1;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.learning_rate = -1.0;
    CHECK_THROWS_AS(c.validate(), Error);
    CHECK(steps_per_epoch(100, 32) == 4);
    CHECK(steps_per_epoch(64, 32) == 2);
}

TEST_CASE("single steps") {
    Setup s;
    SUBCASE("disabled alignment reports zero and adds no gradient") {
        TrainConfig off = s.train;
        off.disable_alignment = true;
        TrainerState a = s.initial();
        const BatchBundle b = draw(a, s, off);
        const LossTerms t = step(a, b, s.data, off);
        CHECK(t.alignment == 0.0);
        CHECK(t.topology > 0.0);

        Setup zero;
        zero.model.alpha = 0.0;
        TrainerState z = zero.initial();
        z.bandwidth = 1.0;
        step(z, b, zero.data, zero.train);
        CHECK(a.model.params() == z.model.params());
    }
    SUBCASE("zero learning rate keeps parameters and still reports losses") {
        TrainConfig frozen = s.train;
        frozen.learning_rate = 0.0;
        TrainerState st = s.initial();
        const ParameterSet before = st.model.params();
        const LossTerms t = step(st, draw(st, s, frozen), s.data, frozen);
        CHECK(st.model.params() == before);
        CHECK(t.classification > 0.0);
        CHECK(t.total > t.classification);
    }
    SUBCASE("one step lowers the batch loss for most seeds") {
        std::vector<double> change;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Setup run;
            run.train.seed = seed;
            run.train.learning_rate = 0.001;
            TrainerState st = run.initial();
            const BatchBundle b = draw(st, run, run.train);
            const double before = step(st, b, run.data, run.train).total;
            TrainConfig probe = run.train;
            probe.learning_rate = 0.0;
            const double after = step(st, b, run.data, probe).total;
            change.push_back(after - before);
        }
        CHECK(median(change) < 0.0);
    }
    SUBCASE("median bandwidth is resolved once") {
        TrainerState st = s.initial();
        step(st, draw(st, s, s.train), s.data, s.train);
        REQUIRE(st.bandwidth.has_value());
        const double first = *st.bandwidth;
        step(st, draw(st, s, s.train), s.data, s.train);
        CHECK(*st.bandwidth == first);
    }
}

TEST_CASE("fit") {
    Setup s;
    SUBCASE("max epochs bounds the run") {
        TrainConfig one = s.train;
        one.max_epochs = 1;
        one.patience = 1;
        const FitResult r = fit(s.dataset, s.data, s.initial(), one);
        CHECK(r.log.size() == 1);
        CHECK(r.last.epoch == 1);
        REQUIRE(r.best.has_value());
        CHECK(r.log[0].improved);
    }
    SUBCASE("same seed, same trajectory") {
        const FitResult a = fit(s.dataset, s.data, s.initial(), s.train);
        const FitResult b = fit(s.dataset, s.data, s.initial(), s.train);
        REQUIRE(a.log.size() == b.log.size());
        for (std::size_t i = 0; i < a.log.size(); ++i) {
            CHECK(a.log[i].mean.total == b.log[i].mean.total);
            CHECK(a.log[i].val_auc == b.log[i].val_auc);
        }
        check_same_state(a.last, b.last);
    }
    SUBCASE("resume continues the same trajectory") {
        const FitResult whole = fit(s.dataset, s.data, s.initial(), s.train);
        TrainConfig first = s.train;
        first.max_epochs = 1;
        first.patience = 1;
        FitResult part = fit(s.dataset, s.data, s.initial(), first);
        part.last.stopping = EarlyStopping::restore(s.train.patience, part.last.stopping.best(),
                                                    part.last.stopping.best_epoch(), part.last.stopping.stale(),
                                                    part.last.stopping.epochs());
        TempDir dir;
        save_checkpoint(dir / "ckpt", part.last, s.train);
        const LoadedCheckpoint loaded = load_checkpoint(dir / "ckpt");
        const FitResult rest = fit(s.dataset, s.data, loaded.state, s.train);
        check_same_state(rest.last, whole.last);
        CHECK(rest.log.back().val_auc == whole.log.back().val_auc);
    }
    SUBCASE("shape mismatch and empty splits are state errors") {
        TrainerState st = s.initial();
        Setup other;
        other.dataset = synthesize_dataset(testing::toy_synthetic(31), 2);
        split(other.dataset, {0.7, 0.2, 0.1}, 2);
        other.data = encode_dataset(other.dataset);
        CHECK_THROWS_AS(fit(other.dataset, other.data, st, s.train), Error);

        HeteroDataset no_val = s.dataset;
        split(no_val, {1.0, 0.0, 0.0}, 0);
        CHECK_THROWS_AS(fit(no_val, s.data, s.initial(), s.train), Error);
    }
    SUBCASE("callback sees every epoch") {
        std::size_t calls = 0;
        fit(s.dataset, s.data, s.initial(), s.train,
            [&](const EpochRecord& r, const TrainerState& st, bool) {
                ++calls;
                CHECK(r.epoch == st.epoch);
            });
        CHECK(calls == 3);
    }
}

TEST_CASE("checkpoints") {
    Setup s;
    TrainConfig two = s.train;
    two.max_epochs = 2;
    two.patience = 2;
    const FitResult r = fit(s.dataset, s.data, s.initial(), two);
    TempDir dir;
    const auto path = dir / "ckpt";
    save_checkpoint(path, r.last, two, Json{{"note", "x"}});
    CHECK(std::filesystem::exists(path / "manifest.json"));
    CHECK(std::filesystem::exists(path / "weights.bin"));

    const LoadedCheckpoint back = load_checkpoint(path);
    check_same_state(back.state, r.last);
    CHECK(back.train == two);
    CHECK(back.run_config.at("note") == "x");
    CHECK(back.state.model.config() == s.model);

    SUBCASE("same run twice gives byte-identical files") {
        const FitResult again = fit(s.dataset, s.data, s.initial(), two);
        save_checkpoint(dir / "again", again.last, two, Json{{"note", "x"}});
        CHECK(testing::read_file(path / "weights.bin") == testing::read_file(dir / "again" / "weights.bin"));
        CHECK(testing::read_file(path / "manifest.json") == testing::read_file(dir / "again" / "manifest.json"));
    }
    SUBCASE("overwriting replaces the directory") {
        save_checkpoint(path, s.initial(), two);
        CHECK(load_checkpoint(path).state.epoch == 0);
        CHECK_FALSE(std::filesystem::exists(dir / "ckpt.tmp"));
    }
    SUBCASE("corruption is detected") {
        std::string blob = testing::read_file(path / "weights.bin");
        auto expect_format_error = [&] {
            try {
                load_checkpoint(path);
                FAIL("expected a format error");
            } catch (const Error& e) {
                CHECK(e.kind() == ErrorKind::Format);
            }
        };
        SUBCASE("flipped byte") {
            blob[blob.size() / 2] ^= 0x40;
            testing::write_file(path / "weights.bin", blob);
            expect_format_error();
        }
        SUBCASE("truncated") {
            testing::write_file(path / "weights.bin", blob.substr(0, blob.size() - 8));
            expect_format_error();
        }
        SUBCASE("version mismatch") {
            Json m = read_json_file(path / "manifest.json");
            m["format_version"] = kCheckpointVersion + 1;
            testing::write_file(path / "manifest.json", m.dump());
            expect_format_error();
        }
        SUBCASE("mangled manifest") {
            testing::write_file(path / "manifest.json", "{not json");
            expect_format_error();
        }
    }
    SUBCASE("missing directory is an io error") {
        try {
            load_checkpoint(dir / "absent");
            FAIL("expected an io error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Io);
        }
    }
}
