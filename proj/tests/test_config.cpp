// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <string>

#include "core/config.hpp"
#include "core/error.hpp"
#include "core/pipeline.hpp"
#include "helpers.hpp"

using namespace duration;
using duration::testing::TempDir;

namespace {

std::string config_error(const Json& j) {
    try {
        parse_run_config(j);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
        return e.what();
    }
    FAIL("expected a config error");
    return {};
}

Json minimal() { return Json::parse(R"({"dataset": {"synthetic": {}}})"); }

}  // namespace

TEST_CASE("run config defaults") {
    const RunConfig c = parse_run_config(minimal());
    CHECK(c.name == "duration");
    CHECK(c.dataset.synthetic.has_value());
    CHECK(c.model.embedding_dim == 64);
    CHECK(c.model.unified_dim == 64);
    CHECK(c.train.batch_size == 1024);
    CHECK(c.train.learning_rate == 0.001);
    CHECK(c.train.patience == 5);
    CHECK(c.split.protocol == SplitProtocol::Standard);
    CHECK(c.eval.topology.k_values == std::vector<std::size_t>{5, 10, 20, 50});
    CHECK_FALSE(c.model.bandwidth.has_value());
}

TEST_CASE("run config round-trips through json") {
    Json j = minimal();
    j["split"] = {{"protocol", "cold_start"}, {"cold_cap", 2}};
    j["model"] = {{"alpha", 0.5}, {"bandwidth", 0.25}, {"topology_mode", "project"}, {"tower_hidden", {16, 8}}};
    j["train"] = {{"seed", 7}, {"disable_topology", true}};
    j["eval"] = {{"k_values", {2, 3}}, {"similarity", {{"kind_a", "book"}, {"count", 4}}}};
    const RunConfig c = parse_run_config(j);
    CHECK(c.split.protocol == SplitProtocol::ColdStart);
    CHECK(c.split.cold_cap == 2);
    CHECK(*c.model.bandwidth == 0.25);
    CHECK(c.model.topology_mode == TopologyMode::Project);
    CHECK(c.train.seed == 7);
    CHECK(c.eval.similarity.count == 4);

    const RunConfig back = parse_run_config(to_json(c));
    CHECK(back.model == c.model);
    CHECK(back.train == c.train);
    CHECK(to_json(back) == to_json(c));
}

TEST_CASE("config errors name the field") {
    Json j = minimal();
    j["train"] = {{"batch_size", "big"}};
    CHECK(config_error(j).find("train.batch_size") != std::string::npos);

    j = minimal();
    j["model"] = {{"aplha", 1.0}};
    CHECK(config_error(j).find("model.aplha: unknown key") != std::string::npos);

    j = minimal();
    j["split"] = {{"protocol", "random"}};
    CHECK(config_error(j).find("split.protocol") != std::string::npos);

    j = minimal();
    j["model"] = {{"bandwidth", "wide"}};
    CHECK(config_error(j).find("model.bandwidth") != std::string::npos);

    CHECK(config_error(Json::parse(R"({"model": {}})")).find("dataset") != std::string::npos);
    CHECK(config_error(Json::parse(R"({"dataset": {"synthetic": {}, "path": "x"}})")).find("dataset") !=
          std::string::npos);

    j = minimal();
    j["dataset"]["synthetic"] = {{"kinds", {{{"name", "a"}, {"items", -2}}}}};
    CHECK(config_error(j).find("dataset.synthetic.kinds[0].items") != std::string::npos);
}

TEST_CASE("config files") {
    TempDir dir;
    testing::write_file(dir / "run.json", R"({"dataset": {"path": "data"}, "output_dir": "out"})");
    const RunConfig c = load_run_config(dir / "run.json");
    CHECK(c.dataset.path == (dir.path() / "data").lexically_normal());
    CHECK(c.output_dir == (dir.path() / "out").lexically_normal());

    testing::write_file(dir / "broken.json", "{");
    CHECK_THROWS_AS(load_run_config(dir / "broken.json"), Error);
    try {
        load_run_config(dir / "missing.json");
        FAIL("expected an io error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Io);
    }
}

TEST_CASE("pipeline run directory") {
    TempDir dir;
    RunConfig c = parse_run_config(minimal());
    c.name = "exp";
    c.output_dir = dir.path();
    const auto first = default_run_dir(c, "synthetic");
    CHECK(first.parent_path() == dir.path());
    CHECK(first.filename().string().rfind("exp-synthetic-", 0) == 0);
    std::filesystem::create_directories(first);
    CHECK(default_run_dir(c, "synthetic") != first);
}

TEST_CASE("train_run writes the run layout") {
    TempDir dir;
    RunConfig c = parse_run_config(minimal());
    c.dataset.synthetic = testing::toy_synthetic(40);
    c.split.protocol = SplitProtocol::ColdStart;
    c.model.unified_dim = c.model.embedding_dim = 4;
    c.model.mapping_hidden = c.model.tower_hidden = {6};
    c.model.alpha = 1.0;
    c.train.batch_size = 32;
    c.train.max_epochs = 2;
    c.train.patience = 2;
    c.train.alignment_batch = 8;
    const PreparedData data = prepare_data(c);
    const auto run = dir / "run";
    const TrainRunResult r = train_run(data, c, run);
    for (const char* name : {"config.json", "log.jsonl", "summary.json", "best/manifest.json", "last/weights.bin"})
        CHECK(std::filesystem::exists(run / name));
    CHECK(r.epochs == 2);
    CHECK(r.cold.has_value());

    const std::string log = testing::read_file(run / "log.jsonl");
    CHECK(std::count(log.begin(), log.end(), '\n') == 2);
    const Json first = Json::parse(log.substr(0, log.find('\n')));
    for (const char* key : {"epoch", "C", "A", "T", "L", "val_auc", "best_val_auc", "wall_time"})
        CHECK(first.contains(key));

    const RunConfig saved = load_run_config(run / "config.json");
    CHECK(saved.model == c.model);
    CHECK(load_model_for(run / "best", data).params() == load_checkpoint(run / "best").state.model.params());
}
