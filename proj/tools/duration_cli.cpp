// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Every subcommand takes a JSON run config; see
// README.md for the schema.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "duration/duration.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

int exit_code(dur_status status) {
    switch (status) {
        case DUR_OK: return kExitOk;
        case DUR_ERR_CONFIG:
        case DUR_ERR_INVALID_ARGUMENT: return kExitUsage;
        default: return kExitRuntime;
    }
}

// Prints the JSON result or the error and maps the status to an exit code.
int finish(dur_status status, char* text) {
    if (status != DUR_OK) {
        std::fprintf(stderr, "error (%s): %s\n", dur_status_name(status), dur_last_error());
        dur_free_string(text);
        return exit_code(status);
    }
    if (text) std::printf("%s\n", text);
    dur_free_string(text);
    return kExitOk;
}

// The run's best checkpoint when the config sits inside a run directory.
std::string default_checkpoint(const std::string& config, const std::string& given) {
    if (!given.empty()) return given;
    const fs::path best = fs::absolute(config).parent_path() / "best";
    if (fs::is_directory(best)) return best.string();
    return {};
}

int train(const std::string& config, const std::string& run, int ablate, std::string* run_dir = nullptr) {
    char* out = nullptr;
    const dur_status s = dur_run_train(config.c_str(), run.empty() ? nullptr : run.c_str(), ablate, &out);
    if (s == DUR_OK && run_dir) *run_dir = nlohmann::json::parse(out).at("run_dir").get<std::string>();
    return finish(s, out);
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
    // Graph temporaries are large and short-lived; keep them off mmap.
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
    CLI::App app{"duration: heterogeneous recommendation with distribution alignment"};
    app.set_version_flag("--version", std::string(dur_version()));
    app.require_subcommand(1);

    std::string config, run, checkpoint, with_ckpt, without_ckpt, out_dir;
    std::uint64_t seed = 0;

    auto* synth = app.add_subcommand("synth", "write the configured synthetic dataset to disk");
    synth->add_option("config", config, "run config (JSON)")->required()->check(CLI::ExistingFile);
    synth->add_option("--out", out_dir, "dataset directory (default: the config's output_dir)");

    auto* train_cmd = app.add_subcommand("train", "train and write config, log, best/ and last/ checkpoints");
    train_cmd->add_option("config", config, "run config (JSON)")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--run", run, "run directory (default: {name}-{dataset}-{timestamp})");

    auto* ablate = app.add_subcommand("train-ablate", "train with the alignment and topology terms disabled");
    ablate->add_option("config", config, "run config (JSON)")->required()->check(CLI::ExistingFile);
    ablate->add_option("--run", run, "run directory");

    auto* eval = app.add_subcommand("eval", "test-split AUC report for a checkpoint");
    auto* cold = app.add_subcommand("cold-eval", "test-split AUC report restricted to cold-start users");
    for (auto* sub : {eval, cold}) {
        sub->add_option("config", config, "run config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--checkpoint", checkpoint, "checkpoint directory (default: best/ beside the config)");
    }

    auto* topo = app.add_subcommand("topo-f1", "macro pairwise F1 with and without the topology loss");
    topo->add_option("config", config, "run config (JSON)")->required()->check(CLI::ExistingFile);
    topo->add_option("--with", with_ckpt, "checkpoint trained with the topology loss");
    topo->add_option("--without", without_ckpt, "checkpoint trained without it");

    auto* exp = app.add_subcommand("export", "write unified embeddings and a similarity matrix");
    exp->add_option("config", config, "run config (JSON)")->required()->check(CLI::ExistingFile);
    exp->add_option("--checkpoint", checkpoint, "checkpoint directory (default: best/ beside the config)");
    exp->add_option("--out", out_dir, "output directory (default: the checkpoint's parent)");

    auto* oracle = app.add_subcommand("oracle-check", "run the alignment oracle and gradient-check suites");
    oracle->add_option("config", config, "optional JSON file with a \"seed\" key");
    oracle->add_option("--seed", seed, "seed for the random instances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << "\n" << app.help();
        return kExitUsage;
    }

    char* out = nullptr;
    if (synth->parsed()) {
        const dur_status s = dur_run_synth(config.c_str(), out_dir.empty() ? nullptr : out_dir.c_str(), &out);
        return finish(s, out);
    }
    if (train_cmd->parsed()) return train(config, run, 0);
    if (ablate->parsed()) return train(config, run, DUR_ABLATE_ALIGNMENT | DUR_ABLATE_TOPOLOGY);

    if (eval->parsed() || cold->parsed() || exp->parsed()) {
        const std::string ckpt = default_checkpoint(config, checkpoint);
        if (ckpt.empty()) {
            std::fprintf(stderr, "error: no --checkpoint given and no best/ next to %s\n", config.c_str());
            return kExitUsage;
        }
        if (exp->parsed()) {
            const std::string dir = out_dir.empty() ? fs::absolute(ckpt).parent_path().string() : out_dir;
            const dur_status s = dur_run_export(config.c_str(), ckpt.c_str(), dir.c_str(), &out);
            return finish(s, out);
        }
        const dur_status s = dur_run_evaluate(config.c_str(), ckpt.c_str(), cold->parsed() ? 1 : 0, &out);
        return finish(s, out);
    }

    if (topo->parsed()) {
        if (with_ckpt.empty() != without_ckpt.empty()) {
            std::fprintf(stderr, "error: give both --with and --without, or neither\n");
            return kExitUsage;
        }
        if (with_ckpt.empty()) {
            std::string with_run, without_run;
            if (int rc = train(config, "", 0, &with_run)) return rc;
            if (int rc = train(config, "", DUR_ABLATE_TOPOLOGY, &without_run)) return rc;
            with_ckpt = (fs::path(with_run) / "best").string();
            without_ckpt = (fs::path(without_run) / "best").string();
        }
        const dur_status s = dur_run_topology_f1(config.c_str(), with_ckpt.c_str(), without_ckpt.c_str(), &out);
        return finish(s, out);
    }

    if (oracle->parsed()) {
        if (!config.empty()) {
            try {
                std::ifstream in(config);
                if (!in) throw std::runtime_error("cannot read " + config);
                const auto j = nlohmann::json::parse(in);
                for (auto it = j.begin(); it != j.end(); ++it)
                    if (it.key() != "seed") throw std::runtime_error(it.key() + ": unknown key");
                if (j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
            } catch (const std::exception& e) {
                std::fprintf(stderr, "error (config error): %s\n", e.what());
                return kExitUsage;
            }
        }
        int passed = 0;
        const dur_status s = dur_oracle_check(seed, &passed, &out);
        const int rc = finish(s, out);
        if (rc != kExitOk) return rc;
        std::printf("%s\n", passed ? "oracle-check: all suites passed" : "oracle-check: FAILED");
        return passed ? kExitOk : kExitRuntime;
    }
    return kExitUsage;
}
