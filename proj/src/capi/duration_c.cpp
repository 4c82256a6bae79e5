// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include "duration/duration.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include "core/checkpoint.hpp"
#include "core/config.hpp"
#include "core/error.hpp"
#include "core/evaluation.hpp"
#include "core/kernel.hpp"
#include "core/pipeline.hpp"
#include "core/synthetic.hpp"
#include "core/verification.hpp"

struct dur_dataset {
    duration::HeteroDataset value;
};

struct dur_model {
    duration::LoadedCheckpoint value;
};

namespace {

namespace fs = std::filesystem;
using duration::Error;
using duration::ErrorKind;
using duration::Json;

thread_local std::string g_last_error;

dur_status status_of(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return DUR_ERR_INVALID_ARGUMENT;
        case ErrorKind::Config: return DUR_ERR_CONFIG;
        case ErrorKind::Io: return DUR_ERR_IO;
        case ErrorKind::Format: return DUR_ERR_FORMAT;
        case ErrorKind::Numeric: return DUR_ERR_NUMERIC;
        case ErrorKind::State: return DUR_ERR_STATE;
    }
    return DUR_ERR_INTERNAL;
}

template <typename Fn>
dur_status guarded(Fn&& fn) {
    g_last_error.clear();
    try {
        fn();
        return DUR_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return DUR_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return DUR_ERR_INTERNAL;
    }
}

void need(const void* p, const char* what) {
    duration::require(p != nullptr, ErrorKind::InvalidArgument, std::string(what) + " must not be NULL");
}

char* copy_out(const std::string& text) {
    char* out = static_cast<char*>(std::malloc(text.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
}

void emit(char** out, const Json& j) {
    if (out) *out = copy_out(j.dump(2));
}

Json parse_json_arg(const char* text, const char* what) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        duration::fail(ErrorKind::Config, std::string(what) + ": invalid JSON: " + e.what());
    }
}

std::vector<duration::Matrix> gather_sets(const double* const* sets, const size_t* rows, size_t num_sets,
                                          size_t dim) {
    need(sets, "sets");
    need(rows, "rows");
    std::vector<duration::Matrix> out;
    for (size_t i = 0; i < num_sets; ++i) {
        need(sets[i], "sets[i]");
        duration::Matrix m(rows[i], dim);
        std::memcpy(m.values().data(), sets[i], rows[i] * dim * sizeof(double));
        out.push_back(std::move(m));
    }
    return out;
}

Json summary_of(const duration::HeteroDataset& ds) {
    Json kinds = Json::array();
    for (const auto& c : ds.catalogs)
        kinds.push_back({{"kind", c.kind}, {"items", c.items.size()}, {"attributes", c.attribute_names.size()}});
    return {{"name", ds.name},
            {"users", ds.num_users()},
            {"items", ds.num_items()},
            {"interactions", ds.interactions.size()},
            {"kinds", kinds}};
}

}  // namespace

extern "C" {

const char* dur_version(void) { return "1.0.0"; }

const char* dur_last_error(void) { return g_last_error.c_str(); }

const char* dur_status_name(dur_status status) {
    switch (status) {
        case DUR_OK: return "ok";
        case DUR_ERR_INVALID_ARGUMENT: return "invalid argument";
        case DUR_ERR_CONFIG: return "config error";
        case DUR_ERR_IO: return "i/o error";
        case DUR_ERR_FORMAT: return "format error";
        case DUR_ERR_NUMERIC: return "numeric error";
        case DUR_ERR_STATE: return "state error";
        case DUR_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

void dur_free_string(char* text) { std::free(text); }

dur_status dur_dataset_synthesize(const char* synthetic_json, uint64_t seed, dur_dataset** out) {
    return guarded([&] {
        need(out, "out");
        *out = nullptr;
        const Json j = synthetic_json ? parse_json_arg(synthetic_json, "synthetic_json") : Json::object();
        const auto config = duration::parse_synthetic_config(j);
        *out = new dur_dataset{duration::synthesize_dataset(config, seed)};
    });
}

dur_status dur_dataset_load(const char* root, const char* kinds_json, dur_dataset** out) {
    return guarded([&] {
        need(root, "root");
        need(out, "out");
        *out = nullptr;
        std::optional<std::vector<std::string>> kinds;
        if (kinds_json) {
            const Json j = parse_json_arg(kinds_json, "kinds_json");
            duration::require(j.is_array(), ErrorKind::InvalidArgument, "kinds_json must be an array of strings");
            kinds.emplace();
            for (const auto& k : j) {
                duration::require(k.is_string(), ErrorKind::InvalidArgument, "kinds_json must be an array of strings");
                kinds->push_back(k.get<std::string>());
            }
        }
        *out = new dur_dataset{duration::load_dataset(root, kinds)};
    });
}

dur_status dur_dataset_save(const dur_dataset* dataset, const char* root) {
    return guarded([&] {
        need(dataset, "dataset");
        need(root, "root");
        duration::save_dataset(dataset->value, root);
    });
}

dur_status dur_dataset_summary(const dur_dataset* dataset, char** json_out) {
    return guarded([&] {
        need(dataset, "dataset");
        need(json_out, "json_out");
        emit(json_out, summary_of(dataset->value));
    });
}

void dur_dataset_free(dur_dataset* dataset) { delete dataset; }

dur_status dur_config_resolve(const char* config_path, char** json_out) {
    return guarded([&] {
        need(config_path, "config_path");
        need(json_out, "json_out");
        emit(json_out, duration::to_json(duration::load_run_config(config_path)));
    });
}

dur_status dur_run_synth(const char* config_path, const char* out_dir, char** info_json) {
    return guarded([&] {
        need(config_path, "config_path");
        const auto config = duration::load_run_config(config_path);
        const fs::path target = out_dir ? fs::path(out_dir) : config.output_dir;
        const auto ds = duration::materialize_dataset(config.dataset);
        duration::save_dataset(ds, target);
        Json info = summary_of(ds);
        info["path"] = fs::absolute(target).string();
        emit(info_json, info);
    });
}

dur_status dur_run_train(const char* config_path, const char* run_dir, int ablate, char** summary_json) {
    return guarded([&] {
        need(config_path, "config_path");
        auto config = duration::load_run_config(config_path);
        duration::require((ablate & ~(DUR_ABLATE_ALIGNMENT | DUR_ABLATE_TOPOLOGY)) == 0,
                          ErrorKind::InvalidArgument, "unknown ablation bits");
        if (ablate & DUR_ABLATE_ALIGNMENT) config.train.disable_alignment = true;
        if (ablate & DUR_ABLATE_TOPOLOGY) config.train.disable_topology = true;
        if (ablate == (DUR_ABLATE_ALIGNMENT | DUR_ABLATE_TOPOLOGY))
            config.name += "-ablate";
        else if (ablate == DUR_ABLATE_TOPOLOGY)
            config.name += "-no-topology";
        else if (ablate == DUR_ABLATE_ALIGNMENT)
            config.name += "-no-alignment";
        const auto data = duration::prepare_data(config);
        fs::path dir;
        if (run_dir)
            dir = run_dir;
        else if (config.run_dir)
            dir = *config.run_dir;
        else
            dir = duration::default_run_dir(config, data.dataset.name);
        const auto result = duration::train_run(data, config, dir);
        Json j = {{"run_dir", fs::absolute(result.run_dir).string()},
                  {"epochs", result.epochs},
                  {"best_epoch", result.best_epoch},
                  {"best_val_auc", result.best_val_auc},
                  {"stopped_early", result.stopped_early},
                  {"warnings", result.warnings},
                  {"test", duration::to_json(result.test)}};
        if (result.cold) j["cold_test"] = duration::to_json(*result.cold);
        emit(summary_json, j);
    });
}

dur_status dur_run_evaluate(const char* config_path, const char* checkpoint, int cold_only, char** report_json) {
    return guarded([&] {
        need(config_path, "config_path");
        need(checkpoint, "checkpoint");
        const auto config = duration::load_run_config(config_path);
        if (cold_only)
            duration::require(config.split.protocol == duration::SplitProtocol::ColdStart, ErrorKind::Config,
                              "split.protocol: cold-eval needs \"cold_start\"");
        const auto data = duration::prepare_data(config);
        const auto model = duration::load_model_for(checkpoint, data);
        const auto report =
            duration::evaluate(model, data.dataset, data.encoded, {duration::SplitTag::Test, cold_only != 0});
        emit(report_json, duration::to_json(report));
    });
}

dur_status dur_run_topology_f1(const char* config_path, const char* with_checkpoint, const char* without_checkpoint,
                               char** table_json) {
    return guarded([&] {
        need(config_path, "config_path");
        need(with_checkpoint, "with_checkpoint");
        need(without_checkpoint, "without_checkpoint");
        const auto config = duration::load_run_config(config_path);
        const auto data = duration::prepare_data(config);
        const auto with = duration::load_model_for(with_checkpoint, data);
        const auto without = duration::load_model_for(without_checkpoint, data);
        const duration::DurationModel* a[] = {&with};
        const duration::DurationModel* b[] = {&without};
        const auto table = duration::topology_f1_protocol(a, b, data.encoded, config.eval.topology);
        emit(table_json, duration::to_json(table));
    });
}

dur_status dur_run_export(const char* config_path, const char* checkpoint, const char* out_dir, char** info_json) {
    return guarded([&] {
        need(config_path, "config_path");
        need(checkpoint, "checkpoint");
        need(out_dir, "out_dir");
        const auto config = duration::load_run_config(config_path);
        const auto data = duration::prepare_data(config);
        const auto model = duration::load_model_for(checkpoint, data);
        const fs::path dir(out_dir);
        duration::export_embeddings(model, data.dataset, data.encoded, dir / "embeddings.tsv");

        const auto& ds = data.dataset;
        auto kind_of = [&](const std::string& name, std::size_t fallback) {
            if (name.empty()) return fallback;
            const auto k = ds.kind_index(name);
            duration::require(k.has_value(), ErrorKind::Config, "eval.similarity: unknown kind '" + name + "'");
            return *k;
        };
        const std::size_t ka = kind_of(config.eval.similarity.kind_a, 0);
        const std::size_t kb = kind_of(config.eval.similarity.kind_b, ds.num_kinds() - 1);
        auto first_items = [&](std::size_t kind, std::vector<std::string>& labels) {
            const std::size_t n = std::min(config.eval.similarity.count, ds.catalogs[kind].items.size());
            std::vector<std::uint32_t> idx;
            for (std::size_t i = 0; i < n; ++i) {
                idx.push_back(static_cast<std::uint32_t>(i));
                labels.push_back(ds.catalogs[kind].items[i].id);
            }
            return model.map_items(kind, duration::select_rows(data.encoded.item_features[kind], idx));
        };
        std::vector<std::string> rows, cols;
        const auto a = first_items(ka, rows);
        const auto b = first_items(kb, cols);
        const fs::path sim = dir / ("similarity_" + ds.catalogs[ka].kind + "_" + ds.catalogs[kb].kind + ".tsv");
        duration::write_similarity(duration::similarity_matrix(a, b), rows, cols, sim);
        emit(info_json, {{"embeddings", fs::absolute(dir / "embeddings.tsv").string()},
                         {"similarity", fs::absolute(sim).string()},
                         {"items", ds.num_items()}});
    });
}

dur_status dur_oracle_check(uint64_t seed, int* all_passed, char** report_json) {
    return guarded([&] {
        const auto results = duration::run_oracle_checks(seed);
        Json suites = Json::array();
        bool ok = true;
        for (const auto& r : results) {
            ok = ok && r.passed;
            suites.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"seconds", r.seconds}});
        }
        if (all_passed) *all_passed = ok ? 1 : 0;
        emit(report_json, {{"passed", ok}, {"suites", suites}});
    });
}

dur_status dur_model_load(const char* checkpoint_dir, dur_model** out) {
    return guarded([&] {
        need(checkpoint_dir, "checkpoint_dir");
        need(out, "out");
        *out = nullptr;
        *out = new dur_model{duration::load_checkpoint(checkpoint_dir)};
    });
}

dur_status dur_model_info(const dur_model* model, char** json_out) {
    return guarded([&] {
        need(model, "model");
        need(json_out, "json_out");
        const auto& st = model->value.state;
        Json j = {{"epoch", st.epoch},
                  {"parameters", st.model.params().scalar_count()},
                  {"tensors", st.model.params().size()},
                  {"model_config", duration::to_json(st.model.config())},
                  {"train_config", duration::to_json(model->value.train)},
                  {"dataset_shape", duration::to_json(st.model.shape())},
                  {"adam_step", st.adam.step}};
        j["best_val_auc"] = st.stopping.best() ? Json(*st.stopping.best()) : Json(nullptr);
        j["bandwidth"] = st.bandwidth ? Json(*st.bandwidth) : Json(nullptr);
        emit(json_out, j);
    });
}

void dur_model_free(dur_model* model) { delete model; }

dur_status dur_alignment_loss(const double* const* sets, const size_t* rows, size_t num_sets, size_t dim,
                              double bandwidth, double* out) {
    return guarded([&] {
        need(out, "out");
        const auto m = gather_sets(sets, rows, num_sets, dim);
        *out = duration::alignment_loss(m, duration::KernelSpec(bandwidth));
    });
}

dur_status dur_distributional_variance(const double* const* sets, const size_t* rows, size_t num_sets, size_t dim,
                                       double bandwidth, double* out) {
    return guarded([&] {
        need(out, "out");
        const auto m = gather_sets(sets, rows, num_sets, dim);
        *out = duration::distributional_variance(m, duration::KernelSpec(bandwidth));
    });
}

dur_status dur_auc(const double* scores, const uint8_t* labels, size_t n, double* out) {
    return guarded([&] {
        need(out, "out");
        if (n > 0) {
            need(scores, "scores");
            need(labels, "labels");
        }
        *out = duration::auc(std::span<const double>(scores, n), std::span<const std::uint8_t>(labels, n));
    });
}

}  // extern "C"
