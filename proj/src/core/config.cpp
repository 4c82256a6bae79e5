// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "core/error.hpp"

namespace duration {

namespace {

std::string field(const std::string& where, const std::string& key) {
    return where.empty() ? key : where + "." + key;
}

class Reader {
public:
    Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
        require(j.is_object(), ErrorKind::Config, (where_.empty() ? "config" : where_) + ": expected an object");
    }

    bool has(const std::string& key) {
        if (!j_.contains(key)) return false;
        seen_.insert(key);
        return true;
    }
    const Json& at(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }
    std::string path(const std::string& key) const { return field(where_, key); }

    void get(const std::string& key, std::size_t& out) {
        if (has(key)) out = to_size(j_.at(key), path(key));
    }
    void get(const std::string& key, std::uint64_t& out, bool) {
        if (has(key)) out = to_size(j_.at(key), path(key));
    }
    void get(const std::string& key, double& out) {
        if (has(key)) out = to_double(j_.at(key), path(key));
    }
    void get(const std::string& key, bool& out) {
        if (!has(key)) return;
        require(j_.at(key).is_boolean(), ErrorKind::Config, path(key) + ": expected true or false");
        out = j_.at(key).get<bool>();
    }
    void get(const std::string& key, std::string& out) {
        if (!has(key)) return;
        require(j_.at(key).is_string(), ErrorKind::Config, path(key) + ": expected a string");
        out = j_.at(key).get<std::string>();
    }
    void get(const std::string& key, std::vector<std::size_t>& out) {
        if (!has(key)) return;
        const Json& a = j_.at(key);
        require(a.is_array(), ErrorKind::Config, path(key) + ": expected an array of integers");
        out.clear();
        for (std::size_t i = 0; i < a.size(); ++i)
            out.push_back(to_size(a[i], path(key) + "[" + std::to_string(i) + "]"));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) fail(ErrorKind::Config, path(it.key()) + ": unknown key");
        }
    }

    static std::uint64_t to_size(const Json& v, const std::string& where) {
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer()) {
            require(v.get<std::int64_t>() >= 0, ErrorKind::Config, where + ": must be non-negative");
            return static_cast<std::uint64_t>(v.get<std::int64_t>());
        }
        fail(ErrorKind::Config, where + ": expected an integer");
    }
    static double to_double(const Json& v, const std::string& where) {
        require(v.is_number(), ErrorKind::Config, where + ": expected a number");
        const double d = v.get<double>();
        require(std::isfinite(d), ErrorKind::Config, where + ": must be finite");
        return d;
    }

private:
    const Json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

const char* protocol_name(SplitProtocol p) {
    return p == SplitProtocol::ColdStart ? "cold_start" : "standard";
}

}  // namespace

SyntheticConfig parse_synthetic_config(const Json& j, const std::string& where) {
    SyntheticConfig c;
    Reader r(j, where);
    r.get("name", c.name);
    r.get("users", c.users);
    r.get("latent_dim", c.latent_dim);
    r.get("user_attributes", c.user_attributes);
    r.get("label_noise", c.label_noise);
    r.get("attribute_noise", c.attribute_noise);
    r.get("category_temperature", c.category_temperature);
    r.get("paired_items", c.paired_items);
    if (r.has("kinds")) {
        const Json& kinds = r.at("kinds");
        require(kinds.is_array(), ErrorKind::Config, r.path("kinds") + ": expected an array");
        c.kinds.clear();
        for (std::size_t i = 0; i < kinds.size(); ++i) {
            SyntheticKind k;
            Reader kr(kinds[i], r.path("kinds") + "[" + std::to_string(i) + "]");
            kr.get("name", k.name);
            kr.get("items", k.items);
            kr.get("density", k.density);
            kr.get("numeric_attributes", k.numeric_attributes);
            kr.get("categorical_attributes", k.categorical_attributes);
            kr.get("cardinality", k.cardinality);
            kr.finish();
            c.kinds.push_back(std::move(k));
        }
    }
    r.finish();
    c.validate();
    return c;
}

ModelConfig parse_model_config(const Json& j, const std::string& where) {
    ModelConfig c;
    Reader r(j, where);
    r.get("unified_dim", c.unified_dim);
    r.get("embedding_dim", c.embedding_dim);
    r.get("mapping_hidden", c.mapping_hidden);
    r.get("tower_hidden", c.tower_hidden);
    r.get("alpha", c.alpha);
    r.get("beta", c.beta);
    if (r.has("bandwidth")) {
        const Json& b = r.at("bandwidth");
        if (b.is_string()) {
            require(b.get<std::string>() == "median", ErrorKind::Config,
                    r.path("bandwidth") + ": expected a positive number or \"median\"");
            c.bandwidth.reset();
        } else {
            c.bandwidth = Reader::to_double(b, r.path("bandwidth"));
        }
    }
    if (r.has("topology_mode")) {
        const Json& m = r.at("topology_mode");
        require(m.is_string() && (m == "pad" || m == "project"), ErrorKind::Config,
                r.path("topology_mode") + ": expected \"pad\" or \"project\"");
        c.topology_mode = m == "pad" ? TopologyMode::Pad : TopologyMode::Project;
    }
    r.finish();
    c.validate();
    return c;
}

TrainConfig parse_train_config(const Json& j, const std::string& where) {
    TrainConfig c;
    Reader r(j, where);
    r.get("batch_size", c.batch_size);
    r.get("learning_rate", c.learning_rate);
    r.get("max_epochs", c.max_epochs);
    r.get("patience", c.patience);
    r.get("seed", c.seed, true);
    r.get("alignment_batch", c.alignment_batch);
    r.get("disable_alignment", c.disable_alignment);
    r.get("disable_topology", c.disable_topology);
    r.finish();
    c.validate();
    return c;
}

DatasetShape parse_dataset_shape(const Json& j) {
    DatasetShape s;
    Reader r(j, "dataset_shape");
    r.get("num_users", s.num_users);
    r.get("kind_items", s.kind_items);
    r.get("kind_widths", s.kind_widths);
    r.get("user_width", s.user_width);
    r.finish();
    require(s.kind_items.size() == s.kind_widths.size(), ErrorKind::Format,
            "dataset_shape: kind_items and kind_widths differ in length");
    return s;
}

RunConfig parse_run_config(const Json& j) {
    RunConfig c;
    Reader r(j, "");
    r.get("name", c.name);
    require(!c.name.empty(), ErrorKind::Config, "name: must not be empty");
    if (r.has("output_dir")) {
        std::string s;
        r.get("output_dir", s);
        c.output_dir = s;
    }
    if (r.has("run_dir")) {
        std::string s;
        r.get("run_dir", s);
        c.run_dir = s;
    }

    require(r.has("dataset"), ErrorKind::Config, "dataset: required");
    {
        Reader d(r.at("dataset"), "dataset");
        if (d.has("synthetic")) c.dataset.synthetic = parse_synthetic_config(d.at("synthetic"), "dataset.synthetic");
        d.get("seed", c.dataset.synthetic_seed, true);
        if (d.has("path")) {
            std::string s;
            d.get("path", s);
            c.dataset.path = s;
        }
        if (d.has("kinds")) {
            const Json& k = d.at("kinds");
            require(k.is_array(), ErrorKind::Config, "dataset.kinds: expected an array of strings");
            std::vector<std::string> kinds;
            for (const auto& v : k) {
                require(v.is_string(), ErrorKind::Config, "dataset.kinds: expected an array of strings");
                kinds.push_back(v.get<std::string>());
            }
            c.dataset.kinds = std::move(kinds);
        }
        d.finish();
        require(c.dataset.synthetic.has_value() != !c.dataset.path.empty(), ErrorKind::Config,
                "dataset: give exactly one of \"synthetic\" or \"path\"");
    }

    if (r.has("split")) {
        Reader s(r.at("split"), "split");
        if (s.has("protocol")) {
            const Json& p = s.at("protocol");
            require(p.is_string() && (p == "standard" || p == "cold_start"), ErrorKind::Config,
                    "split.protocol: expected \"standard\" or \"cold_start\"");
            c.split.protocol = p == "standard" ? SplitProtocol::Standard : SplitProtocol::ColdStart;
        }
        if (s.has("ratios")) {
            const Json& a = s.at("ratios");
            require(a.is_array() && a.size() == 3, ErrorKind::Config, "split.ratios: expected three numbers");
            double total = 0.0;
            for (std::size_t i = 0; i < 3; ++i) {
                c.split.ratios[i] = Reader::to_double(a[i], "split.ratios[" + std::to_string(i) + "]");
                require(c.split.ratios[i] >= 0.0, ErrorKind::Config, "split.ratios: must be non-negative");
                total += c.split.ratios[i];
            }
            require(std::abs(total - 1.0) <= 1e-9, ErrorKind::Config, "split.ratios: must sum to 1");
        }
        s.get("seed", c.split.seed, true);
        s.get("cold_cap", c.split.cold_cap);
        s.get("cold_fraction", c.split.cold_fraction);
        require(c.split.cold_fraction > 0.0 && c.split.cold_fraction < 1.0, ErrorKind::Config,
                "split.cold_fraction: must lie in (0, 1)");
        s.finish();
    }

    if (r.has("model")) c.model = parse_model_config(r.at("model"));
    if (r.has("train")) c.train = parse_train_config(r.at("train"));

    if (r.has("eval")) {
        Reader e(r.at("eval"), "eval");
        e.get("k_values", c.eval.topology.k_values);
        for (auto k : c.eval.topology.k_values) require(k > 0, ErrorKind::Config, "eval.k_values: must be positive");
        if (e.has("seeds")) {
            const Json& a = e.at("seeds");
            require(a.is_array() && !a.empty(), ErrorKind::Config, "eval.seeds: expected a non-empty array");
            c.eval.topology.seeds.clear();
            for (std::size_t i = 0; i < a.size(); ++i)
                c.eval.topology.seeds.push_back(Reader::to_size(a[i], "eval.seeds[" + std::to_string(i) + "]"));
        }
        e.get("max_iter", c.eval.topology.max_iter);
        if (e.has("similarity")) {
            Reader s(e.at("similarity"), "eval.similarity");
            s.get("kind_a", c.eval.similarity.kind_a);
            s.get("kind_b", c.eval.similarity.kind_b);
            s.get("count", c.eval.similarity.count);
            s.finish();
        }
        e.finish();
    }
    r.finish();
    return c;
}

Json to_json(const SyntheticConfig& c) {
    Json kinds = Json::array();
    for (const auto& k : c.kinds) {
        kinds.push_back({{"name", k.name},
                         {"items", k.items},
                         {"density", k.density},
                         {"numeric_attributes", k.numeric_attributes},
                         {"categorical_attributes", k.categorical_attributes},
                         {"cardinality", k.cardinality}});
    }
    return {{"name", c.name},
            {"users", c.users},
            {"latent_dim", c.latent_dim},
            {"user_attributes", c.user_attributes},
            {"label_noise", c.label_noise},
            {"attribute_noise", c.attribute_noise},
            {"category_temperature", c.category_temperature},
            {"paired_items", c.paired_items},
            {"kinds", kinds}};
}

Json to_json(const ModelConfig& c) {
    Json j = {{"unified_dim", c.unified_dim},
              {"embedding_dim", c.embedding_dim},
              {"mapping_hidden", c.mapping_hidden},
              {"tower_hidden", c.tower_hidden},
              {"alpha", c.alpha},
              {"beta", c.beta},
              {"topology_mode", c.topology_mode == TopologyMode::Pad ? "pad" : "project"}};
    if (c.bandwidth)
        j["bandwidth"] = *c.bandwidth;
    else
        j["bandwidth"] = "median";
    return j;
}

Json to_json(const TrainConfig& c) {
    return {{"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"max_epochs", c.max_epochs},
            {"patience", c.patience},
            {"seed", c.seed},
            {"alignment_batch", c.alignment_batch},
            {"disable_alignment", c.disable_alignment},
            {"disable_topology", c.disable_topology}};
}

Json to_json(const DatasetShape& s) {
    return {{"num_users", s.num_users},
            {"kind_items", s.kind_items},
            {"kind_widths", s.kind_widths},
            {"user_width", s.user_width}};
}

Json to_json(const RunConfig& c) {
    Json dataset = Json::object();
    if (c.dataset.synthetic) {
        dataset["synthetic"] = to_json(*c.dataset.synthetic);
        dataset["seed"] = c.dataset.synthetic_seed;
    } else {
        dataset["path"] = c.dataset.path.string();
        if (c.dataset.kinds) dataset["kinds"] = *c.dataset.kinds;
    }
    Json j = {{"name", c.name},
              {"output_dir", c.output_dir.string()},
              {"dataset", dataset},
              {"split",
               {{"protocol", protocol_name(c.split.protocol)},
                {"ratios", c.split.ratios},
                {"seed", c.split.seed},
                {"cold_cap", c.split.cold_cap},
                {"cold_fraction", c.split.cold_fraction}}},
              {"model", to_json(c.model)},
              {"train", to_json(c.train)},
              {"eval",
               {{"k_values", c.eval.topology.k_values},
                {"seeds", c.eval.topology.seeds},
                {"max_iter", c.eval.topology.max_iter},
                {"similarity",
                 {{"kind_a", c.eval.similarity.kind_a},
                  {"kind_b", c.eval.similarity.kind_b},
                  {"count", c.eval.similarity.count}}}}}};
    if (c.run_dir) j["run_dir"] = c.run_dir->string();
    return j;
}

Json to_json(const EvalReport& r) {
    Json kinds = Json::array();
    for (const auto& k : r.kinds) {
        Json e = {{"kind", k.kind}, {"count", k.count}, {"positives", k.positives}};
        e["auc"] = k.auc ? Json(*k.auc) : Json(nullptr);
        kinds.push_back(std::move(e));
    }
    return {{"split", r.split},
            {"cold_start", r.cold_start},
            {"count", r.count},
            {"overall_auc", r.overall_auc},
            {"kinds", kinds}};
}

Json to_json(const TopologyF1Table& t) {
    Json rows = Json::array();
    for (const auto& row : t.rows) {
        rows.push_back({{"k", row.k},
                        {"with_topology", row.with_topology},
                        {"without_topology", row.without_topology},
                        {"with_median", row.with_median},
                        {"without_median", row.without_median}});
    }
    return {{"rows", rows}, {"wins", t.wins()}, {"total", t.rows.size()}};
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::Io, "cannot read " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        fail(ErrorKind::Config, path.string() + ": invalid JSON: " + e.what());
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    RunConfig c = parse_run_config(read_json_file(path));
    const auto base = std::filesystem::absolute(path).parent_path();
    auto anchor = [&](std::filesystem::path& p) {
        if (!p.empty() && p.is_relative()) p = (base / p).lexically_normal();
    };
    anchor(c.dataset.path);
    anchor(c.output_dir);
    if (c.run_dir) anchor(*c.run_dir);
    return c;
}

}  // namespace duration
