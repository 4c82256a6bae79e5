// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace duration {

namespace {

namespace fs = std::filesystem;

constexpr const char* kFormat = "duration-checkpoint";

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void append_f64(std::string& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char raw[8];
    std::memcpy(raw, &bits, 8);
    out.append(raw, 8);
}

double read_f64(const char* p) {
    std::uint64_t bits;
    std::memcpy(&bits, p, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    return std::bit_cast<double>(bits);
}

struct Tensor {
    std::string name;
    const Matrix* value;
};

std::vector<Tensor> tensor_list(const TrainerState& state) {
    const ParameterSet& params = state.model.params();
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < params.size(); ++i) out.push_back({params.name(i), &params[i]});
    for (std::size_t i = 0; i < params.size(); ++i)
        out.push_back({"adam.m/" + params.name(i), &state.adam.first_moment.at(i)});
    for (std::size_t i = 0; i < params.size(); ++i)
        out.push_back({"adam.v/" + params.name(i), &state.adam.second_moment.at(i)});
    return out;
}

Json parse_manifest(const fs::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::Io, "cannot read " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        fail(ErrorKind::Format, path.string() + ": corrupted manifest: " + e.what());
    }
}

}  // namespace

void save_checkpoint(const fs::path& dir, const TrainerState& state, const TrainConfig& train,
                     const Json& run_config) {
    std::string blob;
    Json tensors = Json::array();
    for (const auto& t : tensor_list(state)) {
        tensors.push_back({{"name", t.name}, {"shape", {t.value->rows(), t.value->cols()}}, {"dtype", "f64le"}});
        for (double v : t.value->values()) append_f64(blob, v);
    }

    const auto& stop = state.stopping;
    Json manifest = {
        {"format", kFormat},
        {"format_version", kCheckpointVersion},
        {"tensors", tensors},
        {"weights_bytes", blob.size()},
        {"weights_fnv1a64", hex64(fnv1a(blob))},
        {"model_config", to_json(state.model.config())},
        {"model_seed", state.model.seed()},
        {"dataset_shape", to_json(state.model.shape())},
        {"train_config", to_json(train)},
        {"epoch", state.epoch},
        {"early_stopping",
         {{"patience", stop.patience()},
          {"best_val_auc", stop.best() ? Json(*stop.best()) : Json(nullptr)},
          {"best_epoch", stop.best_epoch()},
          {"stale", stop.stale()},
          {"epochs", stop.epochs()}}},
        {"adam",
         {{"step", state.adam.step},
          {"learning_rate", state.adam.hyper.learning_rate},
          {"beta1", state.adam.hyper.beta1},
          {"beta2", state.adam.hyper.beta2},
          {"epsilon", state.adam.hyper.epsilon}}},
        {"rng", {{"interaction", state.interaction_rng.serialize()}, {"kind", state.kind_rng.serialize()}}},
        {"bandwidth", state.bandwidth ? Json(*state.bandwidth) : Json(nullptr)},
        {"bandwidth_fallback", state.bandwidth_fallback},
        {"run_config", run_config},
    };

    const fs::path target = fs::absolute(dir).lexically_normal();
    const fs::path staging = target.string() + ".tmp";
    std::error_code ec;
    fs::remove_all(staging, ec);
    fs::create_directories(staging, ec);
    require(!ec, ErrorKind::Io, "cannot create " + staging.string() + ": " + ec.message());
    {
        std::ofstream out(staging / "weights.bin", std::ios::binary);
        out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
        require(out.good(), ErrorKind::Io, "cannot write " + (staging / "weights.bin").string());
    }
    {
        std::ofstream out(staging / "manifest.json");
        out << manifest.dump(2) << '\n';
        require(out.good(), ErrorKind::Io, "cannot write " + (staging / "manifest.json").string());
    }
    fs::remove_all(target, ec);
    fs::rename(staging, target, ec);
    require(!ec, ErrorKind::Io, "cannot move checkpoint into " + target.string() + ": " + ec.message());
}

LoadedCheckpoint load_checkpoint(const fs::path& dir) {
    require(fs::is_directory(dir), ErrorKind::Io, "checkpoint directory " + dir.string() + " does not exist");
    const Json m = parse_manifest(dir / "manifest.json");
    try {
        require(m.value("format", "") == kFormat, ErrorKind::Format, dir.string() + ": not a checkpoint manifest");
        const int version = m.at("format_version").get<int>();
        require(version == kCheckpointVersion, ErrorKind::Format,
                dir.string() + ": checkpoint format version " + std::to_string(version) + ", this build reads " +
                    std::to_string(kCheckpointVersion));

        std::string blob;
        {
            std::ifstream in(dir / "weights.bin", std::ios::binary);
            require(in.good(), ErrorKind::Io, "cannot read " + (dir / "weights.bin").string());
            std::ostringstream ss;
            ss << in.rdbuf();
            blob = ss.str();
        }
        const auto expected_bytes = m.at("weights_bytes").get<std::uint64_t>();
        require(blob.size() == expected_bytes, ErrorKind::Format,
                (dir / "weights.bin").string() + ": truncated, " + std::to_string(blob.size()) + " of " +
                    std::to_string(expected_bytes) + " bytes");
        require(hex64(fnv1a(blob)) == m.at("weights_fnv1a64").get<std::string>(), ErrorKind::Format,
                (dir / "weights.bin").string() + ": checksum mismatch, file is corrupted");

        const ModelConfig model_config = parse_model_config(m.at("model_config"), "model_config");
        const DatasetShape shape = parse_dataset_shape(m.at("dataset_shape"));
        const TrainConfig train = parse_train_config(m.at("train_config"), "train_config");
        const auto model_seed = m.at("model_seed").get<std::uint64_t>();

        const Json& tensors = m.at("tensors");
        require(tensors.is_array() && tensors.size() % 3 == 0, ErrorKind::Format,
                "manifest tensor list is malformed");
        const std::size_t count = tensors.size() / 3;
        std::vector<Matrix> values;
        std::vector<std::string> names;
        std::size_t offset = 0;
        for (const auto& t : tensors) {
            require(t.at("dtype") == "f64le", ErrorKind::Format, "unsupported tensor element type");
            const auto rows = t.at("shape").at(0).get<std::size_t>();
            const auto cols = t.at("shape").at(1).get<std::size_t>();
            require(offset + rows * cols * 8 <= blob.size(), ErrorKind::Format,
                    "weights.bin is shorter than the manifest's tensor list");
            Matrix v(rows, cols);
            for (auto& x : v.values()) {
                x = read_f64(blob.data() + offset);
                offset += 8;
            }
            names.push_back(t.at("name").get<std::string>());
            values.push_back(std::move(v));
        }
        require(offset == blob.size(), ErrorKind::Format, "weights.bin has trailing bytes");

        ParameterSet params;
        for (std::size_t i = 0; i < count; ++i) params.add(names[i], std::move(values[i]));
        DurationModel model = DurationModel::restore(model_config, shape, model_seed, std::move(params));

        const Json& a = m.at("adam");
        AdamHyper hyper;
        hyper.learning_rate = a.at("learning_rate").get<double>();
        hyper.beta1 = a.at("beta1").get<double>();
        hyper.beta2 = a.at("beta2").get<double>();
        hyper.epsilon = a.at("epsilon").get<double>();
        AdamState adam = AdamState::for_parameters(model.params(), hyper);
        adam.step = a.at("step").get<std::uint64_t>();
        for (std::size_t i = 0; i < count; ++i) {
            require(names[count + i] == "adam.m/" + names[i] && names[2 * count + i] == "adam.v/" + names[i],
                    ErrorKind::Format, "optimizer tensors are out of order for '" + names[i] + "'");
            require(values[count + i].same_shape(model.params()[i]) &&
                        values[2 * count + i].same_shape(model.params()[i]),
                    ErrorKind::Format, "optimizer tensor shape mismatch for '" + names[i] + "'");
            adam.first_moment[i] = std::move(values[count + i]);
            adam.second_moment[i] = std::move(values[2 * count + i]);
        }

        const Json& es = m.at("early_stopping");
        std::optional<double> best;
        if (!es.at("best_val_auc").is_null()) best = es.at("best_val_auc").get<double>();
        EarlyStopping stopping =
            EarlyStopping::restore(es.at("patience").get<std::size_t>(), best, es.at("best_epoch").get<std::size_t>(),
                                   es.at("stale").get<std::size_t>(), es.at("epochs").get<std::size_t>());

        std::optional<double> bandwidth;
        if (!m.at("bandwidth").is_null()) bandwidth = m.at("bandwidth").get<double>();

        TrainerState state{std::move(model),
                           std::move(adam),
                           Rng::deserialize(m.at("rng").at("interaction").get<std::string>()),
                           Rng::deserialize(m.at("rng").at("kind").get<std::string>()),
                           m.at("epoch").get<std::size_t>(),
                           bandwidth,
                           m.at("bandwidth_fallback").get<bool>(),
                           stopping};
        return LoadedCheckpoint{std::move(state), train, m.value("run_config", Json(nullptr))};
    } catch (const Json::exception& e) {
        fail(ErrorKind::Format, dir.string() + ": malformed manifest: " + e.what());
    }
}

}  // namespace duration
