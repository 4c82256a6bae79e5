// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "core/error.hpp"
#include "core/matrix.hpp"
#include "core/random.hpp"

namespace duration {

void SyntheticConfig::validate() const {
    require(!kinds.empty(), ErrorKind::Config, "synthetic.kinds: at least one kind is required");
    require(users > 0, ErrorKind::Config, "synthetic.users: must be positive");
    require(latent_dim > 0, ErrorKind::Config, "synthetic.latent_dim: must be positive");
    require(label_noise >= 0.0 && attribute_noise >= 0.0 && category_temperature >= 0.0, ErrorKind::Config,
            "synthetic: noise levels must be non-negative");
    for (const auto& k : kinds) {
        const std::string at = "synthetic.kinds[" + k.name + "]";
        require(!k.name.empty(), ErrorKind::Config, "synthetic.kinds: kind name must be non-empty");
        require(k.items > 0, ErrorKind::Config, at + ".items: must be positive");
        require(k.density > 0.0 && k.density <= 1.0, ErrorKind::Config, at + ".density: must lie in (0, 1]");
        require(k.numeric_attributes + k.categorical_attributes > 0, ErrorKind::Config,
                at + ": needs at least one attribute");
        require(k.categorical_attributes == 0 || k.cardinality >= 2, ErrorKind::Config,
                at + ".cardinality: must be at least 2");
        require(paired_items <= k.items, ErrorKind::Config, "synthetic.paired_items exceeds " + at + ".items");
    }
}

namespace {

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Matrix gaussian(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
    Matrix m(rows, cols);
    for (auto& v : m.values()) v = scale * rng.normal();
    return m;
}

std::vector<double> latent(std::size_t dim, Rng& rng) {
    std::vector<double> z(dim);
    for (auto& v : z) v = rng.normal();
    return z;
}

}  // namespace

HeteroDataset synthesize_dataset(const SyntheticConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    const std::size_t k_dim = config.latent_dim;
    const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(k_dim));

    HeteroDataset ds;
    ds.name = config.name;

    std::vector<std::vector<double>> user_latent(config.users);
    for (auto& u : user_latent) u = latent(k_dim, rng);
    const Matrix user_map = gaussian(config.user_attributes, k_dim, inv_sqrt_k, rng);
    for (std::size_t a = 0; a < config.user_attributes; ++a) ds.user_attribute_names.push_back("u" + std::to_string(a));
    for (std::size_t u = 0; u < config.users; ++u) {
        UserRecord rec{"user_" + std::to_string(u), {}};
        for (std::size_t a = 0; a < config.user_attributes; ++a) {
            double v = 0.0;
            for (std::size_t j = 0; j < k_dim; ++j) v += user_map(a, j) * user_latent[u][j];
            rec.attributes.emplace_back(format_number(v + config.attribute_noise * rng.normal()));
        }
        ds.users.push_back(std::move(rec));
    }

    std::vector<std::vector<double>> shared_latent(config.paired_items);
    for (auto& z : shared_latent) z = latent(k_dim, rng);

    for (std::size_t p = 0; p < config.kinds.size(); ++p) {
        const auto& kind = config.kinds[p];
        const std::size_t hidden = 2 * k_dim;
        // kind-specific image: numeric = B tanh(A z + c) + noise, categorical = argmax(C z + gumbel)
        const Matrix a = gaussian(hidden, k_dim, 1.5 * inv_sqrt_k, rng);
        const Matrix c = gaussian(hidden, 1, 0.5, rng);
        const Matrix b = gaussian(kind.numeric_attributes, hidden, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
        std::vector<Matrix> cat_maps;
        for (std::size_t j = 0; j < kind.categorical_attributes; ++j)
            cat_maps.push_back(gaussian(kind.cardinality, k_dim, 2.0 * inv_sqrt_k, rng));

        Catalog cat;
        cat.kind = kind.name;
        for (std::size_t j = 0; j < kind.numeric_attributes; ++j) cat.attribute_names.push_back("num" + std::to_string(j));
        for (std::size_t j = 0; j < kind.categorical_attributes; ++j) cat.attribute_names.push_back("cat" + std::to_string(j));

        std::vector<std::vector<double>> item_latent(kind.items);
        for (std::size_t i = 0; i < kind.items; ++i) {
            item_latent[i] = i < config.paired_items ? shared_latent[i] : latent(k_dim, rng);
            const auto& z = item_latent[i];
            std::vector<double> h(hidden);
            for (std::size_t r = 0; r < hidden; ++r) {
                double acc = c[r];
                for (std::size_t j = 0; j < k_dim; ++j) acc += a(r, j) * z[j];
                h[r] = std::tanh(acc);
            }
            ItemRecord rec{kind.name + "_" + std::to_string(i), {}};
            for (std::size_t j = 0; j < kind.numeric_attributes; ++j) {
                double v = 0.0;
                for (std::size_t r = 0; r < hidden; ++r) v += b(j, r) * h[r];
                rec.attributes.emplace_back(format_number(v + config.attribute_noise * rng.normal()));
            }
            for (const auto& map : cat_maps) {
                std::size_t best = 0;
                double best_score = -INFINITY;
                for (std::size_t level = 0; level < map.rows(); ++level) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < k_dim; ++j) s += map(level, j) * z[j];
                    double u = rng.uniform();
                    while (u <= 0.0) u = rng.uniform();
                    s += config.category_temperature * -std::log(-std::log(u));
                    if (s > best_score) {
                        best_score = s;
                        best = level;
                    }
                }
                rec.attributes.emplace_back("l" + std::to_string(best));
            }
            cat.items.push_back(std::move(rec));
        }

        const double cells = static_cast<double>(config.users) * static_cast<double>(kind.items);
        const auto count = static_cast<std::size_t>(std::llround(kind.density * cells));
        std::unordered_set<std::uint64_t> taken;
        taken.reserve(count * 2);
        while (taken.size() < count) {
            const auto u = static_cast<std::uint32_t>(rng.index(config.users));
            const auto i = static_cast<std::uint32_t>(rng.index(kind.items));
            if (!taken.insert((static_cast<std::uint64_t>(u) << 32) | i).second) continue;
            double score = 0.0;
            for (std::size_t j = 0; j < k_dim; ++j) score += user_latent[u][j] * item_latent[i][j];
            score = score * inv_sqrt_k + config.label_noise * rng.normal();
            Interaction x;
            x.user = u;
            x.kind = static_cast<std::uint32_t>(p);
            x.item = i;
            x.label = score > 0.0 ? 1 : 0;
            ds.interactions.push_back(x);
        }
        ds.catalogs.push_back(std::move(cat));
    }
    require(!ds.interactions.empty(), ErrorKind::Config, "synthetic configuration produces no interactions");
    ds.validate();
    return ds;
}

}  // namespace duration
