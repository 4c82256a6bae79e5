// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "core/error.hpp"

namespace duration {

std::size_t FeatureSchema::encoded_dim() const noexcept {
    std::size_t d = 0;
    for (const auto& a : attributes) d += a.width();
    return d;
}

namespace {

bool parse_number(const std::string& text, double& out) {
    if (text.empty()) return false;
    char* end = nullptr;
    out = std::strtod(text.c_str(), &end);
    return end == text.c_str() + text.size() && std::isfinite(out);
}

}  // namespace

FeatureSchema fit_schema(const std::vector<std::string>& names,
                         const std::vector<const std::vector<RawValue>*>& rows,
                         const std::vector<std::uint8_t>& train_rows,
                         const std::map<std::string, AttributeOverride>& overrides) {
    require(train_rows.size() == rows.size(), ErrorKind::InvalidArgument,
            "fit_schema: train flags must cover every row");
    const bool any_train = std::any_of(train_rows.begin(), train_rows.end(), [](auto f) { return f != 0; });
    auto in_fit = [&](std::size_t r) { return !any_train || train_rows[r] != 0; };

    FeatureSchema schema;
    for (std::size_t a = 0; a < names.size(); ++a) {
        AttributeSpec spec;
        spec.name = names[a];
        auto override_it = overrides.find(names[a]);
        if (override_it != overrides.end()) {
            spec.kind = override_it->second.categorical ? AttributeKind::Categorical : AttributeKind::Numeric;
            spec.vocabulary = override_it->second.vocabulary;
        } else {
            bool numeric = true;
            double scratch = 0.0;
            for (const auto* row : rows) {
                const auto& cell = (*row)[a];
                if (cell && !parse_number(*cell, scratch)) {
                    numeric = false;
                    break;
                }
            }
            spec.kind = numeric ? AttributeKind::Numeric : AttributeKind::Categorical;
        }

        if (spec.kind == AttributeKind::Categorical) {
            if (spec.vocabulary.empty()) {
                std::set<std::string> levels;
                for (std::size_t r = 0; r < rows.size(); ++r)
                    if (in_fit(r) && (*rows[r])[a]) levels.insert(*(*rows[r])[a]);
                spec.vocabulary.assign(levels.begin(), levels.end());
            }
        } else {
            double sum = 0.0, sum_sq = 0.0;
            std::size_t n = 0;
            for (std::size_t r = 0; r < rows.size(); ++r) {
                double v = 0.0;
                const auto& cell = (*rows[r])[a];
                if (!in_fit(r) || !cell) continue;
                require(parse_number(*cell, v), ErrorKind::Format,
                        "attribute '" + names[a] + "' declared numeric but has value '" + *cell + "'");
                sum += v;
                ++n;
            }
            spec.mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
            for (std::size_t r = 0; r < rows.size(); ++r) {
                double v = 0.0;
                const auto& cell = (*rows[r])[a];
                if (!in_fit(r) || !cell || !parse_number(*cell, v)) continue;
                sum_sq += (v - spec.mean) * (v - spec.mean);
            }
            const double sd = n > 1 ? std::sqrt(sum_sq / static_cast<double>(n - 1)) : 0.0;
            spec.stddev = sd > 0.0 ? sd : 1.0;
        }
        schema.attributes.push_back(std::move(spec));
    }
    return schema;
}

std::vector<double> encode_record(std::span<const RawValue> attributes, const FeatureSchema& schema) {
    require(attributes.size() == schema.attributes.size(), ErrorKind::InvalidArgument,
            "record has " + std::to_string(attributes.size()) + " attributes, schema expects " +
                std::to_string(schema.attributes.size()));
    std::vector<double> out(schema.encoded_dim(), 0.0);
    std::size_t offset = 0;
    for (std::size_t a = 0; a < attributes.size(); ++a) {
        const auto& spec = schema.attributes[a];
        const auto& cell = attributes[a];
        if (spec.kind == AttributeKind::Categorical) {
            if (cell) {
                auto it = std::find(spec.vocabulary.begin(), spec.vocabulary.end(), *cell);
                if (it != spec.vocabulary.end()) out[offset + static_cast<std::size_t>(it - spec.vocabulary.begin())] = 1.0;
            }
        } else if (cell) {
            double v = 0.0;
            require(parse_number(*cell, v), ErrorKind::Format,
                    "attribute '" + spec.name + "' expects a number, got '" + *cell + "'");
            out[offset] = (v - spec.mean) / spec.stddev;
        }
        offset += spec.width();
    }
    return out;
}

namespace {

double feedback_value(const Interaction& x) {
    return x.raw_rating ? static_cast<double>(*x.raw_rating) / 5.0 : static_cast<double>(x.label);
}

}  // namespace

SparseInteractionVector interaction_vector(const HeteroDataset& dataset, EntityKind entity,
                                           std::uint32_t index, std::uint32_t kind) {
    SparseInteractionVector v;
    if (entity == EntityKind::User) {
        require(index < dataset.num_users(), ErrorKind::InvalidArgument, "user index out of range");
        v.length = dataset.num_items();
        for (const auto& x : dataset.interactions)
            if (x.split == SplitTag::Train && x.user == index)
                v.entries[static_cast<std::uint32_t>(dataset.item_offset(x.kind) + x.item)] = feedback_value(x);
    } else {
        require(kind < dataset.num_kinds() && index < dataset.catalogs[kind].items.size(),
                ErrorKind::InvalidArgument, "item index out of range");
        v.length = dataset.num_users();
        for (const auto& x : dataset.interactions)
            if (x.split == SplitTag::Train && x.kind == kind && x.item == index) v.entries[x.user] = feedback_value(x);
    }
    return v;
}

std::size_t EncodedDataset::num_items() const noexcept {
    std::size_t n = 0;
    for (const auto& f : item_features) n += f.rows();
    return n;
}

EncodedDataset encode_dataset(const HeteroDataset& ds) {
    ds.validate();
    EncodedDataset enc;
    const std::size_t n_users = ds.num_users();
    const std::size_t n_kinds = ds.num_kinds();

    std::vector<std::uint8_t> user_in_train(n_users, 0);
    std::vector<std::vector<std::uint8_t>> item_in_train(n_kinds);
    for (std::size_t k = 0; k < n_kinds; ++k) item_in_train[k].assign(ds.catalogs[k].items.size(), 0);
    for (const auto& x : ds.interactions) {
        if (x.split != SplitTag::Train) continue;
        user_in_train[x.user] = 1;
        item_in_train[x.kind][x.item] = 1;
    }

    auto overrides_for = [&](const std::string& table) {
        auto it = ds.schema_overrides.find(table);
        return it == ds.schema_overrides.end() ? std::map<std::string, AttributeOverride>{} : it->second;
    };

    {
        std::vector<const std::vector<RawValue>*> rows;
        for (const auto& u : ds.users) rows.push_back(&u.attributes);
        enc.user_schema = fit_schema(ds.user_attribute_names, rows, user_in_train, overrides_for("users"));
        enc.user_features = Matrix(n_users, enc.user_schema.encoded_dim());
        for (std::size_t u = 0; u < n_users; ++u) {
            auto row = encode_record(ds.users[u].attributes, enc.user_schema);
            std::copy(row.begin(), row.end(), enc.user_features.row(u).begin());
        }
    }
    for (std::size_t k = 0; k < n_kinds; ++k) {
        const auto& c = ds.catalogs[k];
        std::vector<const std::vector<RawValue>*> rows;
        for (const auto& item : c.items) rows.push_back(&item.attributes);
        enc.item_schemas.push_back(fit_schema(c.attribute_names, rows, item_in_train[k], overrides_for(c.kind)));
        Matrix features(c.items.size(), enc.item_schemas.back().encoded_dim());
        for (std::size_t i = 0; i < c.items.size(); ++i) {
            auto row = encode_item(c.items[i], enc.item_schemas.back());
            std::copy(row.begin(), row.end(), features.row(i).begin());
        }
        enc.item_features.push_back(std::move(features));
        enc.item_offsets.push_back(ds.item_offset(k));
    }

    // Interaction rows, built in one pass then sorted by index for determinism.
    std::vector<std::vector<std::pair<std::uint32_t, double>>> user_rows(n_users);
    std::vector<std::vector<std::vector<std::pair<std::uint32_t, double>>>> item_rows(n_kinds);
    for (std::size_t k = 0; k < n_kinds; ++k) item_rows[k].resize(ds.catalogs[k].items.size());
    for (const auto& x : ds.interactions) {
        if (x.split != SplitTag::Train) continue;
        const double v = feedback_value(x);
        user_rows[x.user].emplace_back(static_cast<std::uint32_t>(enc.item_offsets[x.kind] + x.item), v);
        item_rows[x.kind][x.item].emplace_back(x.user, v);
    }
    auto finish = [](std::vector<std::pair<std::uint32_t, double>>& row) {
        std::stable_sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        // A repeated (user, item) pair keeps its last train value.
        std::vector<std::pair<std::uint32_t, double>> dedup;
        for (const auto& e : row) {
            if (!dedup.empty() && dedup.back().first == e.first) dedup.back().second = e.second;
            else dedup.push_back(e);
        }
        row = std::move(dedup);
    };
    enc.user_interactions = SparseRows(ds.num_items());
    for (auto& row : user_rows) {
        finish(row);
        enc.user_interactions.append_row(row);
    }
    for (std::size_t k = 0; k < n_kinds; ++k) {
        SparseRows rows(n_users);
        for (auto& row : item_rows[k]) {
            finish(row);
            rows.append_row(row);
        }
        enc.item_interactions.push_back(std::move(rows));
    }
    return enc;
}

}  // namespace duration
