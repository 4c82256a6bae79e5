// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/matrix.hpp"

namespace duration {

enum class AttributeKind : std::uint8_t { Categorical, Numeric };

struct AttributeSpec {
    std::string name;
    AttributeKind kind = AttributeKind::Numeric;
    std::vector<std::string> vocabulary;  // categorical levels, one-hot order
    double mean = 0.0;                    // numeric normalization, train split only
    double stddev = 1.0;

    std::size_t width() const noexcept {
        return kind == AttributeKind::Categorical ? vocabulary.size() : 1;
    }
};

struct FeatureSchema {
    std::vector<AttributeSpec> attributes;

    std::size_t encoded_dim() const noexcept;
};

/// Infers attribute kinds (numeric iff every present value parses as a finite
/// number, unless overridden) and fits vocabularies/normalization stats on the
/// rows flagged in `train_rows`. When no row is flagged, all rows are used.
FeatureSchema fit_schema(const std::vector<std::string>& names,
                         const std::vector<const std::vector<RawValue>*>& rows,
                         const std::vector<std::uint8_t>& train_rows,
                         const std::map<std::string, AttributeOverride>& overrides = {});

/// One-hot categoricals (unknown or missing level: zero block), z-scored
/// numerics (missing: 0).
std::vector<double> encode_record(std::span<const RawValue> attributes, const FeatureSchema& schema);
inline std::vector<double> encode_item(const ItemRecord& item, const FeatureSchema& schema) {
    return encode_record(item.attributes, schema);
}

/// Sparse row of an entity's train-split feedback: users range over all items
/// (global item order), items over users. Value raw_rating/5, else the label.
struct SparseInteractionVector {
    std::size_t length = 0;
    std::map<std::uint32_t, double> entries;
};

enum class EntityKind : std::uint8_t { User, Item };

SparseInteractionVector interaction_vector(const HeteroDataset& dataset, EntityKind entity,
                                           std::uint32_t index, std::uint32_t kind = 0);

/// Everything the model consumes, derived from a split dataset.
struct EncodedDataset {
    FeatureSchema user_schema;
    std::vector<FeatureSchema> item_schemas;
    Matrix user_features;                  // N × d_u (d_u may be 0)
    std::vector<Matrix> item_features;     // per kind, M_p × d_p
    SparseRows user_interactions;          // N rows over M items
    std::vector<SparseRows> item_interactions;  // per kind, M_p rows over N users
    std::vector<std::size_t> item_offsets;

    std::size_t num_users() const noexcept { return user_features.rows(); }
    std::size_t num_items() const noexcept;
    std::size_t num_kinds() const noexcept { return item_features.size(); }
};

/// Fits schemas on the train split and encodes every record and interaction row.
EncodedDataset encode_dataset(const HeteroDataset& dataset);

}  // namespace duration
