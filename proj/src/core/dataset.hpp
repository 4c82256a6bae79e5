// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace duration {

enum class SplitTag : std::uint8_t { Train = 0, Val = 1, Test = 2 };

const char* split_name(SplitTag tag) noexcept;

/// Attribute cell as read from the attribute tables; nullopt means missing.
using RawValue = std::optional<std::string>;

struct ItemRecord {
    std::string id;
    std::vector<RawValue> attributes;
};

struct UserRecord {
    std::string id;
    std::vector<RawValue> attributes;
};

/// All items of one kind. Items of a kind share one attribute schema.
struct Catalog {
    std::string kind;
    std::vector<std::string> attribute_names;
    std::vector<ItemRecord> items;
};

struct Interaction {
    std::uint32_t user = 0;
    std::uint32_t kind = 0;
    std::uint32_t item = 0;  // index within the kind's catalog
    std::optional<int> raw_rating;
    std::uint8_t label = 0;
    SplitTag split = SplitTag::Train;
};

/// Declared attribute type and, for categoricals, a fixed vocabulary.
struct AttributeOverride {
    bool categorical = false;
    std::vector<std::string> vocabulary;  // empty: inferred from the train split
};

/// Keyed by table ("users" or an item kind), then attribute name.
using SchemaOverrides = std::map<std::string, std::map<std::string, AttributeOverride>>;

struct HeteroDataset {
    std::string name;
    SchemaOverrides schema_overrides;
    std::vector<std::string> user_attribute_names;
    std::vector<UserRecord> users;
    std::vector<Catalog> catalogs;
    std::vector<Interaction> interactions;
    std::vector<std::uint8_t> cold_users;  // per-user flag, empty unless a cold-start split ran

    std::size_t num_users() const noexcept { return users.size(); }
    std::size_t num_kinds() const noexcept { return catalogs.size(); }
    std::size_t num_items() const noexcept;
    /// Position of the first item of `kind` in the global item order.
    std::size_t item_offset(std::size_t kind) const;
    std::optional<std::size_t> kind_index(const std::string& kind) const;
    bool is_cold(std::uint32_t user) const noexcept {
        return user < cold_users.size() && cold_users[user] != 0;
    }

    /// Checks every structural invariant; throws a format error naming the first violation.
    void validate() const;
};

/// 1 iff the star rating exceeds three. Ratings outside 1..5 are rejected.
std::uint8_t binarize_rating(int raw_rating);

struct SplitCounts {
    std::size_t train = 0, val = 0, test = 0;
};
SplitCounts count_splits(const HeteroDataset& dataset);

/// Seeded uniform partition of the interactions into train/val/test.
void split(HeteroDataset& dataset, std::array<double, 3> ratios, std::uint64_t seed);

struct ColdStartOptions {
    std::size_t cap = 3;           // train interactions kept per cold user
    double cold_fraction = 0.2;    // share of users designated cold
    std::array<double, 3> ratios{0.7, 0.2, 0.1};
};

/// Cold users keep at most `cap` interactions in train, the rest go to test;
/// everyone else is split by `ratios`.
void cold_start_split(HeteroDataset& dataset, std::uint64_t seed, const ColdStartOptions& options = {});

// ---------------------------------------------------------------------------
// delimited-text layout
//
//   <root>/<kind>.tsv        item_id, then one column per attribute (header row)
//   <root>/interactions.tsv  user_id kind item_id rating [label]
//   <root>/users.tsv         optional: user_id, then user attributes
//   <root>/manifest.json     optional: name, kinds, expected counts
//   <root>/schema.json       optional: attribute kind / vocabulary overrides

inline const std::vector<std::string> kDoubanKinds{"book", "music", "movie"};

/// Loads a dataset; the kinds come from `kinds`, else from manifest.json.
HeteroDataset load_dataset(const std::filesystem::path& root,
                           std::optional<std::vector<std::string>> kinds = std::nullopt);
/// load_dataset with the three Douban kinds.
HeteroDataset load_douban(const std::filesystem::path& root);
void save_dataset(const HeteroDataset& dataset, const std::filesystem::path& root);

}  // namespace duration
