// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/random.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace duration {

const char* split_name(SplitTag tag) noexcept {
    switch (tag) {
        case SplitTag::Train: return "train";
        case SplitTag::Val: return "val";
        case SplitTag::Test: return "test";
    }
    return "?";
}

std::size_t HeteroDataset::num_items() const noexcept {
    std::size_t n = 0;
    for (const auto& c : catalogs) n += c.items.size();
    return n;
}

std::size_t HeteroDataset::item_offset(std::size_t kind) const {
    require(kind < catalogs.size(), ErrorKind::InvalidArgument, "kind index out of range");
    std::size_t offset = 0;
    for (std::size_t k = 0; k < kind; ++k) offset += catalogs[k].items.size();
    return offset;
}

std::optional<std::size_t> HeteroDataset::kind_index(const std::string& kind) const {
    for (std::size_t k = 0; k < catalogs.size(); ++k)
        if (catalogs[k].kind == kind) return k;
    return std::nullopt;
}

void HeteroDataset::validate() const {
    require(!catalogs.empty(), ErrorKind::Format, "dataset has no item kinds");
    require(!users.empty(), ErrorKind::Format, "dataset has no users");
    require(num_items() > 0, ErrorKind::Format, "dataset has no items");
    require(!interactions.empty(), ErrorKind::Format, "no interactions");
    for (const auto& c : catalogs) {
        std::unordered_map<std::string, std::size_t> seen;
        for (const auto& item : c.items) {
            require(item.attributes.size() == c.attribute_names.size(), ErrorKind::Format,
                    "item '" + item.id + "' of kind '" + c.kind + "' has " +
                        std::to_string(item.attributes.size()) + " attributes, schema has " +
                        std::to_string(c.attribute_names.size()));
            require(seen.emplace(item.id, 0).second, ErrorKind::Format,
                    "duplicate item id '" + item.id + "' in kind '" + c.kind + "'");
        }
    }
    std::unordered_map<std::string, std::size_t> user_ids;
    for (const auto& u : users) {
        require(u.attributes.size() == user_attribute_names.size(), ErrorKind::Format,
                "user '" + u.id + "' attribute count does not match the user schema");
        require(user_ids.emplace(u.id, 0).second, ErrorKind::Format, "duplicate user id '" + u.id + "'");
    }
    for (std::size_t i = 0; i < interactions.size(); ++i) {
        const auto& x = interactions[i];
        require(x.user < users.size() && x.kind < catalogs.size() &&
                    x.item < catalogs[x.kind].items.size(),
                ErrorKind::Format, "interaction " + std::to_string(i) + " references a missing entity");
        require(x.label <= 1, ErrorKind::Format, "interaction " + std::to_string(i) + " has label > 1");
        if (x.raw_rating)
            require(x.label == binarize_rating(*x.raw_rating), ErrorKind::Format,
                    "interaction " + std::to_string(i) + " label disagrees with its rating");
    }
    require(cold_users.empty() || cold_users.size() == users.size(), ErrorKind::Format,
            "cold-user flags do not cover every user");
}

std::uint8_t binarize_rating(int raw_rating) {
    require(raw_rating >= 1 && raw_rating <= 5, ErrorKind::Format,
            "rating " + std::to_string(raw_rating) + " outside 1..5");
    return raw_rating > 3 ? 1 : 0;
}

SplitCounts count_splits(const HeteroDataset& dataset) {
    SplitCounts c;
    for (const auto& x : dataset.interactions) {
        switch (x.split) {
            case SplitTag::Train: ++c.train; break;
            case SplitTag::Val: ++c.val; break;
            case SplitTag::Test: ++c.test; break;
        }
    }
    return c;
}

namespace {

void check_ratios(const std::array<double, 3>& ratios) {
    for (double r : ratios)
        require(r >= 0.0 && std::isfinite(r), ErrorKind::Config, "split ratios must be non-negative");
    const double total = ratios[0] + ratios[1] + ratios[2];
    require(std::abs(total - 1.0) <= 1e-9, ErrorKind::Config,
            "split ratios must sum to 1 (got " + std::to_string(total) + ")");
}

// Assigns tags to `indices` (already shuffled) in train, val, test order.
void assign_by_ratio(HeteroDataset& dataset, const std::vector<std::size_t>& indices,
                     const std::array<double, 3>& ratios) {
    const auto n = static_cast<double>(indices.size());
    const auto n_train = static_cast<std::size_t>(std::llround(n * ratios[0]));
    const auto n_val = std::min(indices.size() - std::min(n_train, indices.size()),
                                static_cast<std::size_t>(std::llround(n * ratios[1])));
    for (std::size_t i = 0; i < indices.size(); ++i) {
        SplitTag tag = SplitTag::Test;
        if (i < n_train) tag = SplitTag::Train;
        else if (i < n_train + n_val) tag = SplitTag::Val;
        dataset.interactions[indices[i]].split = tag;
    }
}

}  // namespace

void split(HeteroDataset& dataset, std::array<double, 3> ratios, std::uint64_t seed) {
    check_ratios(ratios);
    std::vector<std::size_t> order(dataset.interactions.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    assign_by_ratio(dataset, order, ratios);
    dataset.cold_users.clear();
}

void cold_start_split(HeteroDataset& dataset, std::uint64_t seed, const ColdStartOptions& options) {
    check_ratios(options.ratios);
    require(options.cold_fraction >= 0.0 && options.cold_fraction <= 1.0, ErrorKind::Config,
            "cold_fraction must lie in [0, 1]");
    Rng rng(seed);

    std::vector<std::uint32_t> user_order(dataset.users.size());
    std::iota(user_order.begin(), user_order.end(), 0u);
    rng.shuffle(user_order);
    const auto n_cold = static_cast<std::size_t>(
        std::llround(options.cold_fraction * static_cast<double>(dataset.users.size())));
    dataset.cold_users.assign(dataset.users.size(), 0);
    for (std::size_t i = 0; i < n_cold; ++i) dataset.cold_users[user_order[i]] = 1;

    std::vector<std::vector<std::size_t>> per_cold_user(dataset.users.size());
    std::vector<std::size_t> warm;
    for (std::size_t i = 0; i < dataset.interactions.size(); ++i) {
        const auto user = dataset.interactions[i].user;
        if (dataset.cold_users[user]) per_cold_user[user].push_back(i);
        else warm.push_back(i);
    }
    for (auto& list : per_cold_user) {
        if (list.empty()) continue;
        rng.shuffle(list);
        for (std::size_t k = 0; k < list.size(); ++k)
            dataset.interactions[list[k]].split = k < options.cap ? SplitTag::Train : SplitTag::Test;
    }
    rng.shuffle(warm);
    assign_by_ratio(dataset, warm, options.ratios);
}

// ---------------------------------------------------------------------------
// text layout

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

bool is_missing(const std::string& cell) {
    return cell.empty() || cell == "NA" || cell == "\\N" || cell == "null";
}

struct TsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> lines;  // 1-based source line of each row
};

TsvTable read_tsv(const fs::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::Io, "cannot open " + path.string());
    TsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_tabs(line);
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        require(cells.size() == table.header.size(), ErrorKind::Format,
                path.filename().string() + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(table.header.size()) + " columns, found " +
                    std::to_string(cells.size()));
        table.rows.push_back(std::move(cells));
        table.lines.push_back(line_no);
    }
    require(!table.header.empty(), ErrorKind::Format, path.filename().string() + ": missing header row");
    return table;
}

std::vector<RawValue> to_raw(const std::vector<std::string>& cells) {
    std::vector<RawValue> out;
    out.reserve(cells.size() - 1);
    for (std::size_t i = 1; i < cells.size(); ++i) {
        if (is_missing(cells[i])) out.emplace_back(std::nullopt);
        else out.emplace_back(cells[i]);
    }
    return out;
}

std::string where(const fs::path& file, std::size_t line) {
    return file.filename().string() + ":" + std::to_string(line) + ": ";
}

int parse_int(const std::string& text, const std::string& context) {
    std::size_t used = 0;
    int value = 0;
    try {
        value = std::stoi(text, &used);
    } catch (const std::exception&) {
        fail(ErrorKind::Format, context + "'" + text + "' is not an integer");
    }
    require(used == text.size(), ErrorKind::Format, context + "'" + text + "' is not an integer");
    return value;
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::Io, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, path.filename().string() + ": " + e.what());
    }
}

}  // namespace

HeteroDataset load_dataset(const fs::path& root, std::optional<std::vector<std::string>> kinds) {
    require(fs::is_directory(root), ErrorKind::Io, "dataset root " + root.string() + " is not a directory");
    json manifest = json::object();
    if (fs::exists(root / "manifest.json")) manifest = read_json_file(root / "manifest.json");

    HeteroDataset ds;
    ds.name = manifest.value("name", root.filename().string());
    if (!kinds) {
        require(manifest.contains("kinds"), ErrorKind::Format,
                (root / "manifest.json").string() + " must list the item kinds");
        kinds = manifest.at("kinds").get<std::vector<std::string>>();
    }
    require(!kinds->empty(), ErrorKind::Format, "at least one item kind is required");

    std::vector<std::unordered_map<std::string, std::uint32_t>> item_index(kinds->size());
    for (std::size_t k = 0; k < kinds->size(); ++k) {
        const fs::path file = root / ((*kinds)[k] + ".tsv");
        auto table = read_tsv(file);
        Catalog c;
        c.kind = (*kinds)[k];
        c.attribute_names.assign(table.header.begin() + 1, table.header.end());
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const auto& cells = table.rows[r];
            require(!is_missing(cells[0]), ErrorKind::Format, where(file, table.lines[r]) + "missing item id");
            require(item_index[k].emplace(cells[0], static_cast<std::uint32_t>(c.items.size())).second,
                    ErrorKind::Format, where(file, table.lines[r]) + "duplicate item id '" + cells[0] + "'");
            c.items.push_back(ItemRecord{cells[0], to_raw(cells)});
        }
        require(!c.items.empty(), ErrorKind::Format, file.filename().string() + ": no items");
        ds.catalogs.push_back(std::move(c));
    }

    std::unordered_map<std::string, std::uint32_t> user_index;
    const bool has_user_table = fs::exists(root / "users.tsv");
    if (has_user_table) {
        const fs::path file = root / "users.tsv";
        auto table = read_tsv(file);
        ds.user_attribute_names.assign(table.header.begin() + 1, table.header.end());
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const auto& cells = table.rows[r];
            require(user_index.emplace(cells[0], static_cast<std::uint32_t>(ds.users.size())).second,
                    ErrorKind::Format, where(file, table.lines[r]) + "duplicate user id '" + cells[0] + "'");
            ds.users.push_back(UserRecord{cells[0], to_raw(cells)});
        }
    }

    const fs::path file = root / "interactions.tsv";
    auto table = read_tsv(file);
    require(table.header.size() == 4 || table.header.size() == 5, ErrorKind::Format,
            file.filename().string() + ": expected columns user_id kind item_id rating [label]");
    const bool has_label = table.header.size() == 5;
    require(!table.rows.empty(), ErrorKind::Format, "no interactions");
    ds.interactions.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cells = table.rows[r];
        const std::string at = where(file, table.lines[r]);
        Interaction x;
        auto kind = std::find(kinds->begin(), kinds->end(), cells[1]);
        require(kind != kinds->end(), ErrorKind::Format, at + "unknown kind '" + cells[1] + "'");
        x.kind = static_cast<std::uint32_t>(kind - kinds->begin());
        auto item = item_index[x.kind].find(cells[2]);
        require(item != item_index[x.kind].end(), ErrorKind::Format,
                at + "unknown item id '" + cells[2] + "' for kind '" + cells[1] + "'");
        x.item = item->second;
        auto user = user_index.find(cells[0]);
        if (user == user_index.end()) {
            require(!has_user_table, ErrorKind::Format, at + "unknown user id '" + cells[0] + "'");
            user = user_index.emplace(cells[0], static_cast<std::uint32_t>(ds.users.size())).first;
            ds.users.push_back(UserRecord{cells[0], {}});
        }
        x.user = user->second;
        if (!is_missing(cells[3])) {
            x.raw_rating = parse_int(cells[3], at);
            try {
                x.label = binarize_rating(*x.raw_rating);
            } catch (const Error& e) {
                fail(ErrorKind::Format, at + e.what());
            }
        } else {
            require(has_label && !is_missing(cells[4]), ErrorKind::Format,
                    at + "rating missing and no label given");
            const int label = parse_int(cells[4], at);
            require(label == 0 || label == 1, ErrorKind::Format, at + "label must be 0 or 1");
            x.label = static_cast<std::uint8_t>(label);
        }
        ds.interactions.push_back(x);
    }

    if (fs::exists(root / "schema.json")) {
        const json schema = read_json_file(root / "schema.json");
        for (const auto& [table_name, attrs] : schema.items()) {
            const std::vector<std::string>* names = nullptr;
            if (table_name == "users") names = &ds.user_attribute_names;
            else if (auto k = ds.kind_index(table_name)) names = &ds.catalogs[*k].attribute_names;
            require(names != nullptr, ErrorKind::Format, "schema.json: unknown table '" + table_name + "'");
            for (const auto& [attr, spec] : attrs.items()) {
                require(std::find(names->begin(), names->end(), attr) != names->end(), ErrorKind::Format,
                        "schema.json: unknown attribute '" + table_name + "." + attr + "'");
                const std::string kind = spec.value("kind", "");
                require(kind == "categorical" || kind == "numeric", ErrorKind::Format,
                        "schema.json: " + table_name + "." + attr + ".kind must be categorical or numeric");
                AttributeOverride o;
                o.categorical = kind == "categorical";
                if (spec.contains("vocabulary")) o.vocabulary = spec.at("vocabulary").get<std::vector<std::string>>();
                ds.schema_overrides[table_name][attr] = std::move(o);
            }
        }
    }

    if (manifest.contains("counts")) {
        const auto& counts = manifest.at("counts");
        auto expect = [](std::size_t got, const json& want, const std::string& what) {
            require(got == want.get<std::size_t>(), ErrorKind::Format,
                    "manifest expects " + want.dump() + " " + what + ", found " + std::to_string(got));
        };
        if (counts.contains("users")) expect(ds.users.size(), counts.at("users"), "users");
        if (counts.contains("interactions")) expect(ds.interactions.size(), counts.at("interactions"), "interactions");
        if (counts.contains("items"))
            for (std::size_t k = 0; k < ds.catalogs.size(); ++k)
                if (counts.at("items").contains(ds.catalogs[k].kind))
                    expect(ds.catalogs[k].items.size(), counts.at("items").at(ds.catalogs[k].kind),
                           ds.catalogs[k].kind + " items");
    }

    ds.validate();
    return ds;
}

HeteroDataset load_douban(const fs::path& root) {
    auto ds = load_dataset(root, kDoubanKinds);
    if (!fs::exists(root / "manifest.json")) ds.name = "douban";
    return ds;
}

void save_dataset(const HeteroDataset& ds, const fs::path& root) {
    ds.validate();
    std::error_code ec;
    fs::create_directories(root, ec);
    require(!ec, ErrorKind::Io, "cannot create " + root.string() + ": " + ec.message());

    auto open = [&](const std::string& name) {
        std::ofstream out(root / name);
        require(out.good(), ErrorKind::Io, "cannot write " + (root / name).string());
        return out;
    };
    auto write_cells = [](std::ofstream& out, const std::string& id, const std::vector<RawValue>& cells) {
        out << id;
        for (const auto& c : cells) out << '\t' << (c ? *c : std::string("NA"));
        out << '\n';
    };

    for (const auto& c : ds.catalogs) {
        auto out = open(c.kind + ".tsv");
        out << "item_id";
        for (const auto& a : c.attribute_names) out << '\t' << a;
        out << '\n';
        for (const auto& item : c.items) write_cells(out, item.id, item.attributes);
    }
    {
        auto out = open("users.tsv");
        out << "user_id";
        for (const auto& a : ds.user_attribute_names) out << '\t' << a;
        out << '\n';
        for (const auto& u : ds.users) write_cells(out, u.id, u.attributes);
    }
    {
        auto out = open("interactions.tsv");
        out << "user_id\tkind\titem_id\trating\tlabel\n";
        for (const auto& x : ds.interactions) {
            out << ds.users[x.user].id << '\t' << ds.catalogs[x.kind].kind << '\t'
                << ds.catalogs[x.kind].items[x.item].id << '\t'
                << (x.raw_rating ? std::to_string(*x.raw_rating) : std::string("NA")) << '\t'
                << static_cast<int>(x.label) << '\n';
        }
    }
    if (!ds.schema_overrides.empty()) {
        json schema = json::object();
        for (const auto& [table_name, attrs] : ds.schema_overrides)
            for (const auto& [attr, o] : attrs) {
                json spec = {{"kind", o.categorical ? "categorical" : "numeric"}};
                if (!o.vocabulary.empty()) spec["vocabulary"] = o.vocabulary;
                schema[table_name][attr] = spec;
            }
        auto out = open("schema.json");
        out << schema.dump(2) << '\n';
    }
    json manifest;
    manifest["name"] = ds.name;
    manifest["kinds"] = json::array();
    json items = json::object();
    for (const auto& c : ds.catalogs) {
        manifest["kinds"].push_back(c.kind);
        items[c.kind] = c.items.size();
    }
    manifest["counts"] = {{"users", ds.users.size()}, {"interactions", ds.interactions.size()}, {"items", items}};
    auto out = open("manifest.json");
    out << manifest.dump(2) << '\n';
}

}  // namespace duration
