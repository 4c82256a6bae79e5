// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

// Small fixtures shared by the unit tests.

#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "core/dataset.hpp"
#include "core/encoding.hpp"
#include "core/synthetic.hpp"

namespace duration::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("duration-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Two kinds, a handful of users, every user with a couple of interactions.
inline SyntheticConfig toy_synthetic(std::size_t users = 12) {
    SyntheticConfig c;
    c.name = "toy";
    c.users = users;
    c.latent_dim = 3;
    c.user_attributes = 2;
    c.kinds = {{"a", 6, 0.4, 2, 1, 3}, {"b", 5, 0.4, 3, 0, 2}};
    return c;
}

/// One user and one item of one kind, with a single train interaction.
inline HeteroDataset tiny_dataset() {
    HeteroDataset ds;
    ds.name = "tiny";
    ds.users = {{"u0", {}}};
    Catalog c;
    c.kind = "k";
    c.attribute_names = {"x"};
    c.items = {{"i0", {RawValue("1.0")}}};
    ds.catalogs.push_back(c);
    Interaction x;
    x.raw_rating = 5;
    x.label = 1;
    ds.interactions.push_back(x);
    return ds;
}

}  // namespace duration::testing
