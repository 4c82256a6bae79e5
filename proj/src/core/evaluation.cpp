// Copyright 2026 The Duration Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

#include "core/error.hpp"
#include "core/random.hpp"

namespace duration {

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    require(scores.size() == labels.size(), ErrorKind::InvalidArgument,
            "auc: " + std::to_string(scores.size()) + " scores vs " + std::to_string(labels.size()) + " labels");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Ranks are 1-based; doubling them keeps tie averages integral.
    std::uint64_t positives = 0;
    std::uint64_t doubled_rank_sum = 0;
    for (std::size_t i = 0; i < n;) {
        require(!std::isnan(scores[order[i]]), ErrorKind::InvalidArgument, "auc: NaN score");
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const std::uint64_t doubled_avg = static_cast<std::uint64_t>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) {
            if (labels[order[t]]) {
                ++positives;
                doubled_rank_sum += doubled_avg;
            }
        }
        i = j;
    }
    const std::uint64_t negatives = n - positives;
    require(positives > 0 && negatives > 0, ErrorKind::InvalidArgument,
            "auc is undefined without both positive and negative labels");
    // U = R+ − n+(n+ + 1)/2, all in doubled units.
    const std::uint64_t doubled_u = doubled_rank_sum - positives * (positives + 1);
    return static_cast<double>(doubled_u) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

EvalReport evaluate(const DurationModel& model, const HeteroDataset& dataset, const EncodedDataset& data,
                    const EvalOptions& options) {
    if (options.cold_only)
        require(!dataset.cold_users.empty(), ErrorKind::State,
                "cold-start evaluation needs a dataset split with the cold-start protocol");
    std::vector<const Interaction*> picked;
    for (const auto& it : dataset.interactions) {
        if (it.split != options.split) continue;
        if (options.cold_only && !dataset.is_cold(it.user)) continue;
        picked.push_back(&it);
    }
    require(!picked.empty(), ErrorKind::State,
            std::string("evaluation split '") + split_name(options.split) + "' has no interactions");

    std::vector<std::uint32_t> users;
    std::vector<std::vector<std::uint32_t>> items(dataset.num_kinds());
    for (const auto* it : picked) {
        users.push_back(it->user);
        items[it->kind].push_back(it->item);
    }
    auto unique = [](std::vector<std::uint32_t>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    unique(users);
    const Matrix user_emb = model.user_embeddings(data, users);
    std::vector<Matrix> item_emb;
    for (std::size_t p = 0; p < items.size(); ++p) {
        unique(items[p]);
        item_emb.push_back(model.item_embeddings(data, p, items[p]));
    }
    auto position = [](const std::vector<std::uint32_t>& v, std::uint32_t id) {
        return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), id) - v.begin());
    };

    // Logits rank identically to logistic scores and cannot saturate into ties.
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    std::vector<std::vector<double>> kind_scores(items.size());
    std::vector<std::vector<std::uint8_t>> kind_labels(items.size());
    for (const auto* it : picked) {
        const auto u = user_emb.row(position(users, it->user));
        const auto x = item_emb[it->kind].row(position(items[it->kind], it->item));
        double z = 0.0;
        for (std::size_t j = 0; j < u.size(); ++j) z += u[j] * x[j];
        scores.push_back(z);
        labels.push_back(it->label);
        kind_scores[it->kind].push_back(z);
        kind_labels[it->kind].push_back(it->label);
    }

    EvalReport report;
    report.split = split_name(options.split);
    report.cold_start = options.cold_only;
    report.count = picked.size();
    report.overall_auc = auc(scores, labels);
    for (std::size_t p = 0; p < items.size(); ++p) {
        KindReport k;
        k.kind = dataset.catalogs[p].kind;
        k.count = kind_scores[p].size();
        k.positives = static_cast<std::size_t>(std::count(kind_labels[p].begin(), kind_labels[p].end(), 1));
        if (k.positives > 0 && k.positives < k.count) k.auc = auc(kind_scores[p], kind_labels[p]);
        report.kinds.push_back(std::move(k));
    }
    return report;
}

// ---------------------------------------------------------------------------

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        acc += d * d;
    }
    return acc;
}

}  // namespace

KMeansResult kmeans(const Matrix& vectors, std::size_t k, std::uint64_t seed, std::size_t max_iter) {
    const std::size_t n = vectors.rows();
    require(k >= 1, ErrorKind::InvalidArgument, "kmeans: k must be at least 1");
    require(k <= n, ErrorKind::InvalidArgument,
            "kmeans: k = " + std::to_string(k) + " exceeds the " + std::to_string(n) + " vectors");
    require(all_finite(vectors.values()), ErrorKind::Numeric, "kmeans: non-finite input");
    const std::size_t d = vectors.cols();
    Rng rng(seed);

    std::vector<std::size_t> chosen{static_cast<std::size_t>(rng.index(n))};
    std::vector<double> nearest(n);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(vectors.row(i), vectors.row(chosen[0]));
    std::vector<std::uint8_t> taken(n, 0);
    taken[chosen[0]] = 1;
    while (chosen.size() < k) {
        const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
        std::size_t pick = n;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (nearest[i] <= 0.0) continue;
                acc += nearest[i];
                pick = i;
                if (acc > target) break;
            }
        } else {
            // Every remaining point coincides with a center; take an unused index.
            std::vector<std::size_t> free;
            for (std::size_t i = 0; i < n; ++i)
                if (!taken[i]) free.push_back(i);
            pick = free[static_cast<std::size_t>(rng.index(free.size()))];
        }
        chosen.push_back(pick);
        taken[pick] = 1;
        for (std::size_t i = 0; i < n; ++i)
            nearest[i] = std::min(nearest[i], squared_distance(vectors.row(i), vectors.row(pick)));
    }

    KMeansResult result;
    result.centroids = Matrix(k, d);
    for (std::size_t c = 0; c < k; ++c)
        std::copy(vectors.row(chosen[c]).begin(), vectors.row(chosen[c]).end(), result.centroids.row(c).begin());
    result.assignments.assign(n, std::numeric_limits<std::uint32_t>::max());

    for (std::size_t iter = 0; iter < std::max<std::size_t>(max_iter, 1); ++iter) {
        bool changed = false;
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double dist = squared_distance(vectors.row(i), result.centroids.row(c));
                if (dist < best_d) {
                    best_d = dist;
                    best = static_cast<std::uint32_t>(c);
                }
            }
            if (result.assignments[i] != best) changed = true;
            result.assignments[i] = best;
            inertia += best_d;
        }
        result.inertia = inertia;
        result.inertia_trace.push_back(inertia);
        result.iterations = iter + 1;
        if (!changed) break;

        Matrix sums(k, d);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = result.assignments[i];
            ++counts[c];
            auto dst = sums.row(c);
            auto src = vectors.row(i);
            for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // an empty cluster keeps its centroid
            auto dst = result.centroids.row(c);
            const auto src = sums.row(c);
            for (std::size_t j = 0; j < d; ++j) dst[j] = src[j] / static_cast<double>(counts[c]);
        }
    }
    return result;
}

PairwiseScore pairwise_f1(std::span<const std::uint32_t> raw, std::span<const std::uint32_t> unified) {
    require(raw.size() == unified.size(), ErrorKind::InvalidArgument,
            "pairwise_f1: " + std::to_string(raw.size()) + " raw vs " + std::to_string(unified.size()) +
                " unified assignments");
    auto pairs = [](std::uint64_t c) { return c * (c - (c > 0 ? 1 : 0)) / 2; };
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> joint;
    std::map<std::uint32_t, std::uint64_t> raw_sizes, unified_sizes;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        ++joint[{raw[i], unified[i]}];
        ++raw_sizes[raw[i]];
        ++unified_sizes[unified[i]];
    }
    std::uint64_t tp = 0, actual = 0, predicted = 0;
    for (const auto& [key, c] : joint) tp += pairs(c);
    for (const auto& [key, c] : raw_sizes) actual += pairs(c);
    for (const auto& [key, c] : unified_sizes) predicted += pairs(c);

    PairwiseScore s;
    s.true_positive = tp;
    s.false_positive = predicted - tp;
    s.false_negative = actual - tp;
    s.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    s.recall = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

double median(std::vector<double> values) {
    require(!values.empty(), ErrorKind::InvalidArgument, "median of an empty list");
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

std::size_t TopologyF1Table::wins() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.with_median >= r.without_median; }));
}

TopologyF1Table topology_f1_protocol(std::span<const DurationModel* const> with_topology,
                                     std::span<const DurationModel* const> without_topology,
                                     const EncodedDataset& data, const TopologyF1Options& options) {
    require(!with_topology.empty() && !without_topology.empty(), ErrorKind::InvalidArgument,
            "topology F1 needs at least one model per variant");
    require(!options.k_values.empty() && !options.seeds.empty(), ErrorKind::InvalidArgument,
            "topology F1 needs k values and seeds");
    const std::size_t kinds = data.num_kinds();

    auto unified_of = [&](std::span<const DurationModel* const> models) {
        std::vector<std::vector<Matrix>> out;
        for (const auto* m : models) {
            std::vector<Matrix> per_kind;
            for (std::size_t p = 0; p < kinds; ++p) per_kind.push_back(m->map_items(p, data.item_features[p]));
            out.push_back(std::move(per_kind));
        }
        return out;
    };
    const auto with_vectors = unified_of(with_topology);
    const auto without_vectors = unified_of(without_topology);

    TopologyF1Table table;
    for (auto k : options.k_values) {
        TopologyF1Row row;
        row.k = k;
        for (auto seed : options.seeds) {
            std::vector<std::vector<std::uint32_t>> pseudo;
            for (std::size_t p = 0; p < kinds; ++p)
                pseudo.push_back(kmeans(data.item_features[p], k, seed, options.max_iter).assignments);
            auto macro = [&](const std::vector<Matrix>& vectors) {
                double acc = 0.0;
                for (std::size_t p = 0; p < kinds; ++p)
                    acc += pairwise_f1(pseudo[p], kmeans(vectors[p], k, seed, options.max_iter).assignments).f1;
                return acc / static_cast<double>(kinds);
            };
            for (const auto& v : with_vectors) row.with_topology.push_back(macro(v));
            for (const auto& v : without_vectors) row.without_topology.push_back(macro(v));
        }
        row.with_median = median(row.with_topology);
        row.without_median = median(row.without_topology);
        table.rows.push_back(std::move(row));
    }
    return table;
}

Matrix similarity_matrix(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.cols(), ErrorKind::InvalidArgument,
            "similarity_matrix: widths " + std::to_string(a.cols()) + " and " + std::to_string(b.cols()));
    auto norms = [](const Matrix& m) {
        std::vector<double> out(m.rows());
        for (std::size_t r = 0; r < m.rows(); ++r) {
            double acc = 0.0;
            for (double v : m.row(r)) acc += v * v;
            out[r] = std::sqrt(acc);
        }
        return out;
    };
    const auto na = norms(a), nb = norms(b);
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.rows(); ++j) {
            if (na[i] == 0.0 || nb[j] == 0.0) {
                out(i, j) = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            double dot = 0.0;
            for (std::size_t c = 0; c < a.cols(); ++c) dot += a(i, c) * b(j, c);
            out(i, j) = std::clamp(dot / (na[i] * nb[j]), -1.0, 1.0);
        }
    }
    return out;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path);
    require(out.good(), ErrorKind::Io, "cannot write " + path.string());
    return out;
}

void put(std::ostream& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

}  // namespace

void write_similarity(const Matrix& similarity, std::span<const std::string> row_labels,
                      std::span<const std::string> col_labels, const std::filesystem::path& path) {
    require(row_labels.size() == similarity.rows() && col_labels.size() == similarity.cols(),
            ErrorKind::InvalidArgument, "similarity labels do not match the matrix shape");
    auto out = open_for_write(path);
    out << "id";
    for (const auto& c : col_labels) out << '\t' << c;
    out << '\n';
    for (std::size_t i = 0; i < similarity.rows(); ++i) {
        out << row_labels[i];
        for (std::size_t j = 0; j < similarity.cols(); ++j) {
            out << '\t';
            if (std::isnan(similarity(i, j)))
                out << "NA";
            else
                put(out, similarity(i, j));
        }
        out << '\n';
    }
    require(out.good(), ErrorKind::Io, "write failed for " + path.string());
}

void export_embeddings(const DurationModel& model, const HeteroDataset& dataset, const EncodedDataset& data,
                       const std::filesystem::path& path) {
    auto out = open_for_write(path);
    out << "id\tkind";
    for (std::size_t j = 0; j < model.config().unified_dim; ++j) out << "\tx" << j;
    out << '\n';
    for (std::size_t p = 0; p < dataset.num_kinds(); ++p) {
        const Matrix unified = model.map_items(p, data.item_features[p]);
        const auto& catalog = dataset.catalogs[p];
        for (std::size_t i = 0; i < catalog.items.size(); ++i) {
            out << catalog.items[i].id << '\t' << catalog.kind;
            for (double v : unified.row(i)) {
                out << '\t';
                put(out, v);
            }
            out << '\n';
        }
    }
    require(out.good(), ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace duration
