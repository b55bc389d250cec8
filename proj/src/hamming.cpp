#include "gth/hamming.hpp"

#include "gth/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <ostream>

namespace gth {

PackedCodes pack(const CodeMatrix& b) {
    PackedCodes out;
    out.r = static_cast<int>(b.rows());
    out.n = static_cast<int>(b.cols());
    const int wpi = out.words_per_item();
    out.words.assign(static_cast<size_t>(out.n) * wpi, 0);
    for (int i = 0; i < out.n; ++i) {
        std::uint64_t* item = out.words.data() + static_cast<size_t>(i) * wpi;
        for (int j = 0; j < out.r; ++j) {
            const double v = b(j, i);
            if (v == 1.0) {
                item[j / 64] |= std::uint64_t{1} << (j % 64);
            } else if (v != -1.0) {
                throw InputError("pack: code entries must be exactly -1 or +1");
            }
        }
    }
    return out;
}

CodeMatrix unpack(const PackedCodes& codes) {
    CodeMatrix b(codes.r, codes.n);
    const int wpi = codes.words_per_item();
    for (int i = 0; i < codes.n; ++i) {
        const std::uint64_t* item = codes.words.data() + static_cast<size_t>(i) * wpi;
        for (int j = 0; j < codes.r; ++j) {
            b(j, i) = (item[j / 64] >> (j % 64)) & 1u ? 1.0 : -1.0;
        }
    }
    return b;
}

int hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    if (a.size() != b.size()) {
        throw DimensionError("hamming: code lengths differ");
    }
    int dist = 0;
    for (size_t w = 0; w < a.size(); ++w) {
        dist += std::popcount(a[w] ^ b[w]);
    }
    return dist;
}

std::vector<int> rank(std::span<const std::uint64_t> query, const PackedCodes& db) {
    if (db.n == 0) throw InputError("rank: empty database");
    if (static_cast<int>(query.size()) != db.words_per_item()) {
        throw DimensionError("rank: code lengths differ");
    }
    // counting sort over distances 0..r; scanning items in index order
    // makes the tie-break by ascending index automatic
    std::vector<std::vector<int>> buckets(static_cast<size_t>(db.r) + 1);
    for (int i = 0; i < db.n; ++i) {
        buckets[static_cast<size_t>(hamming(query, db.item(i)))].push_back(i);
    }
    std::vector<int> order;
    order.reserve(static_cast<size_t>(db.n));
    for (const auto& bucket : buckets) {
        order.insert(order.end(), bucket.begin(), bucket.end());
    }
    return order;
}

double average_precision(const std::vector<int>& ranking,
                         const std::vector<char>& rel) {
    int total_relevant = 0;
    for (const char c : rel) total_relevant += c ? 1 : 0;
    if (total_relevant == 0) {
        throw InputError("average_precision: no relevant items");
    }
    double ap = 0.0;
    int hits = 0;
    for (size_t k = 0; k < ranking.size(); ++k) {
        if (rel[static_cast<size_t>(ranking[k])]) {
            ++hits;
            ap += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    return ap / total_relevant;
}

RetrievalReport evaluate(const PackedCodes& queries,
                         const std::vector<std::int32_t>& query_labels,
                         const PackedCodes& db,
                         const std::vector<std::int32_t>& db_labels,
                         const std::vector<int>& ks) {
    if (queries.r != db.r) throw DimensionError("evaluate: code lengths differ");
    if (static_cast<int>(query_labels.size()) != queries.n ||
        static_cast<int>(db_labels.size()) != db.n) {
        throw InputError("evaluate: label count mismatch");
    }
    if (db.n == 0 || queries.n == 0) throw InputError("evaluate: empty input");

    std::vector<int> used_ks;
    for (const int k : ks) {
        if (k >= 1 && k <= db.n) used_ks.push_back(k);
    }

    RetrievalReport report;
    std::vector<double> prec_sum(used_ks.size(), 0.0);
    std::vector<double> rec_sum(used_ks.size(), 0.0);
    // micro-average accumulators per radius
    std::vector<long long> retrieved_at(static_cast<size_t>(db.r) + 1, 0);
    std::vector<long long> rel_retrieved_at(static_cast<size_t>(db.r) + 1, 0);
    long long total_relevant = 0;

    for (int qi = 0; qi < queries.n; ++qi) {
        std::vector<char> rel(static_cast<size_t>(db.n), 0);
        int n_rel = 0;
        for (int i = 0; i < db.n; ++i) {
            if (db_labels[static_cast<size_t>(i)] == query_labels[static_cast<size_t>(qi)]) {
                rel[static_cast<size_t>(i)] = 1;
                ++n_rel;
            }
        }
        if (n_rel == 0) {
            ++report.n_excluded;
            continue;
        }
        ++report.n_queries;
        total_relevant += n_rel;

        const auto order = rank(queries.item(qi), db);
        report.per_query_ap.push_back(average_precision(order, rel));

        // prefix relevance counts over the ranking
        int hits = 0;
        size_t ki = 0;
        for (size_t k = 0; k < order.size(); ++k) {
            if (rel[static_cast<size_t>(order[k])]) ++hits;
            while (ki < used_ks.size() && static_cast<size_t>(used_ks[ki]) == k + 1) {
                prec_sum[ki] += static_cast<double>(hits) / static_cast<double>(used_ks[ki]);
                rec_sum[ki] += static_cast<double>(hits) / static_cast<double>(n_rel);
                ++ki;
            }
        }

        // per-radius retrieval counts
        for (int i = 0; i < db.n; ++i) {
            const int dist = hamming(queries.item(qi), db.item(i));
            ++retrieved_at[static_cast<size_t>(dist)];
            if (rel[static_cast<size_t>(i)]) ++rel_retrieved_at[static_cast<size_t>(dist)];
        }
    }

    if (report.n_queries == 0) {
        throw InputError("evaluate: no query has a relevant database item");
    }

    double ap_sum = 0.0;
    for (const double ap : report.per_query_ap) ap_sum += ap;
    report.map = ap_sum / report.n_queries;

    for (size_t ki = 0; ki < used_ks.size(); ++ki) {
        report.precision_at_k.emplace_back(used_ks[ki], prec_sum[ki] / report.n_queries);
        report.recall_at_k.emplace_back(used_ks[ki], rec_sum[ki] / report.n_queries);
    }

    long long cum_retrieved = 0;
    long long cum_rel = 0;
    for (int radius = 0; radius <= db.r; ++radius) {
        cum_retrieved += retrieved_at[static_cast<size_t>(radius)];
        cum_rel += rel_retrieved_at[static_cast<size_t>(radius)];
        if (cum_retrieved == 0) continue; // precision undefined: skip point
        PrPoint pt;
        pt.radius = radius;
        pt.precision = static_cast<double>(cum_rel) / static_cast<double>(cum_retrieved);
        pt.recall = static_cast<double>(cum_rel) / static_cast<double>(total_relevant);
        report.pr_points.push_back(pt);
    }
    return report;
}

namespace {

// full-precision, locale-independent double formatting
std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void write_report(std::ostream& os, const RetrievalReport& report) {
    os << "map=" << fmt_double(report.map) << "\n";
    os << "n_queries=" << report.n_queries << "\n";
    os << "n_excluded=" << report.n_excluded << "\n";
    for (const auto& [k, v] : report.precision_at_k) {
        os << "precision_at_" << k << "=" << fmt_double(v) << "\n";
    }
    for (const auto& [k, v] : report.recall_at_k) {
        os << "recall_at_" << k << "=" << fmt_double(v) << "\n";
    }
    os << "per_query_ap=";
    for (size_t i = 0; i < report.per_query_ap.size(); ++i) {
        if (i) os << ",";
        os << fmt_double(report.per_query_ap[i]);
    }
    os << "\n";
}

void write_pr_csv(std::ostream& os, const RetrievalReport& report) {
    os << "radius_or_k,precision,recall\n";
    for (const auto& pt : report.pr_points) {
        os << pt.radius << "," << fmt_double(pt.precision) << ","
           << fmt_double(pt.recall) << "\n";
    }
}

void write_at_k_csv(std::ostream& os, const RetrievalReport& report) {
    os << "radius_or_k,precision,recall\n";
    for (size_t i = 0; i < report.precision_at_k.size(); ++i) {
        os << report.precision_at_k[i].first << ","
           << fmt_double(report.precision_at_k[i].second) << ","
           << fmt_double(report.recall_at_k[i].second) << "\n";
    }
}

} // namespace gth
