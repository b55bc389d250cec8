#pragma once

#include "gth/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace gth {

/// Bit-packed code storage: item i occupies words_per_item() consecutive
/// 64-bit words, bit j set iff code entry (j,i) = +1. Word order is
/// little-endian in j; unused bits of the last word are zero.
struct PackedCodes {
    std::vector<std::uint64_t> words;
    int r = 0;
    int n = 0;

    int words_per_item() const { return (r + 63) / 64; }
    std::span<const std::uint64_t> item(int i) const {
        return {words.data() + static_cast<size_t>(i) * words_per_item(),
                static_cast<size_t>(words_per_item())};
    }
};

/// Packs a +/-1 code matrix (r x N). Throws InputError on any entry that
/// is not exactly -1 or +1.
PackedCodes pack(const CodeMatrix& b);

/// Inverse of pack; exact round trip.
CodeMatrix unpack(const PackedCodes& codes);

/// Number of disagreeing code entries between two packed items.
int hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

/// Database indices by ascending Hamming distance from the query, ties
/// broken by ascending index.
std::vector<int> rank(std::span<const std::uint64_t> query, const PackedCodes& db);

/// AP over the full ranking: (1/R) sum over relevant ranks k of
/// (relevant in top k)/k. Throws InputError when nothing is relevant.
double average_precision(const std::vector<int>& ranking,
                         const std::vector<char>& rel);

struct PrPoint {
    int radius = 0;
    double precision = 0.0;
    double recall = 0.0;
};

struct RetrievalReport {
    double map = 0.0;
    std::vector<std::pair<int, double>> precision_at_k;
    std::vector<std::pair<int, double>> recall_at_k;
    std::vector<PrPoint> pr_points; // radii 0..r, micro-averaged; radii where
                                    // nothing was retrieved are omitted
    std::vector<double> per_query_ap; // valid queries, in query order
    int n_queries = 0;  // valid queries (>= 1 relevant db item)
    int n_excluded = 0; // queries with no relevant db item
};

/// Full evaluation of queries against a database. Relevance = shared label.
/// MAP averages AP over valid queries; precision@k / recall@k are means
/// over valid queries (ks outside [1, N] are dropped); PR points are
/// micro-averaged per Hamming radius. Throws InputError when no query is
/// valid.
RetrievalReport evaluate(const PackedCodes& queries,
                         const std::vector<std::int32_t>& query_labels,
                         const PackedCodes& db,
                         const std::vector<std::int32_t>& db_labels,
                         const std::vector<int>& ks);

/// Key/value report document. Doubles are printed with full precision so
/// the file is machine-parseable and byte-stable.
void write_report(std::ostream& os, const RetrievalReport& report);

/// CSV with header "radius_or_k,precision,recall": one table for the
/// radius-based PR sweep, one for the @k table.
void write_pr_csv(std::ostream& os, const RetrievalReport& report);
void write_at_k_csv(std::ostream& os, const RetrievalReport& report);

} // namespace gth
