#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cohash/matrix.hpp"

namespace cohash {

/// Bit-packed binary codes: bit b of item i is 1 when the code entry is +1
/// and 0 when it is -1. Bits beyond d_bits in the last word of each item are
/// always zero so that word-level popcounts are exact Hamming distances.
struct PackedCodes {
    std::size_t n = 0;
    std::size_t d_bits = 0;
    std::size_t words_per_item = 0;
    std::vector<std::uint64_t> words;  // n * words_per_item, row-major

    const std::uint64_t* row(std::size_t i) const { return words.data() + i * words_per_item; }
    std::uint64_t* row(std::size_t i) { return words.data() + i * words_per_item; }
};

/// Packs a matrix of exact +1/-1 entries. Rejects anything else.
PackedCodes pack(const MatD& signs);

/// Inverse of pack: a matrix of +1/-1 entries.
MatD unpack(const PackedCodes& codes);

/// Number of differing code positions between item i of a and item j of b.
std::size_t hamming(const PackedCodes& a, std::size_t i, const PackedCodes& b, std::size_t j);

/// Retrieval order for one query: ascending Hamming distance, ties broken by
/// ascending item index.
std::vector<std::uint32_t> rank_items(const PackedCodes& queries, std::size_t query_index,
                                      const PackedCodes& retrieval);

/// Ranks the retrieval set against one query by ascending Hamming distance
/// (ties broken by ascending item index) and evaluates average precision:
///   AP = sum_q P(q) * rel(q) / (number of relevant items in the ranking),
/// truncated at `cutoff` ranks when cutoff > 0 (0 means the full set).
/// Returns nullopt when the query has no relevant item at all; returns 0.0
/// when relevant items exist but none fall inside the cutoff.
std::optional<double> rank_and_ap(const PackedCodes& queries, std::size_t query_index,
                                  const PackedCodes& retrieval,
                                  const std::vector<std::uint8_t>& relevance,
                                  std::size_t cutoff = 0);

/// Same average-precision evaluation over a ranking by descending real-valued
/// score (ties broken by ascending item index).
std::optional<double> ap_from_scores(const std::vector<double>& scores,
                                     const std::vector<std::uint8_t>& relevance,
                                     std::size_t cutoff = 0);

struct EvalReport {
    std::string task;  // e.g. "I2T" or "T2I"
    std::size_t n_queries = 0;
    std::size_t n_skipped = 0;  // queries with no relevant retrieval item
    std::vector<std::optional<double>> per_query_ap;
    double map = 0.0;  // mean AP over non-skipped queries
    std::vector<std::pair<std::size_t, double>> map_at;  // (cutoff, MAP@cutoff)
};

/// Full evaluation of a query set against a retrieval set. Relevance is
/// "label rows share at least one set bit" (equality for one-hot labels).
/// Queries with no relevant item are excluded from every mean and counted in
/// n_skipped.
EvalReport evaluate(const PackedCodes& query_codes, const MatU8& query_labels,
                    const PackedCodes& retrieval_codes, const MatU8& retrieval_labels,
                    const std::vector<std::size_t>& cutoffs, const std::string& task);

/// Code file IO, magic "CMB1": u32 n, u32 d_bits, then the packed words as
/// little-endian u64. Loading validates the zero-padding invariant.
void save_codes(const PackedCodes& codes, const std::string& path);
PackedCodes load_codes(const std::string& path);

/// Report writers. The TSV layout is key<TAB>value header lines (task,
/// queries, skipped, map, map@N...) followed by a "query<TAB>ap" table where
/// skipped queries read "skipped". The JSON file carries the same fields with
/// null for skipped queries. Both are byte-deterministic for equal reports.
void write_report_tsv(const EvalReport& report, const std::string& path);
void write_report_json(const EvalReport& report, const std::string& path);

}  // namespace cohash
