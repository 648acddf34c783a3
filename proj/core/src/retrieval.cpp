#include "cohash/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "cohash/binary_io.hpp"
#include "cohash/error.hpp"
#include "cohash/textio.hpp"

namespace cohash {

namespace {

std::size_t words_for(std::size_t d_bits) { return (d_bits + 63) / 64; }

std::size_t hamming_raw(const std::uint64_t* a, const std::uint64_t* b, std::size_t nwords) {
    std::size_t acc = 0;
    for (std::size_t w = 0; w < nwords; ++w)
        acc += static_cast<std::size_t>(std::popcount(a[w] ^ b[w]));
    return acc;
}

/// Counting sort by Hamming distance to the query; stable, so equal distances
/// keep ascending item order.
std::vector<std::uint32_t> rank_by_hamming(const PackedCodes& retrieval,
                                           const std::uint64_t* query_row) {
    const std::size_t n = retrieval.n;
    std::vector<std::size_t> dist(n);
    std::vector<std::size_t> offset(retrieval.d_bits + 2, 0);
    for (std::size_t i = 0; i < n; ++i) {
        dist[i] = hamming_raw(query_row, retrieval.row(i), retrieval.words_per_item);
        ++offset[dist[i] + 1];
    }
    for (std::size_t d = 1; d < offset.size(); ++d) offset[d] += offset[d - 1];
    std::vector<std::uint32_t> ranked(n);
    for (std::size_t i = 0; i < n; ++i) ranked[offset[dist[i]]++] = static_cast<std::uint32_t>(i);
    return ranked;
}

/// AP over an explicit ranking, truncated at `cutoff` ranks (0 = full list):
/// sum of precision-at-hit over hits within the cutoff, divided by the number
/// of hits within the cutoff. nullopt when the query has no relevant item at
/// all; 0.0 when it has some but none inside the cutoff.
std::optional<double> ap_walk(const std::vector<std::uint32_t>& ranked,
                              const std::vector<std::uint8_t>& relevance, std::size_t cutoff) {
    std::size_t total_rel = 0;
    for (const std::uint8_t r : relevance) total_rel += r;
    if (total_rel == 0) return std::nullopt;

    const std::size_t depth = cutoff == 0 ? ranked.size() : std::min(cutoff, ranked.size());
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t q = 0; q < depth; ++q) {
        if (relevance[ranked[q]]) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(q + 1);
        }
    }
    if (hits == 0) return 0.0;
    return sum / static_cast<double>(hits);
}

}  // namespace

PackedCodes pack(const MatD& signs) {
    if (signs.rows() == 0 || signs.cols() == 0) throw Error("codes: empty code matrix");
    PackedCodes pc;
    pc.n = signs.rows();
    pc.d_bits = signs.cols();
    pc.words_per_item = words_for(pc.d_bits);
    pc.words.assign(pc.n * pc.words_per_item, 0);
    for (std::size_t i = 0; i < pc.n; ++i) {
        std::uint64_t* row = pc.row(i);
        for (std::size_t b = 0; b < pc.d_bits; ++b) {
            const double v = signs(i, b);
            if (v == 1.0)
                row[b / 64] |= std::uint64_t{1} << (b % 64);
            else if (v != -1.0)
                throw Error("codes: entry is not +1/-1");
        }
    }
    return pc;
}

MatD unpack(const PackedCodes& codes) {
    MatD out(codes.n, codes.d_bits);
    for (std::size_t i = 0; i < codes.n; ++i) {
        const std::uint64_t* row = codes.row(i);
        for (std::size_t b = 0; b < codes.d_bits; ++b)
            out(i, b) = (row[b / 64] >> (b % 64)) & 1u ? 1.0 : -1.0;
    }
    return out;
}

std::size_t hamming(const PackedCodes& a, std::size_t i, const PackedCodes& b, std::size_t j) {
    if (a.d_bits != b.d_bits) throw Error("codes: code length mismatch");
    if (i >= a.n || j >= b.n) throw Error("codes: item index out of range");
    return hamming_raw(a.row(i), b.row(j), a.words_per_item);
}

std::vector<std::uint32_t> rank_items(const PackedCodes& queries, std::size_t query_index,
                                      const PackedCodes& retrieval) {
    if (queries.d_bits != retrieval.d_bits) throw Error("codes: code length mismatch");
    if (query_index >= queries.n) throw Error("codes: item index out of range");
    return rank_by_hamming(retrieval, queries.row(query_index));
}

std::optional<double> rank_and_ap(const PackedCodes& queries, std::size_t query_index,
                                  const PackedCodes& retrieval,
                                  const std::vector<std::uint8_t>& relevance,
                                  std::size_t cutoff) {
    if (relevance.size() != retrieval.n) throw Error("retrieval: relevance length mismatch");
    const auto ranked = rank_items(queries, query_index, retrieval);
    return ap_walk(ranked, relevance, cutoff);
}

std::optional<double> ap_from_scores(const std::vector<double>& scores,
                                     const std::vector<std::uint8_t>& relevance,
                                     std::size_t cutoff) {
    if (scores.size() != relevance.size()) throw Error("retrieval: relevance length mismatch");
    for (const double s : scores)
        if (!std::isfinite(s)) throw Error("retrieval: non-finite score");
    std::vector<std::uint32_t> ranked(scores.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) ranked[i] = static_cast<std::uint32_t>(i);
    std::sort(ranked.begin(), ranked.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    return ap_walk(ranked, relevance, cutoff);
}

EvalReport evaluate(const PackedCodes& query_codes, const MatU8& query_labels,
                    const PackedCodes& retrieval_codes, const MatU8& retrieval_labels,
                    const std::vector<std::size_t>& cutoffs, const std::string& task) {
    if (query_codes.n == 0) throw Error("retrieval: empty query set");
    if (retrieval_codes.n == 0) throw Error("retrieval: empty retrieval set");
    if (query_codes.d_bits != retrieval_codes.d_bits) throw Error("codes: code length mismatch");
    if (query_labels.rows() != query_codes.n || retrieval_labels.rows() != retrieval_codes.n)
        throw Error("retrieval: label rows do not match code count");
    if (query_labels.cols() == 0 || query_labels.cols() != retrieval_labels.cols())
        throw Error("retrieval: label class count mismatch");
    for (const std::size_t c : cutoffs)
        if (c == 0) throw Error("retrieval: cutoff must be >= 1");

    const std::size_t nq = query_codes.n;
    const std::size_t nr = retrieval_codes.n;
    const std::size_t ncls = query_labels.cols();

    EvalReport rep;
    rep.task = task;
    rep.n_queries = nq;
    rep.per_query_ap.assign(nq, std::nullopt);
    std::vector<std::vector<std::optional<double>>> at(
        cutoffs.size(), std::vector<std::optional<double>>(nq));

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t qq = 0; qq < static_cast<std::ptrdiff_t>(nq); ++qq) {
        const auto q = static_cast<std::size_t>(qq);
        std::vector<std::uint8_t> rel(nr, 0);
        const std::uint8_t* ql = query_labels.row(q);
        for (std::size_t j = 0; j < nr; ++j) {
            const std::uint8_t* rl = retrieval_labels.row(j);
            for (std::size_t c = 0; c < ncls; ++c) {
                if (ql[c] != 0 && rl[c] != 0) {
                    rel[j] = 1;
                    break;
                }
            }
        }
        const auto ranked = rank_by_hamming(retrieval_codes, query_codes.row(q));
        rep.per_query_ap[q] = ap_walk(ranked, rel, 0);
        for (std::size_t ci = 0; ci < cutoffs.size(); ++ci)
            at[ci][q] = ap_walk(ranked, rel, cutoffs[ci]);
    }

    double sum = 0.0;
    std::size_t kept = 0;
    for (const auto& ap : rep.per_query_ap) {
        if (ap) {
            sum += *ap;
            ++kept;
        } else {
            ++rep.n_skipped;
        }
    }
    rep.map = kept > 0 ? sum / static_cast<double>(kept) : 0.0;

    for (std::size_t ci = 0; ci < cutoffs.size(); ++ci) {
        double s = 0.0;
        std::size_t k = 0;
        for (const auto& ap : at[ci]) {
            if (ap) {
                s += *ap;
                ++k;
            }
        }
        rep.map_at.emplace_back(cutoffs[ci], k > 0 ? s / static_cast<double>(k) : 0.0);
    }
    return rep;
}

void save_codes(const PackedCodes& codes, const std::string& path) {
    if (codes.n == 0 || codes.d_bits == 0) throw Error("codes: empty code matrix");
    if (codes.words.size() != codes.n * codes.words_per_item ||
        codes.words_per_item != words_for(codes.d_bits))
        throw Error("codes: inconsistent packed layout");
    io::atomic_write(path, "codes", /*binary=*/true, [&](std::ostream& os) {
        os.write("CMB1", 4);
        io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(codes.n));
        io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(codes.d_bits));
        io::write_array(os, codes.words.data(), codes.words.size());
    });
}

PackedCodes load_codes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("codes: cannot open '" + path + "'");
    io::expect_magic(is, "CMB1", "codes");
    PackedCodes pc;
    pc.n = io::read_pod<std::uint32_t>(is, "codes");
    pc.d_bits = io::read_pod<std::uint32_t>(is, "codes");
    if (pc.n == 0 || pc.d_bits == 0) throw Error("codes: empty code matrix");
    pc.words_per_item = words_for(pc.d_bits);
    pc.words.resize(pc.n * pc.words_per_item);
    io::read_array(is, pc.words.data(), pc.words.size(), "codes");
    io::expect_eof(is, "codes");

    if (pc.d_bits % 64 != 0) {
        const std::uint64_t pad_mask = ~std::uint64_t{0} << (pc.d_bits % 64);
        for (std::size_t i = 0; i < pc.n; ++i)
            if ((pc.row(i)[pc.words_per_item - 1] & pad_mask) != 0)
                throw Error("codes: nonzero padding bits");
    }
    return pc;
}

void write_report_tsv(const EvalReport& report, const std::string& path) {
    io::atomic_write(path, "report", /*binary=*/false, [&](std::ostream& os) {
        os << "task\t" << report.task << "\n";
        os << "queries\t" << report.n_queries << "\n";
        os << "skipped\t" << report.n_skipped << "\n";
        os << "map\t" << io::format_double(report.map) << "\n";
        for (const auto& [cutoff, value] : report.map_at)
            os << "map@" << cutoff << "\t" << io::format_double(value) << "\n";
        os << "query\tap\n";
        for (std::size_t q = 0; q < report.per_query_ap.size(); ++q) {
            os << q << "\t";
            if (report.per_query_ap[q])
                os << io::format_double(*report.per_query_ap[q]);
            else
                os << "skipped";
            os << "\n";
        }
    });
}

void write_report_json(const EvalReport& report, const std::string& path) {
    nlohmann::json j;
    j["task"] = report.task;
    j["n_queries"] = report.n_queries;
    j["n_skipped"] = report.n_skipped;
    j["map"] = report.map;
    j["map_at"] = nlohmann::json::array();
    for (const auto& [cutoff, value] : report.map_at)
        j["map_at"].push_back({{"cutoff", cutoff}, {"map", value}});
    j["per_query_ap"] = nlohmann::json::array();
    for (const auto& ap : report.per_query_ap) {
        if (ap)
            j["per_query_ap"].push_back(*ap);
        else
            j["per_query_ap"].push_back(nullptr);
    }
    io::atomic_write(path, "report", /*binary=*/false,
                     [&](std::ostream& os) { os << j.dump(2) << "\n"; });
}

}  // namespace cohash
