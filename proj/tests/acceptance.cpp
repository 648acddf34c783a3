// Acceptance harness: exercises the numerical oracles in-process and the
// full pipeline through the command-line binary, printing one PASS/FAIL line
// per criterion. Exit status is 0 only when every criterion passes.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cohash/dataset.hpp"
#include "cohash/error.hpp"
#include "cohash/loss.hpp"
#include "cohash/retrieval.hpp"
#include "cohash/rng.hpp"
#include "cohash/simgraph.hpp"
#include "util.hpp"

using namespace cohash;

namespace {

// ---- regression constants, frozen from the first validated benchmark run ----
// (g++ 11 on x86-64 Linux; a different platform/compiler may shift the exact
// values, in which case the margin checks still apply but the regression
// equality below reports the drift.)
constexpr double kTrainedI2T = 1.0;
constexpr double kTrainedT2I = 0.9984194076192626;
constexpr double kUntrainedI2T = 0.20442516255526255;
constexpr double kUntrainedT2I = 0.20501295680597914;

// Shared trainer settings of the synthetic benchmark. The learning rate is
// lowered from the CLI default to keep the narrow desk-scale networks out of
// the sign-collapse regime; everything else is the default schedule cut to
// 50 epochs.
const std::string kModelFlags =
    " --k 100 --beta 100 --gamma 0.3 --alpha 0.5 --hidden 64 --bits 16 --lr 0.0001";

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

int run_cli(const std::string& args, std::string* capture = nullptr) {
    const std::string cmd = std::string(COHASH_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) return -1;
    std::string out;
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
    const int status = pclose(pipe);
    if (capture != nullptr) *capture = out;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool cli_ok(const std::string& args, std::string& err) {
    std::string out;
    const int code = run_cli(args, &out);
    if (code == 0) return true;
    err = "command failed (" + std::to_string(code) + "): " + args + "\n" + out;
    return false;
}

/// Value of a "key\t<double>" header line in a report/metrics file.
std::optional<double> tsv_value(const std::string& path, const std::string& key) {
    std::istringstream is(testutil::slurp(path));
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind(key + "\t", 0) == 0) return std::stod(line.substr(key.size() + 1));
    }
    return std::nullopt;
}

/// epoch -> mean training loss, from a per-epoch metrics log.
std::map<int, double> epoch_totals(const std::string& path) {
    std::map<int, double> out;
    std::istringstream is(testutil::slurp(path));
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        std::istringstream row(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(row, field, '\t')) fields.push_back(field);
        if (fields.size() >= 5) out[std::stoi(fields[0])] = std::stod(fields[4]);
    }
    return out;
}

// ---- synthetic benchmark pipeline (criteria 4, 6, 7) ------------------------

bool ensure_benchmark_data(const std::string& dir, std::string& err) {
    const std::string data = dir + "/bench.cmf";
    if (std::filesystem::exists(data)) return true;
    if (!cli_ok("gen-synthetic --clusters 5 --per-cluster 280 --d-img 32 --d-txt 32"
                " --noise 0.25 --seed 11 --out " + data, err))
        return false;
    return cli_ok("split --data " + data + " --test-frac 0.142857 --val-frac 0.142857"
                  " --seed 12 --out " + dir + "/split.json", err);
}

struct EvalPair {
    double i2t = -1.0;
    double t2i = -1.0;
    double mean() const { return 0.5 * (i2t + t2i); }
};

/// Trains one model variant and evaluates test-set MAP in both directions.
bool train_and_eval(const std::string& dir, const std::string& tag, const std::string& extra,
                    std::uint64_t seed, std::size_t epochs, EvalPair& out, std::string& err) {
    const std::string data = dir + "/bench.cmf";
    const std::string split = dir + "/split.json";
    const std::string prefix = dir + "/" + tag;
    if (!cli_ok("train --data " + data + " --split " + split + " --out-prefix " + prefix +
                kModelFlags + extra + " --epochs " + std::to_string(epochs) +
                " --seed " + std::to_string(seed), err))
        return false;
    const struct {
        const char* ckpt;
        const char* subset;
        const char* modality;
        const char* name;
    } encodes[] = {
        {"-img.ckpt", "test_query", "img", "-q-img.cmb"},
        {"-txt.ckpt", "test_query", "txt", "-q-txt.cmb"},
        {"-img.ckpt", "retrieval", "img", "-r-img.cmb"},
        {"-txt.ckpt", "retrieval", "txt", "-r-txt.cmb"},
    };
    for (const auto& e : encodes) {
        if (!cli_ok("encode --ckpt " + prefix + e.ckpt + " --data " + data + " --split " + split +
                    " --subset " + e.subset + " --modality " + e.modality + " --out " + prefix +
                    e.name, err))
            return false;
    }
    if (!cli_ok("eval --query-codes " + prefix + "-q-img.cmb --retrieval-codes " + prefix +
                "-r-txt.cmb --data " + data + " --split " + split + " --task I2T --out-prefix " +
                prefix + "-i2t", err))
        return false;
    if (!cli_ok("eval --query-codes " + prefix + "-q-txt.cmb --retrieval-codes " + prefix +
                "-r-img.cmb --data " + data + " --split " + split + " --task T2I --out-prefix " +
                prefix + "-t2i", err))
        return false;
    const auto i2t = tsv_value(prefix + "-i2t.tsv", "map");
    const auto t2i = tsv_value(prefix + "-t2i.tsv", "map");
    if (!i2t || !t2i) {
        err = "missing map line in the evaluation reports under " + prefix;
        return false;
    }
    out.i2t = *i2t;
    out.t2i = *t2i;
    return true;
}

struct VariantSpec {
    const char* tag;
    const char* extra;
};

constexpr VariantSpec kVariants[] = {
    {"full", ""},
    {"glcl", " --loss-set graph-coexist"},
    {"gl", " --loss-set graph-only"},
    {"nhash", " --hash-strategy none"},
};

std::string variant_tag(const std::string& tag, std::uint64_t seed) {
    return tag + "-s" + std::to_string(seed);
}

bool run_ablation_grid(const std::string& dir, std::map<std::string, EvalPair>& results,
                       std::string& err) {
    if (!ensure_benchmark_data(dir, err)) return false;
    for (const VariantSpec& v : kVariants) {
        for (const std::uint64_t seed : {1, 2, 3}) {
            const std::string tag = variant_tag(v.tag, seed);
            if (results.count(tag) != 0) continue;
            EvalPair pair;
            if (!train_and_eval(dir, tag, v.extra, seed, 50, pair, err)) return false;
            results[tag] = pair;
        }
    }
    return true;
}

bool run_trend_comparison(const std::string& dir, std::string& err) {
    const std::string data = dir + "/noisy.cmf";
    if (!cli_ok("gen-synthetic --clusters 5 --per-cluster 240 --d-img 32 --d-txt 32 --noise 0.5"
                " --label-noise 0.2 --seed 21 --out " + data, err))
        return false;
    return cli_ok("compare-similarities --data " + data +
                  " --k 100 --beta 100 --gamma 0.3 --alpha 0.5"
                  " --cutoffs 100,250,500,1000 --out " + dir + "/compare.tsv", err);
}

/// variant -> (map, map@100, map@250, map@500, map@1000)
std::map<std::string, std::vector<double>> parse_compare_table(const std::string& path) {
    std::map<std::string, std::vector<double>> out;
    std::istringstream is(testutil::slurp(path));
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        std::istringstream row(line);
        std::string name, field;
        std::getline(row, name, '\t');
        std::vector<double> vals;
        while (std::getline(row, field, '\t')) vals.push_back(std::stod(field));
        if (!name.empty()) out[name] = vals;
    }
    return out;
}

// ---- criteria ---------------------------------------------------------------

struct Outcome {
    bool pass = false;
    std::string detail;
};

Outcome criterion_gradients() {
    Rng rng(101);
    const std::size_t sizes[] = {4, 6, 8};
    const std::size_t widths[] = {4, 8};
    double worst = 0.0;
    int checked = 0;
    while (checked < 100) {
        const std::size_t n = sizes[rng.integer(3)];
        const std::size_t d = widths[rng.integer(2)];
        const MatD h_img = testutil::random_codes(rng, n, d);
        const MatD h_txt = testutil::random_codes(rng, n, d);
        const MatD s = testutil::random_similarity(rng, n);
        const LossParams params;  // all three losses active at unit weight
        if (testutil::degenerate_loss_instance(h_img, h_txt, s, params)) continue;
        for (const GradMask mask : {GradMask::Both, GradMask::ImgOnly, GradMask::TxtOnly})
            worst = std::max(worst, testutil::max_grad_rel_err(h_img, h_txt, s, params, mask));
        ++checked;
    }
    Outcome o;
    o.pass = worst < 1e-4;
    o.detail = "100 instances, max rel err " + fmt(worst) + " (limit 1e-4)";
    return o;
}

Outcome criterion_similarity_model() {
    Rng rng(202);
    double worst_product = 0.0, worst_row = 0.0;
    for (int i = 0; i < 20; ++i) {
        SyntheticConfig scfg;
        scfg.n_clusters = 2 + rng.integer(4);
        scfg.per_cluster = 10 + rng.integer(41);  // m in [20, 200]
        scfg.d_img = 8 + rng.integer(9);
        scfg.d_txt = 8 + rng.integer(9);
        scfg.noise = rng.uniform(0.05, 0.6);
        scfg.seed = 500 + static_cast<std::uint64_t>(i);
        const PairedDataset ds = gen_synthetic(scfg);

        GcParams params;
        params.alpha = rng.uniform();
        params.gamma = rng.uniform();
        params.beta = rng.uniform(1.0, 200.0);
        params.k = 1 + rng.integer(ds.m);
        const GcModel model = compute_gc(ds, params);
        const std::size_t m = ds.m;

        // Row-stochastic neighbor weights.
        for (std::size_t r = 0; r < m; ++r) {
            double sum = 0.0;
            for (std::size_t t = model.pcond.offsets[r]; t < model.pcond.offsets[r + 1]; ++t)
                sum += model.pcond.val[t];
            worst_row = std::max(worst_row, std::abs(sum - 1.0));
        }

        // Sparse-product output vs the dense Gram product.
        MatD dense(m, m);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t t = model.pcond.offsets[r]; t < model.pcond.offsets[r + 1]; ++t)
                dense(r, model.pcond.col[t]) = model.pcond.val[t];
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t b = 0; b < m; ++b) {
                double acc = 0.0;
                for (std::size_t t = 0; t < m; ++t) acc += dense(a, t) * dense(b, t);
                worst_product = std::max(worst_product, std::abs(model.prob(a, b) - acc));
            }
        }

        // Cauchy-Schwarz bound of the Gram matrix.
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b)
                if (model.prob(a, b) >
                    std::sqrt(model.prob(a, a) * model.prob(b, b)) + 1e-12) {
                    Outcome o;
                    o.detail = "Cauchy-Schwarz violation at dataset " + std::to_string(i);
                    return o;
                }

        // Endpoint identities, all bitwise.
        const MatD at_gamma0 = gc_final(model.dist, model.prob, 0.0, params.beta);
        const MatD at_gamma1 = gc_final(model.dist, model.prob, 1.0, params.beta);
        for (std::size_t idx = 0; idx < at_gamma0.size(); ++idx) {
            if (at_gamma0.data()[idx] != 2.0 * model.dist.data()[idx] - 1.0 ||
                at_gamma1.data()[idx] != 2.0 * (params.beta * model.prob.data()[idx]) - 1.0) {
                Outcome o;
                o.detail = "gamma endpoint identity broken at dataset " + std::to_string(i);
                return o;
            }
        }
        if (pairwise_distance(ds, 0.0) != cosine_matrix(ds.img_feats, ds.img_feats) ||
            pairwise_distance(ds, 1.0) != cosine_matrix(ds.txt_feats, ds.txt_feats)) {
            Outcome o;
            o.detail = "alpha endpoint identity broken at dataset " + std::to_string(i);
            return o;
        }
        const SparseRows full = conditional_prob(model.dist, m);
        for (std::size_t r = 0; r < m; ++r) {
            double sum = 0.0;
            for (std::size_t j = 0; j < m; ++j) sum += model.dist(r, j);
            for (std::size_t j = 0; j < m; ++j) {
                if (full.col[full.offsets[r] + j] != j ||
                    full.val[full.offsets[r] + j] != model.dist(r, j) / sum) {
                    Outcome o;
                    o.detail = "k=m endpoint identity broken at dataset " + std::to_string(i);
                    return o;
                }
            }
        }
    }
    Outcome o;
    o.pass = worst_product < 1e-10 && worst_row < 1e-6;
    o.detail = "20 datasets, product max-abs err " + fmt(worst_product) +
               " (limit 1e-10), row-sum err " + fmt(worst_row) + " (limit 1e-6)";
    return o;
}

Outcome criterion_retrieval() {
    Rng rng(303);
    // Packed Hamming against the naive bit loop: 10^4 pairs per code length.
    for (const std::size_t d : {16u, 64u, 96u}) {
        MatD sa(100, d), sb(100, d);
        for (std::size_t i = 0; i < sa.size(); ++i) {
            sa.data()[i] = rng.bits() & 1u ? 1.0 : -1.0;
            sb.data()[i] = rng.bits() & 1u ? 1.0 : -1.0;
        }
        const PackedCodes a = pack(sa);
        const PackedCodes b = pack(sb);
        for (std::size_t i = 0; i < 100; ++i) {
            for (std::size_t j = 0; j < 100; ++j) {
                std::size_t want = 0;
                for (std::size_t t = 0; t < d; ++t) want += sa(i, t) != sb(j, t);
                if (hamming(a, i, b, j) != want) {
                    Outcome o;
                    o.detail = "Hamming mismatch at d_bits=" + std::to_string(d);
                    return o;
                }
            }
        }
    }

    // The worked average-precision example: relevance (1, 0, 1) down the
    // ranking gives (1/1 + 2/3) / 2 exactly, via scores and via codes.
    const double hand = (1.0 + 2.0 / 3.0) / 2.0;
    if (ap_from_scores({3.0, 2.0, 1.0}, {1, 0, 1}).value() != hand) {
        Outcome o;
        o.detail = "score-ranked hand example deviates from (1/1 + 2/3)/2";
        return o;
    }
    MatD qs(1, 4), rs(3, 4);
    for (std::size_t j = 0; j < 4; ++j) {
        qs(0, j) = 1.0;
        rs(0, j) = 1.0;                    // distance 0, relevant
        rs(1, j) = j == 0 ? -1.0 : 1.0;    // distance 1, not relevant
        rs(2, j) = j <= 1 ? -1.0 : 1.0;    // distance 2, relevant
    }
    if (rank_and_ap(pack(qs), 0, pack(rs), {1, 0, 1}).value() != hand) {
        Outcome o;
        o.detail = "Hamming-ranked hand example deviates from (1/1 + 2/3)/2";
        return o;
    }

    // Full evaluation against an independent sort-based oracle.
    const std::size_t nq = 100, nr = 500, d = 24, ncls = 4;
    MatD qsigns(nq, d), rsigns(nr, d);
    for (std::size_t i = 0; i < qsigns.size(); ++i) qsigns.data()[i] = rng.bits() & 1u ? 1.0 : -1.0;
    for (std::size_t i = 0; i < rsigns.size(); ++i) rsigns.data()[i] = rng.bits() & 1u ? 1.0 : -1.0;
    MatU8 qlabels(nq, ncls), rlabels(nr, ncls);
    for (std::size_t i = 0; i < nq; ++i) qlabels(i, rng.integer(ncls)) = 1;
    for (std::size_t i = 0; i < nr; ++i) rlabels(i, rng.integer(ncls)) = 1;
    const EvalReport rep = evaluate(pack(qsigns), qlabels, pack(rsigns), rlabels, {10, 100}, "I2T");

    double worst = 0.0, mean = 0.0;
    for (std::size_t q = 0; q < nq; ++q) {
        std::vector<std::size_t> order(nr);
        std::vector<std::size_t> dist(nr);
        std::vector<std::uint8_t> rel(nr);
        for (std::size_t j = 0; j < nr; ++j) {
            std::size_t h = 0;
            for (std::size_t t = 0; t < d; ++t) h += qsigns(q, t) != rsigns(j, t);
            dist[j] = h;
            rel[j] = 0;
            for (std::size_t c = 0; c < ncls; ++c)
                if (qlabels(q, c) && rlabels(j, c)) rel[j] = 1;
        }
        for (std::size_t j = 0; j < nr; ++j) order[j] = j;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return dist[x] < dist[y]; });
        std::size_t hits = 0;
        double sum = 0.0;
        for (std::size_t r = 0; r < nr; ++r) {
            if (rel[order[r]]) {
                ++hits;
                sum += static_cast<double>(hits) / static_cast<double>(r + 1);
            }
        }
        const double want = sum / static_cast<double>(hits);
        worst = std::max(worst, std::abs(rep.per_query_ap[q].value() - want));
        mean += want;
    }
    const double map_err = std::abs(rep.map - mean / static_cast<double>(nq));
    Outcome o;
    o.pass = worst < 1e-10 && map_err < 1e-10;
    o.detail = "3x10^4 Hamming pairs exact, hand example exact, AP oracle max err " + fmt(worst) +
               " over " + std::to_string(nq) + " queries (limit 1e-10)";
    return o;
}

Outcome criterion_benchmark(const std::string& dir, std::map<std::string, EvalPair>& results) {
    Outcome o;
    std::string err;
    if (!ensure_benchmark_data(dir, err)) {
        o.detail = err;
        return o;
    }
    EvalPair trained, untrained;
    if (!train_and_eval(dir, "full-s1", "", 1, 50, trained, err) ||
        !train_and_eval(dir, "base-s1", "", 1, 0, untrained, err)) {
        o.detail = err;
        return o;
    }
    results["full-s1"] = trained;  // the ablation grid reuses this run
    const auto totals = epoch_totals(dir + "/full-s1-metrics.tsv");
    if (totals.count(1) == 0 || totals.count(10) == 0) {
        o.detail = "metrics log is missing epoch 1 or epoch 10";
        return o;
    }
    const bool margins = trained.i2t - untrained.i2t >= 0.30 && trained.t2i - untrained.t2i >= 0.30;
    const bool descent = totals.at(10) < totals.at(1);
    const bool regression = trained.i2t == kTrainedI2T && trained.t2i == kTrainedT2I &&
                            untrained.i2t == kUntrainedI2T && untrained.t2i == kUntrainedT2I;
    o.pass = margins && descent && regression;
    o.detail = "I2T " + fmt(trained.i2t) + " vs untrained " + fmt(untrained.i2t) + ", T2I " +
               fmt(trained.t2i) + " vs " + fmt(untrained.t2i) + " (margins >= 0.30: " +
               (margins ? "yes" : "NO") + "), epoch-10 loss " + fmt(totals.at(10)) +
               " < epoch-1 " + fmt(totals.at(1)) + ": " + (descent ? "yes" : "NO") +
               ", regression constants: " + (regression ? "match" : "DRIFT");
    return o;
}

Outcome criterion_trend(const std::string& dir) {
    Outcome o;
    std::string err;
    if (!run_trend_comparison(dir, err)) {
        o.detail = err;
        return o;
    }
    const auto table = parse_compare_table(dir + "/compare.tsv");
    for (const char* need : {"image-only", "text-only", "fused", "gc"}) {
        if (table.count(need) == 0 || table.at(need).size() != 5) {
            o.detail = std::string("comparison table is missing the ") + need + " row";
            return o;
        }
    }
    double min_gc_margin = 1.0, min_fused_margin = 1.0;
    // Column 0 is the full-list MAP; columns 1..4 are the cutoffs the
    // criterion quantifies over.
    for (std::size_t c = 1; c < 5; ++c) {
        const double img = table.at("image-only")[c];
        const double txt = table.at("text-only")[c];
        const double fused = table.at("fused")[c];
        const double gc = table.at("gc")[c];
        min_gc_margin = std::min(min_gc_margin, gc - fused);
        min_fused_margin = std::min(min_fused_margin, fused - std::min(img, txt));
    }
    o.pass = min_gc_margin >= 0.0 && min_fused_margin >= 0.0;
    o.detail = "min margins over cutoffs 100..1000: coherence-fused " + fmt(min_gc_margin) +
               ", fused-min(single) " + fmt(min_fused_margin) + " (both must be >= 0)";
    return o;
}

Outcome criterion_ablation(const std::string& dir, std::map<std::string, EvalPair>& results) {
    Outcome o;
    std::string err;
    if (!run_ablation_grid(dir, results, err)) {
        o.detail = err;
        return o;
    }
    std::map<std::string, double> mean;
    for (const VariantSpec& v : kVariants) {
        double acc = 0.0;
        for (const std::uint64_t seed : {1, 2, 3}) acc += results.at(variant_tag(v.tag, seed)).mean();
        mean[v.tag] = acc / 3.0;
    }
    const bool order = mean.at("full") >= mean.at("glcl") && mean.at("glcl") >= mean.at("gl");
    const bool vs_nhash = mean.at("full") >= mean.at("nhash") - 0.02;
    o.pass = order && vs_nhash;
    o.detail = "3-seed means: full " + fmt(mean.at("full")) + " >= graph+coexist " +
               fmt(mean.at("glcl")) + " >= graph-only " + fmt(mean.at("gl")) + ": " +
               (order ? "yes" : "NO") + "; full >= no-hash-step " + fmt(mean.at("nhash")) +
               " - 0.02: " + (vs_nhash ? "yes" : "NO");
    return o;
}

Outcome criterion_determinism(const std::string& first_dir, const std::string& rerun_dir) {
    Outcome o;
    std::string err;
    std::map<std::string, EvalPair> rerun_results;
    if (!run_ablation_grid(rerun_dir, rerun_results, err) ||
        !train_and_eval(rerun_dir, "base-s1", "", 1, 0, rerun_results["base-s1"], err) ||
        !run_trend_comparison(rerun_dir, err)) {
        o.detail = err;
        return o;
    }
    std::vector<std::string> logs = {"compare.tsv", "base-s1-metrics.tsv", "base-s1-i2t.tsv",
                                     "base-s1-i2t.json", "base-s1-t2i.tsv", "base-s1-t2i.json"};
    for (const VariantSpec& v : kVariants) {
        for (const std::uint64_t seed : {1, 2, 3}) {
            const std::string tag = variant_tag(v.tag, seed);
            for (const char* suffix : {"-metrics.tsv", "-i2t.tsv", "-i2t.json", "-t2i.tsv",
                                       "-t2i.json"})
                logs.push_back(tag + suffix);
        }
    }
    std::size_t mismatches = 0;
    std::string first_bad;
    for (const std::string& rel : logs) {
        const std::string a = first_dir + "/" + rel;
        const std::string b = rerun_dir + "/" + rel;
        if (!std::filesystem::exists(a) || !std::filesystem::exists(b) ||
            !testutil::same_bytes(a, b)) {
            ++mismatches;
            if (first_bad.empty()) first_bad = rel;
        }
    }
    o.pass = mismatches == 0;
    o.detail = std::to_string(logs.size()) + " metric logs byte-compared, " +
               std::to_string(mismatches) + " mismatches" +
               (first_bad.empty() ? "" : " (first: " + first_bad + ")");
    return o;
}

}  // namespace

int main() {
    const std::string scratch =
        (std::filesystem::temp_directory_path() / "cohash-acceptance").string();
    const std::string dir_a = scratch + "/run-a";
    const std::string dir_b = scratch + "/run-b";
    std::filesystem::remove_all(scratch);
    std::filesystem::create_directories(dir_a);
    std::filesystem::create_directories(dir_b);

    struct Row {
        int id;
        std::string name;
        double limit;  // seconds; 0 = no budget of its own
        Outcome outcome;
        double seconds;
    };
    std::vector<Row> rows;
    std::map<std::string, EvalPair> ablation_results;

    const auto run = [&](int id, const std::string& name, double limit,
                         const std::function<Outcome()>& fn) {
        Timer t;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double sec = t.seconds();
        if (o.pass && limit > 0.0 && sec > limit) {
            o.pass = false;
            o.detail += " — exceeded the " + fmt(limit) + "s budget";
        }
        rows.push_back({id, name, limit, o, sec});
    };

    run(1, "analytic gradients match finite differences", 60.0, [] { return criterion_gradients(); });
    run(2, "similarity model matches dense oracles and endpoints", 30.0,
        [] { return criterion_similarity_model(); });
    run(3, "packed retrieval matches naive oracles", 60.0, [] { return criterion_retrieval(); });
    run(4, "trained model beats the untrained baseline", 600.0,
        [&] { return criterion_benchmark(dir_a, ablation_results); });
    run(5, "similarity variants rank as claimed on noisy labels", 120.0,
        [&] { return criterion_trend(dir_a); });
    run(6, "loss/strategy ablations preserve the quality ordering", 1800.0,
        [&] { return criterion_ablation(dir_a, ablation_results); });
    run(7, "benchmark reruns are bit-identical", 0.0,
        [&] { return criterion_determinism(dir_a, dir_b); });

    bool all_pass = true;
    for (const Row& r : rows) {
        all_pass = all_pass && r.outcome.pass;
        std::printf("%s  criterion %d: %s  [%s] (%.1fs)\n", r.outcome.pass ? "PASS" : "FAIL", r.id,
                    r.name.c_str(), r.outcome.detail.c_str(), r.seconds);
    }
    std::printf("%s\n", all_pass ? "ACCEPTANCE: all criteria passed"
                                 : "ACCEPTANCE: at least one criterion failed");
    if (all_pass) {
        std::error_code ec;
        std::filesystem::remove_all(scratch, ec);
    } else {
        std::printf("artifacts kept under %s\n", scratch.c_str());
    }
    return all_pass ? 0 : 1;
}
