#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cohash/binary_io.hpp"
#include "cohash/dataset.hpp"
#include "cohash/error.hpp"
#include "cohash/loss.hpp"
#include "cohash/net.hpp"
#include "cohash/retrieval.hpp"
#include "cohash/simgraph.hpp"
#include "cohash/textio.hpp"
#include "cohash/trainer.hpp"

namespace {

using namespace cohash;

/// Every command materializes its full option set (defaults included) next to
/// its primary output before doing any work.
void write_resolved_config(const CLI::App& sub, const std::string& path) {
    const std::string text = sub.config_to_str(true, false);
    io::atomic_write(path, "config", /*binary=*/false,
                     [&](std::ostream& os) { os << text; });
}

// ---- shared option groups ----

struct GcFlags {
    double alpha = 0.5;
    double gamma = 0.3;
    double beta = 1.0;
    std::size_t k = 10;
    bool exclude_self = false;
    bool auto_beta = false;
    std::string gc_mode = "full";
    std::string gc_cache;
};

void add_gc_flags(CLI::App* sub, GcFlags& f) {
    sub->add_option("--alpha", f.alpha, "image/text blend of the fused pairwise similarity")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    sub->add_option("--gamma", f.gamma, "pairwise/coherence blend of the final similarity")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    sub->add_option("--beta", f.beta, "scale of the coherence term")->capture_default_str();
    sub->add_option("--k", f.k, "neighborhood size of the conditional-probability graph")
        ->capture_default_str();
    sub->add_flag("--exclude-self", f.exclude_self,
                  "drop the self entry from each neighborhood");
    sub->add_flag("--auto-beta", f.auto_beta,
                  "replace beta with 1 / mean(diag(coherence))");
    sub->add_option("--gc-mode", f.gc_mode,
                    "similarity ablation: full, pairwise-only (gamma=0), "
                    "coherence-only (gamma=1)")
        ->check(CLI::IsMember({"full", "pairwise-only", "coherence-only"}))
        ->capture_default_str();
    sub->add_option("--gc-cache", f.gc_cache,
                    "similarity-model cache directory (default: $COHASH_GC_CACHE)")
        ->capture_default_str();
}

GcParams resolve_gc(const GcFlags& f) {
    GcParams p;
    p.alpha = f.alpha;
    p.gamma = f.gamma;
    p.beta = f.beta;
    p.k = f.k;
    p.include_self = !f.exclude_self;
    p.auto_beta = f.auto_beta;
    if (f.gc_mode == "pairwise-only") p.gamma = 0.0;
    if (f.gc_mode == "coherence-only") p.gamma = 1.0;
    return p;
}

std::string resolve_cache_dir(const GcFlags& f) {
    if (!f.gc_cache.empty()) return f.gc_cache;
    const char* env = std::getenv("COHASH_GC_CACHE");
    return env != nullptr ? std::string(env) : std::string();
}

struct LossFlags {
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double coexist_target = 1.5;
    double eps = 1e-12;
    std::string loss_set = "full";
    std::string coexist_form = "diag-l2";
    bool squared_norms = false;
};

void add_loss_flags(CLI::App* sub, LossFlags& f) {
    sub->add_option("--lambda1", f.lambda1, "weight of the similarity-alignment loss")
        ->capture_default_str();
    sub->add_option("--lambda2", f.lambda2, "weight of the cross-consistency loss")
        ->capture_default_str();
    sub->add_option("--coexist-target", f.coexist_target,
                    "optimization goal of the coexistent-pair cosine")
        ->capture_default_str();
    sub->add_option("--eps", f.eps, "norm guard for gradients")->capture_default_str();
    sub->add_option("--loss-set", f.loss_set,
                    "loss ablation: full, graph-only, graph-coexist")
        ->check(CLI::IsMember({"full", "graph-only", "graph-coexist"}))
        ->capture_default_str();
    sub->add_option("--coexist-form", f.coexist_form,
                    "coexistent-loss reading: diag-l2 or trace-abs")
        ->check(CLI::IsMember({"diag-l2", "trace-abs"}))
        ->capture_default_str();
    sub->add_flag("--squared-norms", f.squared_norms,
                  "use squared Frobenius norms in the matrix-alignment losses");
}

LossParams resolve_loss(const LossFlags& f) {
    LossParams p;
    p.lambda1 = f.lambda1;
    p.lambda2 = f.lambda2;
    p.coexist_target = f.coexist_target;
    p.eps = f.eps;
    p.include_coexist = f.loss_set != "graph-only";
    p.include_inter = f.loss_set == "full";
    p.coexist_form = f.coexist_form == "trace-abs" ? CoexistForm::TraceAbs : CoexistForm::DiagL2;
    p.squared_norms = f.squared_norms;
    return p;
}

struct SgdFlags {
    double lr = 0.005;
    double momentum = 0.9;
    double weight_decay = 0.0005;
    std::size_t batch = 32;
    std::size_t epochs = 100;
};

void add_sgd_flags(CLI::App* sub, SgdFlags& f) {
    sub->add_option("--lr", f.lr, "learning rate")->capture_default_str();
    sub->add_option("--momentum", f.momentum, "SGD momentum")->capture_default_str();
    sub->add_option("--weight-decay", f.weight_decay, "SGD weight decay")->capture_default_str();
    sub->add_option("--batch", f.batch, "mini-batch size")->capture_default_str();
    sub->add_option("--epochs", f.epochs, "maximum training epochs")->capture_default_str();
}

SgdConfig resolve_sgd(const SgdFlags& f) {
    SgdConfig c;
    c.lr = f.lr;
    c.momentum = f.momentum;
    c.weight_decay = f.weight_decay;
    c.batch = f.batch;
    c.epochs = f.epochs;
    return c;
}

// ---- dataset/split helpers ----

const std::vector<std::uint32_t>& subset_indices(const SplitSpec& split, const std::string& name) {
    if (name == "retrieval") return split.retrieval;
    if (name == "train") return split.train;
    if (name == "validation_query") return split.validation_query;
    if (name == "test_query") return split.test_query;
    throw Error("cli: unknown subset '" + name + "'");
}

PairedDataset load_subset(const std::string& data_path, const std::string& split_path,
                          const std::string& subset) {
    PairedDataset ds = load_dataset(data_path);
    if (subset == "all") return ds;
    if (split_path.empty())
        throw Error("cli: subset '" + subset + "' requires --split");
    const SplitSpec split = load_split(split_path);
    validate_split(split, ds.m);
    return select_rows(ds, subset_indices(split, subset));
}

const std::vector<std::string> kSubsetNames = {"all", "retrieval", "train", "validation_query",
                                               "test_query"};

// ---- subcommands ----

struct GenArgs {
    std::size_t clusters = 2, per_cluster = 2, d_img = 8, d_txt = 8;
    double noise = 0.0, label_noise = 0.0;
    std::uint64_t seed = 0;
    std::string out;
};

void run_gen(const CLI::App& sub, const GenArgs& a) {
    write_resolved_config(sub, a.out + ".config");
    SyntheticConfig cfg;
    cfg.n_clusters = a.clusters;
    cfg.per_cluster = a.per_cluster;
    cfg.d_img = a.d_img;
    cfg.d_txt = a.d_txt;
    cfg.noise = a.noise;
    cfg.label_noise = a.label_noise;
    cfg.seed = a.seed;
    const PairedDataset ds = gen_synthetic(cfg);
    save_dataset(ds, a.out);
    std::cout << "wrote " << a.out << " (" << ds.m << " pairs, d_img=" << ds.d_img
              << ", d_txt=" << ds.d_txt << ", classes=" << ds.n_classes << ")\n";
}

struct SplitArgs {
    std::string data, out;
    double test_frac = 0.1, val_frac = 0.1;
    std::size_t train_size = 0;
    std::uint64_t seed = 0;
};

void run_split(const CLI::App& sub, const SplitArgs& a) {
    write_resolved_config(sub, a.out + ".config");
    const PairedDataset ds = load_dataset(a.data);
    SplitFractions fr;
    fr.test_query = a.test_frac;
    fr.validation_query = a.val_frac;
    fr.train_size = a.train_size;
    const SplitSpec split = make_split(ds, fr, a.seed);
    save_split(split, a.out);
    std::cout << "wrote " << a.out << " (retrieval=" << split.retrieval.size()
              << ", train=" << split.train.size()
              << ", validation=" << split.validation_query.size()
              << ", test=" << split.test_query.size() << ")\n";
}

struct ComputeGcArgs {
    std::string data, split, subset = "all", out;
    GcFlags gc;
};

void run_compute_gc(const CLI::App& sub, const ComputeGcArgs& a) {
    write_resolved_config(sub, a.out + ".config");
    const PairedDataset ds = load_subset(a.data, a.split, a.subset);
    const GcModel model = precompute_gc(ds, resolve_gc(a.gc), resolve_cache_dir(a.gc));
    save_gc_model(model, a.out);
    std::cout << "wrote " << a.out << " (m=" << model.m
              << ", beta_effective=" << io::format_double(model.beta_effective) << ")\n";
}

struct TrainArgs {
    std::string data, split, out_prefix;
    GcFlags gc;
    LossFlags loss;
    SgdFlags sgd;
    std::size_t hidden = 4096, bits = 64, patience = 10;
    std::uint64_t seed = 0;
    std::string activation = "relu";
    double tanh_scale = 1.0;
    std::string hash_strategy = "triple";
    bool reuse_forward = false;
};

void run_train(const CLI::App& sub, const TrainArgs& a) {
    write_resolved_config(sub, a.out_prefix + ".config");
    const PairedDataset ds = load_dataset(a.data);
    const SplitSpec split = load_split(a.split);
    validate_split(split, ds.m);
    if (split.validation_query.empty())
        throw Error("train: split has no validation queries");
    if (!ds.has_labels()) throw Error("train: dataset has no labels for validation MAP");

    TrainConfig cfg;
    cfg.gc = resolve_gc(a.gc);
    cfg.loss = resolve_loss(a.loss);
    cfg.sgd = resolve_sgd(a.sgd);
    cfg.seed = a.seed;
    cfg.patience = a.patience;
    cfg.hidden = a.hidden;
    cfg.d_bits = a.bits;
    cfg.hidden_act = a.activation == "tanh" ? Activation::Tanh : Activation::Relu;
    cfg.tanh_scale = a.tanh_scale;
    cfg.strategy = a.hash_strategy == "none"
                       ? HashStrategy::None
                       : (a.hash_strategy == "penalty" ? HashStrategy::ValueGapPenalty
                                                       : HashStrategy::TripleUpdate);
    cfg.reuse_forward = a.reuse_forward;
    cfg.gc_cache_dir = resolve_cache_dir(a.gc);

    const PairedDataset train_ds = select_rows(ds, split.train);
    const PairedDataset vq = select_rows(ds, split.validation_query);
    const PairedDataset vr = select_rows(ds, split.retrieval);

    const TrainResult res = train(train_ds, vq, vr, cfg);
    save_checkpoint(res.img, a.out_prefix + "-img.ckpt");
    save_checkpoint(res.txt, a.out_prefix + "-txt.ckpt");
    write_metrics_log(res.report, a.out_prefix + "-metrics.tsv");
    std::cout << "epochs=" << res.report.epochs.size()
              << "\tbest_epoch=" << res.report.best_epoch
              << "\tbest_val_map=" << io::format_double(res.report.best_val_map)
              << "\tstop=" << res.report.stop_reason << "\n";
}

struct EncodeArgs {
    std::string ckpt, data, split, subset = "all", modality, out;
};

void run_encode(const CLI::App& sub, const EncodeArgs& a) {
    write_resolved_config(sub, a.out + ".config");
    const HashNet net = load_checkpoint(a.ckpt);
    const PairedDataset ds = load_subset(a.data, a.split, a.subset);
    const MatF& feats = a.modality == "img" ? ds.img_feats : ds.txt_feats;
    if (net.d_in != feats.cols())
        throw Error("encode: checkpoint expects input dimension " + std::to_string(net.d_in) +
                    " but the " + a.modality + " features have dimension " +
                    std::to_string(feats.cols()));
    const PackedCodes codes = pack(sign_quantize(forward(net, feats)));
    save_codes(codes, a.out);
    std::cout << "wrote " << a.out << " (" << codes.n << " items, " << codes.d_bits << " bits)\n";
}

struct RetrieveArgs {
    std::string query_codes, retrieval_codes, out;
    std::size_t top = 10;
};

void run_retrieve(const CLI::App& sub, const RetrieveArgs& a) {
    write_resolved_config(sub, a.out + ".config");
    const PackedCodes q = load_codes(a.query_codes);
    const PackedCodes r = load_codes(a.retrieval_codes);
    if (q.d_bits != r.d_bits) throw Error("codes: code length mismatch");
    io::atomic_write(a.out, "retrieve", /*binary=*/false, [&](std::ostream& os) {
        os << "query\trank\titem\tdistance\n";
        for (std::size_t qi = 0; qi < q.n; ++qi) {
            const auto ranked = rank_items(q, qi, r);
            const std::size_t depth = std::min(a.top, ranked.size());
            for (std::size_t rank = 0; rank < depth; ++rank) {
                const std::uint32_t item = ranked[rank];
                os << qi << '\t' << rank + 1 << '\t' << item << '\t'
                   << hamming(q, qi, r, item) << '\n';
            }
        }
    });
    std::cout << "wrote " << a.out << " (" << q.n << " queries, top " << a.top << ")\n";
}

struct EvalArgs {
    std::string query_codes, retrieval_codes, data, split;
    std::string query_subset = "test_query", retrieval_subset = "retrieval";
    std::string task = "I2T";
    std::vector<std::size_t> cutoffs;
    std::string out_prefix;
};

void run_eval(const CLI::App& sub, const EvalArgs& a) {
    write_resolved_config(sub, a.out_prefix + ".config");
    const PackedCodes q = load_codes(a.query_codes);
    const PackedCodes r = load_codes(a.retrieval_codes);
    const PairedDataset qd = load_subset(a.data, a.split, a.query_subset);
    const PairedDataset rd = load_subset(a.data, a.split, a.retrieval_subset);
    if (!qd.has_labels()) throw Error("eval: dataset has no labels");
    if (q.n != qd.m)
        throw Error("eval: query code count " + std::to_string(q.n) +
                    " does not match subset size " + std::to_string(qd.m));
    if (r.n != rd.m)
        throw Error("eval: retrieval code count " + std::to_string(r.n) +
                    " does not match subset size " + std::to_string(rd.m));
    const EvalReport rep = evaluate(q, qd.labels, r, rd.labels, a.cutoffs, a.task);
    write_report_tsv(rep, a.out_prefix + ".tsv");
    write_report_json(rep, a.out_prefix + ".json");
    std::cout << "task=" << rep.task << "\tmap=" << io::format_double(rep.map)
              << "\tskipped=" << rep.n_skipped << "\n";
}

struct CompareArgs {
    std::string data, out;
    GcFlags gc;
    std::vector<std::size_t> cutoffs = {500, 1000, 2000, 3000, 4000, 5000};
};

/// MAP and MAP@N of ranking every item's neighbors (self excluded) by one
/// similarity matrix; relevance is label sharing.
std::vector<double> similarity_map_row(const MatD& sim, const MatU8& labels,
                                       const std::vector<std::size_t>& cutoffs) {
    const std::size_t m = sim.rows();
    const std::size_t ncls = labels.cols();
    const std::size_t n_vals = cutoffs.size() + 1;
    std::vector<double> sums(n_vals, 0.0);
    std::vector<std::size_t> counts(n_vals, 0);

#pragma omp parallel
    {
        std::vector<double> local_sums(n_vals, 0.0);
        std::vector<std::size_t> local_counts(n_vals, 0);
#pragma omp for schedule(static)
        for (std::ptrdiff_t qi = 0; qi < static_cast<std::ptrdiff_t>(m); ++qi) {
            const auto i = static_cast<std::size_t>(qi);
            std::vector<double> scores;
            std::vector<std::uint8_t> rel;
            scores.reserve(m - 1);
            rel.reserve(m - 1);
            for (std::size_t j = 0; j < m; ++j) {
                if (j == i) continue;
                scores.push_back(sim(i, j));
                bool share = false;
                for (std::size_t c = 0; c < ncls && !share; ++c)
                    share = labels(i, c) != 0 && labels(j, c) != 0;
                rel.push_back(share ? 1 : 0);
            }
            for (std::size_t v = 0; v < n_vals; ++v) {
                const std::size_t cutoff = v == 0 ? 0 : cutoffs[v - 1];
                if (const auto ap = ap_from_scores(scores, rel, cutoff)) {
                    local_sums[v] += *ap;
                    ++local_counts[v];
                }
            }
        }
#pragma omp critical
        for (std::size_t v = 0; v < n_vals; ++v) {
            sums[v] += local_sums[v];
            counts[v] += local_counts[v];
        }
    }

    std::vector<double> out(n_vals, 0.0);
    for (std::size_t v = 0; v < n_vals; ++v)
        if (counts[v] > 0) out[v] = sums[v] / static_cast<double>(counts[v]);
    return out;
}

void run_compare(const CLI::App& sub, const CompareArgs& a) {
    write_resolved_config(sub, a.out + ".config");
    const PairedDataset ds = load_dataset(a.data);
    if (!ds.has_labels()) throw Error("compare-similarities: dataset has no labels");
    const GcParams gc = resolve_gc(a.gc);

    const MatD cos_img = cosine_matrix(ds.img_feats, ds.img_feats);
    const MatD cos_txt = cosine_matrix(ds.txt_feats, ds.txt_feats);
    const MatD fused = pairwise_distance(ds, gc.alpha);
    const GcModel model = precompute_gc(ds, gc, resolve_cache_dir(a.gc));

    const std::pair<std::string, const MatD*> variants[] = {
        {"image-only", &cos_img}, {"text-only", &cos_txt}, {"fused", &fused},
        {"gc", &model.s_final}};

    std::string table = "variant\tmap";
    for (const std::size_t c : a.cutoffs) table += "\tmap@" + std::to_string(c);
    table += "\n";
    for (const auto& [name, sim] : variants) {
        const auto row = similarity_map_row(*sim, ds.labels, a.cutoffs);
        table += name;
        for (const double v : row) table += "\t" + io::format_double(v);
        table += "\n";
    }
    io::atomic_write(a.out, "compare", /*binary=*/false,
                     [&](std::ostream& os) { os << table; });
    std::cout << table;
}

/// CLI11 applies a config file only on the app it parses directly, so a
/// `--config` attached to a subcommand is recorded and then silently ignored.
/// Expand the file into ordinary arguments before parsing instead: each key
/// absent from the command line is appended as `--key value...`, so explicit
/// flags keep precedence and the resolved-config echo sees the merged values.
/// Keys may be flat or live under a section named after the subcommand;
/// sections for other subcommands are skipped so one file can drive several
/// pipeline stages.
void expand_config_file(const CLI::App& app, std::vector<std::string>& args) {
    const CLI::App* sub = nullptr;
    std::size_t sub_pos = 0;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (!args[i].empty() && args[i].front() == '-') continue;
        sub = app.get_subcommand_no_throw(args[i]);
        sub_pos = i;
        break;
    }
    if (sub == nullptr) return;

    std::string path;
    for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        }
    }
    if (path.empty()) return;

    for (const CLI::ConfigItem& item : sub->get_config_formatter()->from_file(path)) {
        if (item.name == "++" || item.name == "--") continue;  // section markers
        const bool for_this_sub =
            item.parents.empty() ||
            (item.parents.size() == 1 && item.parents.front() == sub->get_name());
        if (!for_this_sub) continue;

        const CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
        if (opt == nullptr) {
            throw CLI::ConfigError("config file key '" + item.name +
                                   "' does not name an option of '" + sub->get_name() + "'");
        }
        if (opt == sub->get_config_ptr()) continue;

        const std::string flag = "--" + item.name;
        bool on_cmdline = false;
        for (std::size_t i = sub_pos + 1; i < args.size() && !on_cmdline; ++i) {
            on_cmdline = args[i] == flag || args[i].rfind(flag + "=", 0) == 0;
        }
        if (on_cmdline) continue;

        if (opt->get_expected_min() == 0) {
            // Plain flag: true-ish values set it, anything else leaves the default.
            const std::string value = item.inputs.empty() ? "true" : item.inputs.front();
            if (CLI::detail::to_flag_value(value) > 0) args.push_back(flag);
        } else {
            // An empty value means "keep the default" (the resolved-config echo
            // writes empty strings for unset list and path options).
            if (item.inputs.empty() ||
                (item.inputs.size() == 1 && item.inputs.front().empty())) {
                continue;
            }
            args.push_back(flag);
            args.insert(args.end(), item.inputs.begin(), item.inputs.end());
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph-coherence cross-modal hashing pipeline"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* gen_cmd = app.add_subcommand("gen-synthetic", "generate a clustered synthetic dataset");
    gen_cmd->set_config("--config");
    gen_cmd->add_option("--clusters", gen.clusters, "number of clusters")->capture_default_str();
    gen_cmd->add_option("--per-cluster", gen.per_cluster, "pairs per cluster")->capture_default_str();
    gen_cmd->add_option("--d-img", gen.d_img, "image feature dimension")->capture_default_str();
    gen_cmd->add_option("--d-txt", gen.d_txt, "text feature dimension")->capture_default_str();
    gen_cmd->add_option("--noise", gen.noise, "feature noise standard deviation")->capture_default_str();
    gen_cmd->add_option("--label-noise", gen.label_noise, "probability of flipping a label")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "output dataset path")->required();
    gen_cmd->callback([&] { run_gen(*gen_cmd, gen); });

    SplitArgs spl;
    CLI::App* split_cmd = app.add_subcommand("split", "derive retrieval/train/query index sets");
    split_cmd->set_config("--config");
    split_cmd->add_option("--data", spl.data, "dataset path")->required();
    split_cmd->add_option("--test-frac", spl.test_frac, "test query fraction")->capture_default_str();
    split_cmd->add_option("--val-frac", spl.val_frac, "validation query fraction")->capture_default_str();
    split_cmd->add_option("--train-size", spl.train_size,
                          "training subset size (0 = whole retrieval set)")
        ->capture_default_str();
    split_cmd->add_option("--seed", spl.seed, "shuffle seed")->capture_default_str();
    split_cmd->add_option("--out", spl.out, "output split path")->required();
    split_cmd->callback([&] { run_split(*split_cmd, spl); });

    ComputeGcArgs cg;
    CLI::App* gc_cmd = app.add_subcommand("compute-gc", "compute the training similarity model");
    gc_cmd->set_config("--config");
    gc_cmd->add_option("--data", cg.data, "dataset path")->required();
    gc_cmd->add_option("--split", cg.split, "split path (for --subset)")->capture_default_str();
    gc_cmd->add_option("--subset", cg.subset, "row subset to model")
        ->check(CLI::IsMember(kSubsetNames))
        ->capture_default_str();
    add_gc_flags(gc_cmd, cg.gc);
    gc_cmd->add_option("--out", cg.out, "output model path")->required();
    gc_cmd->callback([&] { run_compute_gc(*gc_cmd, cg); });

    TrainArgs tr;
    CLI::App* train_cmd = app.add_subcommand("train", "train both hashing networks");
    train_cmd->set_config("--config");
    train_cmd->add_option("--data", tr.data, "dataset path")->required();
    train_cmd->add_option("--split", tr.split, "split path")->required();
    train_cmd->add_option("--out-prefix", tr.out_prefix,
                          "prefix for checkpoints, metrics log and config echo")
        ->required();
    add_gc_flags(train_cmd, tr.gc);
    add_loss_flags(train_cmd, tr.loss);
    add_sgd_flags(train_cmd, tr.sgd);
    train_cmd->add_option("--hidden", tr.hidden, "hidden layer width")->capture_default_str();
    train_cmd->add_option("--bits", tr.bits, "code length in bits")->capture_default_str();
    train_cmd->add_option("--patience", tr.patience, "early-stopping patience in epochs")
        ->capture_default_str();
    train_cmd->add_option("--seed", tr.seed, "training seed")->capture_default_str();
    train_cmd->add_option("--activation", tr.activation, "hidden activation: relu or tanh")
        ->check(CLI::IsMember({"relu", "tanh"}))
        ->capture_default_str();
    train_cmd->add_option("--tanh-scale", tr.tanh_scale, "scale inside the output tanh")
        ->capture_default_str();
    train_cmd->add_option("--hash-strategy", tr.hash_strategy,
                          "real/binary gap handling: triple, none, penalty")
        ->check(CLI::IsMember({"triple", "none", "penalty"}))
        ->capture_default_str();
    train_cmd->add_flag("--reuse-forward", tr.reuse_forward,
                        "reuse the joint step's forward passes in the half-binary steps");
    train_cmd->callback([&] { run_train(*train_cmd, tr); });

    EncodeArgs enc;
    CLI::App* enc_cmd = app.add_subcommand("encode", "encode features to packed binary codes");
    enc_cmd->set_config("--config");
    enc_cmd->add_option("--ckpt", enc.ckpt, "checkpoint path")->required();
    enc_cmd->add_option("--data", enc.data, "dataset path")->required();
    enc_cmd->add_option("--split", enc.split, "split path (for --subset)")->capture_default_str();
    enc_cmd->add_option("--subset", enc.subset, "row subset to encode")
        ->check(CLI::IsMember(kSubsetNames))
        ->capture_default_str();
    enc_cmd->add_option("--modality", enc.modality, "img or txt")
        ->check(CLI::IsMember({"img", "txt"}))
        ->required();
    enc_cmd->add_option("--out", enc.out, "output codes path")->required();
    enc_cmd->callback([&] { run_encode(*enc_cmd, enc); });

    RetrieveArgs ret;
    CLI::App* ret_cmd = app.add_subcommand("retrieve", "rank retrieval items per query");
    ret_cmd->set_config("--config");
    ret_cmd->add_option("--query-codes", ret.query_codes, "query codes path")->required();
    ret_cmd->add_option("--retrieval-codes", ret.retrieval_codes, "retrieval codes path")
        ->required();
    ret_cmd->add_option("--top", ret.top, "ranks to emit per query")->capture_default_str();
    ret_cmd->add_option("--out", ret.out, "output ranking path")->required();
    ret_cmd->callback([&] { run_retrieve(*ret_cmd, ret); });

    EvalArgs ev;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate retrieval MAP from code files");
    eval_cmd->set_config("--config");
    eval_cmd->add_option("--query-codes", ev.query_codes, "query codes path")->required();
    eval_cmd->add_option("--retrieval-codes", ev.retrieval_codes, "retrieval codes path")
        ->required();
    eval_cmd->add_option("--data", ev.data, "dataset path (labels)")->required();
    eval_cmd->add_option("--split", ev.split, "split path (for subsets)")->capture_default_str();
    eval_cmd->add_option("--query-subset", ev.query_subset, "subset the query codes cover")
        ->check(CLI::IsMember(kSubsetNames))
        ->capture_default_str();
    eval_cmd->add_option("--retrieval-subset", ev.retrieval_subset,
                         "subset the retrieval codes cover")
        ->check(CLI::IsMember(kSubsetNames))
        ->capture_default_str();
    eval_cmd->add_option("--task", ev.task, "task tag recorded in the report")
        ->check(CLI::IsMember({"I2T", "T2I"}))
        ->capture_default_str();
    eval_cmd->add_option("--cutoffs", ev.cutoffs, "MAP@N cutoffs")
        ->delimiter(',')
        ->capture_default_str();
    eval_cmd->add_option("--out-prefix", ev.out_prefix, "prefix for the report files")->required();
    eval_cmd->callback([&] { run_eval(*eval_cmd, ev); });

    CompareArgs cmp;
    CLI::App* cmp_cmd = app.add_subcommand(
        "compare-similarities", "rank by each similarity variant and tabulate MAP@N");
    cmp_cmd->set_config("--config");
    cmp_cmd->add_option("--data", cmp.data, "dataset path (labels required)")->required();
    add_gc_flags(cmp_cmd, cmp.gc);
    cmp_cmd->add_option("--cutoffs", cmp.cutoffs, "MAP@N cutoffs")
        ->delimiter(',')
        ->capture_default_str();
    cmp_cmd->add_option("--out", cmp.out, "output table path")->required();
    cmp_cmd->callback([&] { run_compare(*cmp_cmd, cmp); });

    try {
        std::vector<std::string> args(argv, argv + argc);
        expand_config_file(app, args);
        std::vector<const char*> cargs;
        cargs.reserve(args.size());
        for (const std::string& a : args) cargs.push_back(a.c_str());
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
