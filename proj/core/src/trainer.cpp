#include "cohash/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <utility>

#include "cohash/binary_io.hpp"
#include "cohash/error.hpp"
#include "cohash/retrieval.hpp"
#include "cohash/rng.hpp"
#include "cohash/textio.hpp"

namespace cohash {

namespace {

std::string cache_path(const std::string& dir, std::uint64_t hash) {
    char name[32];
    std::snprintf(name, sizeof(name), "gc-%016llx.gcm", static_cast<unsigned long long>(hash));
    return dir + "/" + name;
}

MatF gather_rows(const MatF& src, const std::uint32_t* idx, std::size_t n) {
    MatF out(n, src.cols());
    for (std::size_t r = 0; r < n; ++r) std::copy_n(src.row(idx[r]), src.cols(), out.row(r));
    return out;
}

MatD slice_similarity(const MatD& s, const std::uint32_t* idx, std::size_t n) {
    MatD out(n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) out(a, b) = s(idx[a], idx[b]);
    return out;
}

bool all_finite(const MatD& m) {
    for (std::size_t i = 0; i < m.size(); ++i)
        if (!std::isfinite(m.data()[i])) return false;
    return true;
}

/// Gradient of ||h - sign(h)||_F with sign(h) held constant.
void add_value_gap_grad(const MatD& h, double eps, MatD& grad) {
    std::vector<double> diff(h.size());
    double ssq = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double b = h.data()[i] < 0.0 ? -1.0 : 1.0;
        diff[i] = h.data()[i] - b;
        ssq += diff[i] * diff[i];
    }
    const double inv = 1.0 / std::sqrt(ssq + eps);
    for (std::size_t i = 0; i < h.size(); ++i) grad.data()[i] += diff[i] * inv;
}

std::pair<double, double> validation_map(const HashNet& img, const HashNet& txt,
                                         const PairedDataset& vq, const PairedDataset& vr) {
    const PackedCodes q_img = pack(sign_quantize(forward(img, vq.img_feats)));
    const PackedCodes q_txt = pack(sign_quantize(forward(txt, vq.txt_feats)));
    const PackedCodes r_img = pack(sign_quantize(forward(img, vr.img_feats)));
    const PackedCodes r_txt = pack(sign_quantize(forward(txt, vr.txt_feats)));
    const EvalReport i2t = evaluate(q_img, vq.labels, r_txt, vr.labels, {}, "I2T");
    const EvalReport t2i = evaluate(q_txt, vq.labels, r_img, vr.labels, {}, "T2I");
    return {i2t.map, t2i.map};
}

}  // namespace

GcModel precompute_gc(const PairedDataset& train, const GcParams& gc,
                      const std::string& cache_dir) {
    if (cache_dir.empty()) return compute_gc(train, gc);

    std::error_code ec;
    std::filesystem::create_directories(cache_dir, ec);  // failures surface on write
    const std::string path = cache_path(cache_dir, gc_content_hash(train, gc));
    if (std::filesystem::exists(path)) {
        try {
            GcModel model = load_gc_model(path);
            if (model.m == train.m) return model;
        } catch (const Error&) {
            // Corrupt or stale cache entry: recompute and overwrite.
        }
    }
    GcModel model = compute_gc(train, gc);
    save_gc_model(model, path);
    return model;
}

MatD sign_quantize(const MatD& h) {
    MatD out(h.rows(), h.cols());
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double v = h.data()[i];
        if (!std::isfinite(v)) throw Error("trainer: non-finite code entry");
        out.data()[i] = v < 0.0 ? -1.0 : 1.0;
    }
    return out;
}

TrainResult train(const PairedDataset& train_set, const PairedDataset& val_queries,
                  const PairedDataset& val_retrieval, const TrainConfig& cfg) {
    validate_dataset(train_set);
    validate_dataset(val_queries);
    validate_dataset(val_retrieval);
    if (!val_queries.has_labels() || !val_retrieval.has_labels())
        throw Error("trainer: validation sets require labels");
    validate_sgd(cfg.sgd);
    validate_loss_params(cfg.loss);
    if (cfg.patience < 1) throw Error("trainer: patience must be >= 1");
    if (train_set.m < 2) throw Error("trainer: training set needs at least 2 items");

    const GcModel gc = precompute_gc(train_set, cfg.gc, cfg.gc_cache_dir);

    TrainResult res;
    res.img = init_net(train_set.d_img, cfg.hidden, cfg.d_bits, cfg.seed + 1, cfg.hidden_act,
                       cfg.tanh_scale);
    res.txt = init_net(train_set.d_txt, cfg.hidden, cfg.d_bits, cfg.seed + 2, cfg.hidden_act,
                       cfg.tanh_scale);
    HashNet best_img = res.img;
    HashNet best_txt = res.txt;

    res.report.stop_reason = "max_epochs";
    double best = -1.0;
    std::size_t since_best = 0;

    std::vector<std::uint32_t> order(train_set.m);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
    Rng shuffle_rng(cfg.seed);

    bool aborted = false;
    for (std::size_t epoch = 1; epoch <= cfg.sgd.epochs && !aborted; ++epoch) {
        shuffle_rng.shuffle(order);
        double sum_c = 0.0, sum_g = 0.0, sum_i = 0.0, sum_t = 0.0;
        std::size_t batches = 0;

        for (std::size_t start = 0; start < order.size(); start += cfg.sgd.batch) {
            const std::size_t nb = std::min(cfg.sgd.batch, order.size() - start);
            if (nb < 2) break;  // a single-item tail has no pairwise structure

            const std::uint32_t* batch = order.data() + start;
            const MatF fi = gather_rows(train_set.img_feats, batch, nb);
            const MatF ft = gather_rows(train_set.txt_feats, batch, nb);
            const MatD sb = slice_similarity(gc.s_final, batch, nb);

            // Joint real-valued update of both networks.
            ForwardCache ci, ct;
            MatD hi = forward(res.img, fi, &ci);
            MatD ht = forward(res.txt, ft, &ct);
            if (!all_finite(hi) || !all_finite(ht)) {
                aborted = true;
                break;
            }
            LossBreakdown bd = total_loss_and_grads(hi, ht, sb, cfg.loss, GradMask::Both);
            if (!std::isfinite(bd.total)) {
                aborted = true;
                break;
            }
            sum_c += bd.l_c;
            sum_g += bd.l_g;
            sum_i += bd.l_i;
            sum_t += bd.total;
            ++batches;

            if (cfg.strategy == HashStrategy::ValueGapPenalty) {
                add_value_gap_grad(hi, cfg.loss.eps, bd.grad_hi);
                add_value_gap_grad(ht, cfg.loss.eps, bd.grad_ht);
            }
            apply_grads(res.img, backward(res.img, fi, ci, bd.grad_hi), cfg.sgd);
            apply_grads(res.txt, backward(res.txt, ft, ct, bd.grad_ht), cfg.sgd);

            if (cfg.strategy != HashStrategy::TripleUpdate) continue;

            // Image network against the frozen binary text codes.
            if (!cfg.reuse_forward) {
                hi = forward(res.img, fi, &ci);
                ht = forward(res.txt, ft, &ct);
                if (!all_finite(hi) || !all_finite(ht)) {
                    aborted = true;
                    break;
                }
            }
            const LossBreakdown bd_img =
                total_loss_and_grads(hi, sign_quantize(ht), sb, cfg.loss, GradMask::ImgOnly);
            if (!std::isfinite(bd_img.total)) {
                aborted = true;
                break;
            }
            apply_grads(res.img, backward(res.img, fi, ci, bd_img.grad_hi), cfg.sgd);

            // Text network against the frozen binary image codes.
            if (!cfg.reuse_forward) {
                hi = forward(res.img, fi, &ci);
                ht = forward(res.txt, ft, &ct);
                if (!all_finite(hi) || !all_finite(ht)) {
                    aborted = true;
                    break;
                }
            }
            const LossBreakdown bd_txt =
                total_loss_and_grads(sign_quantize(hi), ht, sb, cfg.loss, GradMask::TxtOnly);
            if (!std::isfinite(bd_txt.total)) {
                aborted = true;
                break;
            }
            apply_grads(res.txt, backward(res.txt, ft, ct, bd_txt.grad_ht), cfg.sgd);
        }

        if (aborted) {
            res.report.stop_reason = "non_finite_loss";
            break;
        }

        EpochStats st;
        st.epoch = epoch;
        st.l_c = sum_c / static_cast<double>(batches);
        st.l_g = sum_g / static_cast<double>(batches);
        st.l_i = sum_i / static_cast<double>(batches);
        st.total = sum_t / static_cast<double>(batches);
        const auto [map_i2t, map_t2i] = validation_map(res.img, res.txt, val_queries, val_retrieval);
        st.val_map_i2t = map_i2t;
        st.val_map_t2i = map_t2i;
        res.report.epochs.push_back(st);

        const double mean_map = 0.5 * (map_i2t + map_t2i);
        if (mean_map > best) {
            best = mean_map;
            res.report.best_epoch = epoch;
            res.report.best_val_map = mean_map;
            best_img = res.img;
            best_txt = res.txt;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            res.report.stop_reason = "early_stopping";
            break;
        }
    }

    if (res.report.best_epoch > 0) {
        res.img = std::move(best_img);
        res.txt = std::move(best_txt);
    }
    return res;
}

void write_metrics_log(const TrainReport& report, const std::string& path) {
    io::atomic_write(path, "metrics", /*binary=*/false, [&](std::ostream& os) {
        os << "epoch\tl_c\tl_g\tl_i\ttotal\tval_map_i2t\tval_map_t2i\n";
        for (const EpochStats& e : report.epochs) {
            os << e.epoch << '\t' << io::format_double(e.l_c) << '\t' << io::format_double(e.l_g)
               << '\t' << io::format_double(e.l_i) << '\t' << io::format_double(e.total) << '\t'
               << io::format_double(e.val_map_i2t) << '\t' << io::format_double(e.val_map_t2i)
               << '\n';
        }
    });
}

}  // namespace cohash
