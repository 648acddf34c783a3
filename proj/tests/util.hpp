#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cohash/loss.hpp"
#include "cohash/matrix.hpp"
#include "cohash/rng.hpp"

namespace testutil {

/// Self-deleting scratch directory under the system temp root.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        std::ostringstream name;
        name << "cohash-test-" << std::hex << rd() << rd();
        path_ = std::filesystem::temp_directory_path() / name.str();
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

inline bool same_bytes(const std::string& a, const std::string& b) {
    return slurp(a) == slurp(b);
}

inline std::uintmax_t file_size(const std::string& path) {
    return std::filesystem::file_size(path);
}

/// Runs f, expecting it to throw cohash::Error; returns the message ("" plus
/// a test failure when nothing was thrown).
inline std::string error_message(const std::function<void()>& f) {
    try {
        f();
    } catch (const cohash::Error& e) {
        return e.what();
    }
    return "";
}

/// Random code batch with entries in (-1, 1) and every row norm >= 0.5, so
/// cosine matrices are well defined and perturbations cannot cross zero.
inline cohash::MatD random_codes(cohash::Rng& rng, std::size_t n, std::size_t d) {
    cohash::MatD h(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        double ssq = 0.0;
        do {
            ssq = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                h(i, j) = rng.uniform(-1.0, 1.0);
                ssq += h(i, j) * h(i, j);
            }
        } while (ssq < 0.25);
    }
    return h;
}

/// Random symmetric target matrix with entries in [-1, 1].
inline cohash::MatD random_similarity(cohash::Rng& rng, std::size_t n) {
    cohash::MatD s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) s(i, j) = s(j, i) = rng.uniform(-1.0, 1.0);
    return s;
}

inline cohash::MatF random_feats(cohash::Rng& rng, std::size_t n, std::size_t d) {
    cohash::MatF f(n, d);
    for (std::size_t i = 0; i < n * d; ++i) f.data()[i] = static_cast<float>(rng.uniform());
    return f;
}

/// Frobenius norm of (a - b), plain loops; oracle used by gradient checks to
/// flag instances where a norm term sits at the non-smooth point 0.
inline double frob_diff(const cohash::MatD& a, const cohash::MatD& b) {
    double ssq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        ssq += d * d;
    }
    return std::sqrt(ssq);
}

/// True when any Frobenius term of the objective has norm < 1e-6: the norm
/// gradient is non-smooth at 0, so finite differences are not meaningful and
/// the instance should be re-drawn.
inline bool degenerate_loss_instance(const cohash::MatD& h_img, const cohash::MatD& h_txt,
                                     const cohash::MatD& s, const cohash::LossParams& params) {
    const cohash::SimMatrices mats = cohash::sim_matrices(h_img, h_txt);
    const cohash::MatD* c[4] = {&mats.c_ii, &mats.c_tt, &mats.c_it, &mats.c_ti};
    for (const auto* m : c)
        if (frob_diff(*m, s) < 1e-6) return true;
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b)
            if (frob_diff(*c[a], *c[b]) < 1e-6) return true;
    double diag_ssq = 0.0;
    for (std::size_t i = 0; i < mats.c_it.rows(); ++i) {
        const double dev = mats.c_it(i, i) - params.coexist_target;
        diag_ssq += dev * dev;
    }
    return std::sqrt(diag_ssq) < 1e-6;
}

/// Max relative error between the analytic gradients of total_loss_and_grads
/// and five-point central finite differences at step h. Entries where both
/// values are below 1e-6 in magnitude count as exact: the stencil's noise
/// floor (~1e-11 here) would otherwise dominate the quotient.
inline double max_grad_rel_err(cohash::MatD h_img, cohash::MatD h_txt, const cohash::MatD& s,
                               const cohash::LossParams& params, cohash::GradMask mask,
                               double h = 1e-3) {
    const cohash::LossBreakdown bd = cohash::total_loss_and_grads(h_img, h_txt, s, params, mask);
    const auto value = [&] { return cohash::total_loss_and_grads(h_img, h_txt, s, params, mask).total; };
    double max_rel = 0.0;
    const auto check_side = [&](cohash::MatD& target, const cohash::MatD& grad) {
        for (std::size_t idx = 0; idx < target.size(); ++idx) {
            const double saved = target.data()[idx];
            const auto at = [&](double delta) {
                target.data()[idx] = saved + delta;
                return value();
            };
            const double fd =
                (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
            target.data()[idx] = saved;
            const double analytic = grad.data()[idx];
            const double scale = std::max(std::abs(fd), std::abs(analytic));
            if (scale < 1e-6) continue;
            max_rel = std::max(max_rel, std::abs(fd - analytic) / scale);
        }
    };
    if (mask != cohash::GradMask::TxtOnly) check_side(h_img, bd.grad_hi);
    if (mask != cohash::GradMask::ImgOnly) check_side(h_txt, bd.grad_ht);
    return max_rel;
}

}  // namespace testutil
