#include "cohash/loss.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "cohash/error.hpp"

namespace cohash {

namespace {

constexpr double kNormFloor = 1e-12;

/// Row L2 norms and row-normalized copy; a zero row has no direction, so the
/// cosine losses are undefined and we refuse it.
void normalize_rows(const MatD& h, const char* which, MatD& hat, std::vector<double>& norms) {
    const std::size_t n = h.rows(), d = h.cols();
    hat = MatD(n, d);
    norms.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double ssq = 0.0;
        for (std::size_t t = 0; t < d; ++t) ssq += h(i, t) * h(i, t);
        const double nrm = std::sqrt(ssq);
        if (!(nrm > kNormFloor))
            throw Error(std::string("loss: zero row in ") + which + " code matrix (row " +
                        std::to_string(i) + ")");
        norms[i] = nrm;
        for (std::size_t t = 0; t < d; ++t) hat(i, t) = h(i, t) / nrm;
    }
}

MatD gram(const MatD& a_hat, const MatD& b_hat) {
    const std::size_t n = a_hat.rows(), p = b_hat.rows(), d = a_hat.cols();
    MatD out(n, p);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* a = a_hat.row(i);
        for (std::size_t j = 0; j < p; ++j) {
            const double* b = b_hat.row(j);
            double acc = 0.0;
            for (std::size_t t = 0; t < d; ++t) acc += a[t] * b[t];
            out(i, j) = acc;
        }
    }
    return out;
}

double frob_ssq_diff(const MatD& a, const MatD& b) {
    double ssq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double dlt = a.data()[i] - b.data()[i];
        ssq += dlt * dlt;
    }
    return ssq;
}

/// Gradient of sum_ij g(i,j)*c(i,j) with respect to the rows of the first
/// cosine operand, where c = u_hat * v_hat^T:
///   du_i += ( sum_j g(i,j) v_hat_j  -  (sum_j g(i,j) c(i,j)) u_hat_i ) / |u_i|
void add_row_slot(const MatD& g, const MatD& c, const MatD& u_hat, const MatD& v_hat,
                  const std::vector<double>& u_norms, MatD& du) {
    const std::size_t n = g.rows(), p = g.cols(), d = u_hat.cols();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        std::vector<double> acc(d, 0.0);
        double coef = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double gij = g(i, j);
            if (gij == 0.0) continue;
            coef += gij * c(i, j);
            const double* v = v_hat.row(j);
            for (std::size_t t = 0; t < d; ++t) acc[t] += gij * v[t];
        }
        const double inv = 1.0 / u_norms[i];
        double* out = du.row(i);
        const double* u = u_hat.row(i);
        for (std::size_t t = 0; t < d; ++t) out[t] += (acc[t] - coef * u[t]) * inv;
    }
}

/// Same for the second operand:
///   dv_j += ( sum_i g(i,j) u_hat_i  -  (sum_i g(i,j) c(i,j)) v_hat_j ) / |v_j|
void add_col_slot(const MatD& g, const MatD& c, const MatD& u_hat, const MatD& v_hat,
                  const std::vector<double>& v_norms, MatD& dv) {
    const std::size_t n = g.rows(), p = g.cols(), d = u_hat.cols();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(p); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        std::vector<double> acc(d, 0.0);
        double coef = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double gij = g(i, j);
            if (gij == 0.0) continue;
            coef += gij * c(i, j);
            const double* u = u_hat.row(i);
            for (std::size_t t = 0; t < d; ++t) acc[t] += gij * u[t];
        }
        const double inv = 1.0 / v_norms[j];
        double* out = dv.row(j);
        const double* v = v_hat.row(j);
        for (std::size_t t = 0; t < d; ++t) out[t] += (acc[t] - coef * v[t]) * inv;
    }
}

double norm_or_ssq(double ssq, bool squared) { return squared ? ssq : std::sqrt(ssq); }

}  // namespace

void validate_loss_params(const LossParams& p) {
    if (p.lambda1 < 0.0 || p.lambda2 < 0.0) throw Error("loss: lambda weights must be >= 0");
    if (!(p.eps > 0.0)) throw Error("loss: eps must be > 0");
    if (!std::isfinite(p.coexist_target)) throw Error("loss: coexist_target must be finite");
}

SimMatrices sim_matrices(const MatD& h_img, const MatD& h_txt) {
    if (h_img.rows() != h_txt.rows() || h_img.cols() != h_txt.cols())
        throw Error("loss: code matrices must have identical shapes");
    if (h_img.rows() == 0) throw Error("loss: empty code batch");

    MatD x_hat, y_hat;
    std::vector<double> nx, ny;
    normalize_rows(h_img, "image", x_hat, nx);
    normalize_rows(h_txt, "text", y_hat, ny);

    SimMatrices m;
    m.c_ii = gram(x_hat, x_hat);
    m.c_tt = gram(y_hat, y_hat);
    m.c_it = gram(x_hat, y_hat);
    m.c_ti = gram(y_hat, x_hat);
    return m;
}

double loss_g(const SimMatrices& mats, const MatD& s, const LossParams& p) {
    validate_loss_params(p);
    if (s.rows() != mats.c_ii.rows() || s.cols() != mats.c_ii.cols())
        throw Error("loss: similarity matrix shape mismatch");
    const MatD* cs[4] = {&mats.c_ii, &mats.c_tt, &mats.c_it, &mats.c_ti};
    double total = 0.0;
    for (const MatD* c : cs) total += norm_or_ssq(frob_ssq_diff(*c, s), p.squared_norms);
    return total;
}

double loss_c(const MatD& c_it, const LossParams& p) {
    validate_loss_params(p);
    if (c_it.rows() != c_it.cols()) throw Error("loss: cross-modal matrix must be square");
    double ssq = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < c_it.rows(); ++i) {
        const double dev = c_it(i, i) - p.coexist_target;
        ssq += dev * dev;
        sum += dev;
    }
    return p.coexist_form == CoexistForm::DiagL2 ? std::sqrt(ssq) : std::abs(sum);
}

double loss_i(const SimMatrices& mats, const LossParams& p) {
    validate_loss_params(p);
    const MatD* cs[4] = {&mats.c_ii, &mats.c_tt, &mats.c_it, &mats.c_ti};
    double total = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b)
            total += norm_or_ssq(frob_ssq_diff(*cs[a], *cs[b]), p.squared_norms);
    return total;
}

LossBreakdown total_loss_and_grads(const MatD& h_img, const MatD& h_txt, const MatD& s,
                                   const LossParams& p, GradMask mask) {
    validate_loss_params(p);
    if (h_img.rows() != h_txt.rows() || h_img.cols() != h_txt.cols())
        throw Error("loss: code matrices must have identical shapes");
    const std::size_t n = h_img.rows(), d = h_img.cols();
    if (n == 0) throw Error("loss: empty code batch");
    if (s.rows() != n || s.cols() != n) throw Error("loss: similarity matrix shape mismatch");

    MatD x_hat, y_hat;
    std::vector<double> nx, ny;
    normalize_rows(h_img, "image", x_hat, nx);
    normalize_rows(h_txt, "text", y_hat, ny);

    SimMatrices m;
    m.c_ii = gram(x_hat, x_hat);
    m.c_tt = gram(y_hat, y_hat);
    m.c_it = gram(x_hat, y_hat);
    m.c_ti = gram(y_hat, x_hat);
    const MatD* cs[4] = {&m.c_ii, &m.c_tt, &m.c_it, &m.c_ti};

    // dtotal/dC for each of the four similarity matrices, accumulated over
    // every active loss term.
    MatD g_acc[4] = {MatD(n, n, 0.0), MatD(n, n, 0.0), MatD(n, n, 0.0), MatD(n, n, 0.0)};

    LossBreakdown out;

    // Alignment with the training similarity.
    for (int a = 0; a < 4; ++a) {
        const double ssq = frob_ssq_diff(*cs[a], s);
        out.l_g += norm_or_ssq(ssq, p.squared_norms);
        const double scale =
            p.squared_norms ? 2.0 * p.lambda1 : p.lambda1 / std::sqrt(ssq + p.eps);
        if (scale != 0.0)
            for (std::size_t i = 0; i < n * n; ++i)
                g_acc[a].data()[i] += scale * (cs[a]->data()[i] - s.data()[i]);
    }

    // Coexistent-pair diagonal pressure.
    if (p.include_coexist) {
        double ssq = 0.0, sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dev = m.c_it(i, i) - p.coexist_target;
            ssq += dev * dev;
            sum += dev;
        }
        if (p.coexist_form == CoexistForm::DiagL2) {
            out.l_c = std::sqrt(ssq);
            const double inv = 1.0 / std::sqrt(ssq + p.eps);
            for (std::size_t i = 0; i < n; ++i)
                g_acc[2](i, i) += (m.c_it(i, i) - p.coexist_target) * inv;
        } else {
            out.l_c = std::abs(sum);
            const double sgn = sum > 0.0 ? 1.0 : (sum < 0.0 ? -1.0 : 0.0);
            for (std::size_t i = 0; i < n; ++i) g_acc[2](i, i) += sgn;
        }
    }

    // Cross-consistency between every pair of similarity matrices.
    if (p.include_inter) {
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b) {
                const double ssq = frob_ssq_diff(*cs[a], *cs[b]);
                out.l_i += norm_or_ssq(ssq, p.squared_norms);
                const double scale =
                    p.squared_norms ? 2.0 * p.lambda2 : p.lambda2 / std::sqrt(ssq + p.eps);
                if (scale == 0.0) continue;
                for (std::size_t i = 0; i < n * n; ++i) {
                    const double dlt = scale * (cs[a]->data()[i] - cs[b]->data()[i]);
                    g_acc[a].data()[i] += dlt;
                    g_acc[b].data()[i] -= dlt;
                }
            }
    }

    out.total = out.l_c + p.lambda1 * out.l_g + p.lambda2 * out.l_i;

    out.grad_hi = MatD(n, d, 0.0);
    out.grad_ht = MatD(n, d, 0.0);
    if (mask != GradMask::TxtOnly) {
        add_row_slot(g_acc[0], m.c_ii, x_hat, x_hat, nx, out.grad_hi);
        add_col_slot(g_acc[0], m.c_ii, x_hat, x_hat, nx, out.grad_hi);
        add_row_slot(g_acc[2], m.c_it, x_hat, y_hat, nx, out.grad_hi);
        add_col_slot(g_acc[3], m.c_ti, y_hat, x_hat, nx, out.grad_hi);
    }
    if (mask != GradMask::ImgOnly) {
        add_row_slot(g_acc[1], m.c_tt, y_hat, y_hat, ny, out.grad_ht);
        add_col_slot(g_acc[1], m.c_tt, y_hat, y_hat, ny, out.grad_ht);
        add_col_slot(g_acc[2], m.c_it, x_hat, y_hat, ny, out.grad_ht);
        add_row_slot(g_acc[3], m.c_ti, y_hat, x_hat, ny, out.grad_ht);
    }
    return out;
}

}  // namespace cohash
