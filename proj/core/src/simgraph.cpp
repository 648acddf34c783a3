#include "cohash/simgraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "cohash/binary_io.hpp"
#include "cohash/error.hpp"

namespace cohash {

namespace {

constexpr double kNormFloor = 1e-12;

template <typename T>
double cosine_impl(std::span<const T> x, std::span<const T> y) {
    if (x.size() != y.size()) throw Error("cosine: dimension mismatch");
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
        const double a = static_cast<double>(x[d]);
        const double b = static_cast<double>(y[d]);
        dot += a * b;
        nx += a * a;
        ny += b * b;
    }
    nx = std::sqrt(nx);
    ny = std::sqrt(ny);
    if (nx < kNormFloor || ny < kNormFloor) return 0.0;
    return dot / (nx * ny);
}

/// Rows scaled to unit L2 norm; rows with norm below the floor become zero
/// vectors, which makes their cosine against anything 0.
template <typename T>
MatD normalize_rows(const Mat<T>& x) {
    MatD out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double ss = 0.0;
        for (std::size_t d = 0; d < x.cols(); ++d) {
            const double v = static_cast<double>(x(i, d));
            ss += v * v;
        }
        const double norm = std::sqrt(ss);
        const double inv = norm < kNormFloor ? 0.0 : 1.0 / norm;
        for (std::size_t d = 0; d < x.cols(); ++d)
            out(i, d) = static_cast<double>(x(i, d)) * inv;
    }
    return out;
}

template <typename T>
MatD cosine_matrix_impl(const Mat<T>& x, const Mat<T>& y) {
    if (x.cols() != y.cols()) throw Error("cosine_matrix: dimension mismatch");
    const MatD xn = normalize_rows(x);
    const MatD yn = normalize_rows(y);
    const std::size_t n = x.rows(), p = y.rows(), d = x.cols();

    MatD out(n, p);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const double* xi = xn.row(static_cast<std::size_t>(i));
        for (std::size_t j = 0; j < p; ++j) {
            const double* yj = yn.row(j);
            double dot = 0.0;
            for (std::size_t t = 0; t < d; ++t) dot += xi[t] * yj[t];
            out(static_cast<std::size_t>(i), j) = dot;
        }
    }
    return out;
}

}  // namespace

double cosine(std::span<const double> x, std::span<const double> y) { return cosine_impl(x, y); }
double cosine(std::span<const float> x, std::span<const float> y) { return cosine_impl(x, y); }

MatD cosine_matrix(const MatF& x, const MatF& y) { return cosine_matrix_impl(x, y); }
MatD cosine_matrix(const MatD& x, const MatD& y) { return cosine_matrix_impl(x, y); }

MatD pairwise_distance(const PairedDataset& ds, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw Error("gc: alpha must be in [0, 1]");
    const MatD img = normalize_rows(ds.img_feats);
    const MatD txt = normalize_rows(ds.txt_feats);
    const std::size_t m = ds.m;
    const std::size_t di = ds.d_img, dt = ds.d_txt;
    const double wi = 1.0 - alpha, wt = alpha;

    // Single fused pass instead of materializing both full cosine matrices.
    MatD out(m, m);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* xi = img.row(i);
        const double* ti = txt.row(i);
        for (std::size_t j = 0; j < m; ++j) {
            const double* xj = img.row(j);
            const double* tj = txt.row(j);
            double ci = 0.0, ct = 0.0;
            for (std::size_t t = 0; t < di; ++t) ci += xi[t] * xj[t];
            for (std::size_t t = 0; t < dt; ++t) ct += ti[t] * tj[t];
            out(i, j) = wi * ci + wt * ct;
        }
    }
    return out;
}

SparseRows conditional_prob(const MatD& dist, std::size_t k, bool include_self) {
    const std::size_t m = dist.rows();
    if (dist.cols() != m) throw Error("gc: distance matrix must be square");
    const std::size_t max_k = include_self ? m : m - 1;
    if (k < 1 || k > max_k) throw Error("gc: k must be in [1, " + std::to_string(max_k) + "]");

    for (std::size_t i = 0; i < dist.size(); ++i)
        if (!std::isfinite(dist.data()[i]) || dist.data()[i] < 0.0)
            throw Error("gc: distance entries must be finite and >= 0");

    SparseRows pc;
    pc.rows = m;
    pc.cols = m;
    pc.offsets.assign(m + 1, 0);
    pc.col.resize(m * k);
    pc.val.resize(m * k);
    for (std::size_t i = 0; i <= m; ++i) pc.offsets[i] = i * k;

    // Exceptions must not cross the parallel region; isolated rows are
    // flagged and reported afterwards.
    std::ptrdiff_t isolated_row = -1;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* row = dist.row(i);

        std::vector<std::uint32_t> cand;
        cand.reserve(m);
        for (std::size_t j = 0; j < m; ++j) {
            if (!include_self && j == i) continue;
            cand.push_back(static_cast<std::uint32_t>(j));
        }

        // Largest distance first; ties at the neighborhood boundary resolve to
        // the smaller index so builds are reproducible.
        const auto closer = [row](std::uint32_t a, std::uint32_t b) {
            if (row[a] != row[b]) return row[a] > row[b];
            return a < b;
        };
        std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k - 1), cand.end(), closer);
        cand.resize(k);
        std::sort(cand.begin(), cand.end());

        double sum = 0.0;
        for (const std::uint32_t q : cand) sum += row[q];
        if (sum <= 0.0) {
#pragma omp critical
            isolated_row = ii;
            continue;
        }

        std::uint32_t* cols = pc.col.data() + i * k;
        double* vals = pc.val.data() + i * k;
        for (std::size_t t = 0; t < k; ++t) {
            cols[t] = cand[t];
            vals[t] = row[cand[t]] / sum;
        }
    }
    if (isolated_row >= 0)
        throw Error("gc: isolated node (row " + std::to_string(isolated_row) +
                    " has zero neighborhood mass)");
    return pc;
}

MatD gc_probability(const SparseRows& pcond) {
    const std::size_t m = pcond.rows;
    if (pcond.cols != m) throw Error("gc: pcond must be square");

    // Column-wise nonzero lists (rows ascending, since rows are scanned in
    // order); the product then only visits pairs that share a neighbor.
    std::vector<std::size_t> col_count(m, 0);
    for (const std::uint32_t c : pcond.col) ++col_count[c];
    std::vector<std::size_t> col_off(m + 1, 0);
    for (std::size_t c = 0; c < m; ++c) col_off[c + 1] = col_off[c] + col_count[c];
    std::vector<std::uint32_t> col_row(pcond.col.size());
    std::vector<double> col_val(pcond.col.size());
    {
        std::vector<std::size_t> cursor(col_off.begin(), col_off.end() - 1);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t t = pcond.offsets[i]; t < pcond.offsets[i + 1]; ++t) {
                const std::uint32_t c = pcond.col[t];
                col_row[cursor[c]] = static_cast<std::uint32_t>(i);
                col_val[cursor[c]] = pcond.val[t];
                ++cursor[c];
            }
        }
    }

    MatD prob(m, m, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double* out = prob.row(i);
        for (std::size_t t = pcond.offsets[i]; t < pcond.offsets[i + 1]; ++t) {
            const std::uint32_t q = pcond.col[t];
            const double v = pcond.val[t];
            for (std::size_t u = col_off[q]; u < col_off[q + 1]; ++u)
                out[col_row[u]] += v * col_val[u];
        }
    }
    return prob;
}

MatD gc_final(const MatD& dist, const MatD& prob, double gamma, double beta) {
    if (gamma < 0.0 || gamma > 1.0) throw Error("gc: gamma must be in [0, 1]");
    if (!(beta > 0.0)) throw Error("gc: beta must be > 0");
    if (dist.rows() != prob.rows() || dist.cols() != prob.cols())
        throw Error("gc: dist/prob shape mismatch");

    const double wd = 1.0 - gamma;
    const double wp = gamma * beta;
    MatD out(dist.rows(), dist.cols());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(dist.size()); ++i)
        out.data()[i] = 2.0 * (wd * dist.data()[i] + wp * prob.data()[i]) - 1.0;
    return out;
}

GcModel compute_gc(const PairedDataset& ds, const GcParams& params) {
    GcModel model;
    model.m = ds.m;
    model.params = params;
    model.dist = pairwise_distance(ds, params.alpha);
    model.pcond = conditional_prob(model.dist, params.k, params.include_self);
    model.prob = gc_probability(model.pcond);

    model.beta_effective = params.beta;
    if (params.auto_beta) {
        double mean_diag = 0.0;
        for (std::size_t i = 0; i < model.m; ++i) mean_diag += model.prob(i, i);
        mean_diag /= static_cast<double>(model.m);
        if (mean_diag <= 0.0) throw Error("gc: auto beta undefined (zero mean diagonal)");
        model.beta_effective = 1.0 / mean_diag;
    }
    model.s_final = gc_final(model.dist, model.prob, params.gamma, model.beta_effective);
    return model;
}

std::uint64_t gc_content_hash(const PairedDataset& ds, const GcParams& params) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
    const auto mix = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    mix(ds.img_feats.data(), ds.img_feats.size() * sizeof(float));
    mix(ds.txt_feats.data(), ds.txt_feats.size() * sizeof(float));
    mix(&params.alpha, sizeof(double));
    mix(&params.gamma, sizeof(double));
    mix(&params.beta, sizeof(double));
    const auto k64 = static_cast<std::uint64_t>(params.k);
    mix(&k64, sizeof(k64));
    const unsigned char flags[2] = {params.include_self ? (unsigned char)1 : (unsigned char)0,
                                    params.auto_beta ? (unsigned char)1 : (unsigned char)0};
    mix(flags, 2);
    return h;
}

void save_gc_model(const GcModel& model, const std::string& path) {
    io::atomic_write(path, "gcm", /*binary=*/true, [&](std::ostream& os) {
        os.write("GCM1", 4);
        io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(model.m));
        io::write_pod<double>(os, model.params.alpha);
        io::write_pod<double>(os, model.params.gamma);
        io::write_pod<double>(os, model.params.beta);
        io::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(model.params.k));
        io::write_pod<std::uint8_t>(os, model.params.include_self ? 1 : 0);
        io::write_pod<std::uint8_t>(os, model.params.auto_beta ? 1 : 0);
        io::write_pod<double>(os, model.beta_effective);
        io::write_array(os, model.dist.data(), model.dist.size());
        io::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(model.pcond.col.size()));
        std::vector<std::uint64_t> offs(model.pcond.offsets.begin(), model.pcond.offsets.end());
        io::write_array(os, offs.data(), offs.size());
        io::write_array(os, model.pcond.col.data(), model.pcond.col.size());
        io::write_array(os, model.pcond.val.data(), model.pcond.val.size());
        io::write_array(os, model.prob.data(), model.prob.size());
        io::write_array(os, model.s_final.data(), model.s_final.size());
    });
}

GcModel load_gc_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("gcm: cannot open '" + path + "'");
    io::expect_magic(is, "GCM1", "gcm");

    GcModel model;
    model.m = io::read_pod<std::uint32_t>(is, "gcm");
    model.params.alpha = io::read_pod<double>(is, "gcm");
    model.params.gamma = io::read_pod<double>(is, "gcm");
    model.params.beta = io::read_pod<double>(is, "gcm");
    model.params.k = static_cast<std::size_t>(io::read_pod<std::uint64_t>(is, "gcm"));
    model.params.include_self = io::read_pod<std::uint8_t>(is, "gcm") != 0;
    model.params.auto_beta = io::read_pod<std::uint8_t>(is, "gcm") != 0;
    model.beta_effective = io::read_pod<double>(is, "gcm");

    const std::size_t m = model.m;
    model.dist = MatD(m, m);
    io::read_array(is, model.dist.data(), model.dist.size(), "gcm");

    const auto nnz = static_cast<std::size_t>(io::read_pod<std::uint64_t>(is, "gcm"));
    model.pcond.rows = m;
    model.pcond.cols = m;
    std::vector<std::uint64_t> offs(m + 1);
    io::read_array(is, offs.data(), offs.size(), "gcm");
    model.pcond.offsets.assign(offs.begin(), offs.end());
    if (model.pcond.offsets.back() != nnz) throw Error("gcm: inconsistent sparse layout");
    model.pcond.col.resize(nnz);
    model.pcond.val.resize(nnz);
    io::read_array(is, model.pcond.col.data(), nnz, "gcm");
    io::read_array(is, model.pcond.val.data(), nnz, "gcm");

    model.prob = MatD(m, m);
    io::read_array(is, model.prob.data(), model.prob.size(), "gcm");
    model.s_final = MatD(m, m);
    io::read_array(is, model.s_final.data(), model.s_final.size(), "gcm");
    io::expect_eof(is, "gcm");
    return model;
}

}  // namespace cohash
