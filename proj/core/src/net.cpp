#include "cohash/net.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "cohash/binary_io.hpp"
#include "cohash/error.hpp"
#include "cohash/rng.hpp"

namespace cohash {

namespace {

void fill_glorot(MatD& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < w.size(); ++i)
        w.data()[i] = rng.uniform(-limit, limit);
}

bool all_finite(const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(p[i])) return false;
    return true;
}

/// v <- momentum*v + g + wd*p; p <- p - lr*v, elementwise.
void sgd_step(double* p, double* v, const double* g, std::size_t n, const SgdConfig& cfg) {
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = cfg.momentum * v[i] + g[i] + cfg.weight_decay * p[i];
        p[i] -= cfg.lr * v[i];
    }
}

}  // namespace

HashNet init_net(std::size_t d_in, std::size_t hidden, std::size_t d_bits, std::uint64_t seed,
                 Activation hidden_act, double tanh_scale) {
    if (d_in == 0 || hidden == 0 || d_bits == 0)
        throw Error("net: dimensions must be >= 1");
    if (!(tanh_scale > 0.0)) throw Error("net: tanh_scale must be > 0");

    HashNet net;
    net.d_in = d_in;
    net.hidden = hidden;
    net.d_bits = d_bits;
    net.hidden_act = hidden_act;
    net.tanh_scale = tanh_scale;

    Rng rng(seed);
    net.w1 = MatD(hidden, d_in);
    fill_glorot(net.w1, d_in, hidden, rng);
    net.b1.assign(hidden, 0.0);
    net.w2 = MatD(d_bits, hidden);
    fill_glorot(net.w2, hidden, d_bits, rng);
    net.b2.assign(d_bits, 0.0);

    net.v_w1 = MatD(hidden, d_in, 0.0);
    net.v_b1.assign(hidden, 0.0);
    net.v_w2 = MatD(d_bits, hidden, 0.0);
    net.v_b2.assign(d_bits, 0.0);
    return net;
}

MatD forward(const HashNet& net, const MatF& feats, ForwardCache* cache) {
    if (feats.cols() != net.d_in)
        throw Error("net: input dimension mismatch (got " + std::to_string(feats.cols()) +
                    ", net expects " + std::to_string(net.d_in) + ")");
    for (std::size_t i = 0; i < feats.size(); ++i)
        if (!std::isfinite(feats.data()[i])) throw Error("net: non-finite input feature");

    const std::size_t n = feats.rows();
    MatD hidden_out(n, net.hidden);
    MatD out(n, net.d_bits);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t rr = 0; rr < static_cast<std::ptrdiff_t>(n); ++rr) {
        const auto r = static_cast<std::size_t>(rr);
        const float* f = feats.row(r);
        double* a1 = hidden_out.row(r);
        for (std::size_t h = 0; h < net.hidden; ++h) {
            const double* w = net.w1.row(h);
            double z = net.b1[h];
            for (std::size_t d = 0; d < net.d_in; ++d) z += w[d] * static_cast<double>(f[d]);
            a1[h] = net.hidden_act == Activation::Relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
        }
        double* o = out.row(r);
        for (std::size_t b = 0; b < net.d_bits; ++b) {
            const double* w = net.w2.row(b);
            double z = net.b2[b];
            for (std::size_t h = 0; h < net.hidden; ++h) z += w[h] * a1[h];
            o[b] = std::tanh(net.tanh_scale * z);
        }
    }

    if (cache) {
        cache->hidden_out = std::move(hidden_out);
        cache->output = out;
    }
    return out;
}

NetGrads backward(const HashNet& net, const MatF& feats, const ForwardCache& cache, const MatD& d_out) {
    const std::size_t n = feats.rows();
    if (d_out.rows() != n || d_out.cols() != net.d_bits ||
        cache.hidden_out.rows() != n || cache.hidden_out.cols() != net.hidden ||
        feats.cols() != net.d_in)
        throw Error("net: backward shape mismatch");

    // dz2 = dH * tanh'(scaled pre-activation); tanh' recovered from the
    // cached output as scale * (1 - h^2).
    MatD dz2(n, net.d_bits);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t b = 0; b < net.d_bits; ++b) {
            const double h = cache.output(r, b);
            dz2(r, b) = d_out(r, b) * net.tanh_scale * (1.0 - h * h);
        }

    // dz1 = (dz2 * w2) * act'(z1), with act' from the cached hidden output.
    MatD dz1(n, net.hidden);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t rr = 0; rr < static_cast<std::ptrdiff_t>(n); ++rr) {
        const auto r = static_cast<std::size_t>(rr);
        for (std::size_t h = 0; h < net.hidden; ++h) {
            double acc = 0.0;
            for (std::size_t b = 0; b < net.d_bits; ++b) acc += dz2(r, b) * net.w2(b, h);
            const double a = cache.hidden_out(r, h);
            const double dact = net.hidden_act == Activation::Relu ? (a > 0.0 ? 1.0 : 0.0)
                                                                   : 1.0 - a * a;
            dz1(r, h) = acc * dact;
        }
    }

    NetGrads g;
    g.w2 = MatD(net.d_bits, net.hidden);
    g.b2.assign(net.d_bits, 0.0);
    g.w1 = MatD(net.hidden, net.d_in);
    g.b1.assign(net.hidden, 0.0);

    // Weight gradients as (dz^T * input); each output row is owned by one
    // thread and accumulated over the batch in a fixed order.
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t bb = 0; bb < static_cast<std::ptrdiff_t>(net.d_bits); ++bb) {
        const auto b = static_cast<std::size_t>(bb);
        double* row = g.w2.row(b);
        for (std::size_t h = 0; h < net.hidden; ++h) {
            double acc = 0.0;
            for (std::size_t r = 0; r < n; ++r) acc += dz2(r, b) * cache.hidden_out(r, h);
            row[h] = acc;
        }
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) acc += dz2(r, b);
        g.b2[b] = acc;
    }

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t hh = 0; hh < static_cast<std::ptrdiff_t>(net.hidden); ++hh) {
        const auto h = static_cast<std::size_t>(hh);
        double* row = g.w1.row(h);
        for (std::size_t d = 0; d < net.d_in; ++d) {
            double acc = 0.0;
            for (std::size_t r = 0; r < n; ++r) acc += dz1(r, h) * static_cast<double>(feats(r, d));
            row[d] = acc;
        }
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) acc += dz1(r, h);
        g.b1[h] = acc;
    }
    return g;
}

void validate_sgd(const SgdConfig& cfg) {
    if (!(cfg.lr > 0.0)) throw Error("sgd: lr must be > 0");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) throw Error("sgd: momentum must be in [0, 1)");
    if (cfg.weight_decay < 0.0) throw Error("sgd: weight_decay must be >= 0");
    if (cfg.batch < 2) throw Error("sgd: batch must be >= 2");
}

void apply_grads(HashNet& net, const NetGrads& grads, const SgdConfig& cfg) {
    validate_sgd(cfg);
    if (grads.w1.rows() != net.w1.rows() || grads.w1.cols() != net.w1.cols() ||
        grads.w2.rows() != net.w2.rows() || grads.w2.cols() != net.w2.cols() ||
        grads.b1.size() != net.b1.size() || grads.b2.size() != net.b2.size())
        throw Error("net: gradient shape mismatch");

    if (!all_finite(grads.w1.data(), grads.w1.size()) ||
        !all_finite(grads.b1.data(), grads.b1.size()) ||
        !all_finite(grads.w2.data(), grads.w2.size()) ||
        !all_finite(grads.b2.data(), grads.b2.size()))
        throw Error("net: non-finite gradient, update aborted");

    sgd_step(net.w1.data(), net.v_w1.data(), grads.w1.data(), net.w1.size(), cfg);
    sgd_step(net.b1.data(), net.v_b1.data(), grads.b1.data(), net.b1.size(), cfg);
    sgd_step(net.w2.data(), net.v_w2.data(), grads.w2.data(), net.w2.size(), cfg);
    sgd_step(net.b2.data(), net.v_b2.data(), grads.b2.data(), net.b2.size(), cfg);
}

namespace {

void write_tensor_f32(std::ostream& os, const double* p, std::size_t n) {
    std::vector<float> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = static_cast<float>(p[i]);
    io::write_array(os, buf.data(), n);
}

void read_tensor_f32(std::istream& is, double* p, std::size_t n) {
    std::vector<float> buf(n);
    io::read_array(is, buf.data(), n, "ckpt");
    for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<double>(buf[i]);
}

}  // namespace

void save_checkpoint(const HashNet& net, const std::string& path) {
    io::atomic_write(path, "ckpt", /*binary=*/true, [&](std::ostream& os) {
        os.write("GCPN", 4);
        io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(net.d_in));
        io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(net.hidden));
        io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(net.d_bits));
        write_tensor_f32(os, net.w1.data(), net.w1.size());
        write_tensor_f32(os, net.b1.data(), net.b1.size());
        write_tensor_f32(os, net.w2.data(), net.w2.size());
        write_tensor_f32(os, net.b2.data(), net.b2.size());
    });
}

HashNet load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("ckpt: cannot open '" + path + "'");
    io::expect_magic(is, "GCPN", "ckpt");
    const auto d_in = io::read_pod<std::uint32_t>(is, "ckpt");
    const auto hidden = io::read_pod<std::uint32_t>(is, "ckpt");
    const auto d_bits = io::read_pod<std::uint32_t>(is, "ckpt");
    if (d_in == 0 || hidden == 0 || d_bits == 0)
        throw Error("ckpt: dimension mismatch (zero dimension in header)");

    HashNet net;
    net.d_in = d_in;
    net.hidden = hidden;
    net.d_bits = d_bits;
    net.w1 = MatD(hidden, d_in);
    net.b1.assign(hidden, 0.0);
    net.w2 = MatD(d_bits, hidden);
    net.b2.assign(d_bits, 0.0);
    read_tensor_f32(is, net.w1.data(), net.w1.size());
    read_tensor_f32(is, net.b1.data(), net.b1.size());
    read_tensor_f32(is, net.w2.data(), net.w2.size());
    read_tensor_f32(is, net.b2.data(), net.b2.size());
    io::expect_eof(is, "ckpt");

    net.v_w1 = MatD(hidden, d_in, 0.0);
    net.v_b1.assign(hidden, 0.0);
    net.v_w2 = MatD(d_bits, hidden, 0.0);
    net.v_b2.assign(d_bits, 0.0);
    return net;
}

}  // namespace cohash
