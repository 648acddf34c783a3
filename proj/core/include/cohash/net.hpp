#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cohash/matrix.hpp"

namespace cohash {

enum class Activation { Relu, Tanh };

/// Two-layer fully-connected map from features to relaxed real codes:
/// h = tanh(tanh_scale * (w2 * act(w1 * f + b1) + b2)). One instance per
/// modality; gradients are hand-derived in backward().
struct HashNet {
    std::size_t d_in = 0;
    std::size_t hidden = 0;
    std::size_t d_bits = 0;
    Activation hidden_act = Activation::Relu;
    double tanh_scale = 1.0;

    MatD w1;                 // hidden x d_in
    std::vector<double> b1;  // hidden
    MatD w2;                 // d_bits x hidden
    std::vector<double> b2;  // d_bits

    // SGD momentum buffers, one per parameter tensor.
    MatD v_w1, v_w2;
    std::vector<double> v_b1, v_b2;
};

struct SgdConfig {
    double lr = 0.005;
    double momentum = 0.9;
    double weight_decay = 0.0005;
    std::size_t batch = 32;
    std::size_t epochs = 100;
};

/// Per-batch activations retained for the backward pass.
struct ForwardCache {
    MatD hidden_out;  // n x hidden, post-activation
    MatD output;      // n x d_bits, the relaxed codes H
};

struct NetGrads {
    MatD w1, w2;
    std::vector<double> b1, b2;
};

/// Glorot-uniform weights (+-sqrt(6 / (fan_in + fan_out)) per layer), zero
/// biases and momentum. Deterministic given the seed.
HashNet init_net(std::size_t d_in, std::size_t hidden, std::size_t d_bits, std::uint64_t seed,
                 Activation hidden_act = Activation::Relu, double tanh_scale = 1.0);

/// Batch forward pass over feature rows. Output entries lie in (-1, 1).
MatD forward(const HashNet& net, const MatF& feats, ForwardCache* cache = nullptr);

/// Parameter gradients for a batch given dL/dH.
NetGrads backward(const HashNet& net, const MatF& feats, const ForwardCache& cache, const MatD& d_out);

/// Momentum SGD with L2 weight decay folded into the velocity:
/// v <- momentum*v + g + weight_decay*p; p <- p - lr*v.
/// Rejects non-finite gradients before touching any state.
void apply_grads(HashNet& net, const NetGrads& grads, const SgdConfig& cfg);

void validate_sgd(const SgdConfig& cfg);

/// Checkpoint format: magic "GCPN"; u32 d_in, hidden, d_bits; then w1, b1,
/// w2, b2 as f32 little-endian in declaration order. Momentum is not stored.
void save_checkpoint(const HashNet& net, const std::string& path);
HashNet load_checkpoint(const std::string& path);

}  // namespace cohash
