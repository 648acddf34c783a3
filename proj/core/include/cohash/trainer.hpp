#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cohash/dataset.hpp"
#include "cohash/loss.hpp"
#include "cohash/net.hpp"
#include "cohash/simgraph.hpp"

namespace cohash {

/// How the real/binary gap is handled during training.
///  - TripleUpdate: per batch, a joint real-valued update of both nets, then
///    one update of each net against the sign-quantized codes of the other
///    (the frozen binary operand receives no gradient).
///  - None: the joint real-valued update only.
///  - ValueGapPenalty: the joint update only, with an extra Frobenius penalty
///    ||H - sign(H)|| (unit weight) pulling each net's outputs toward its own
///    binary codes.
enum class HashStrategy { TripleUpdate, None, ValueGapPenalty };

struct TrainConfig {
    GcParams gc;
    LossParams loss;
    SgdConfig sgd;
    std::uint64_t seed = 0;   // shuffling; net inits use seed+1 (img), seed+2 (txt)
    std::size_t patience = 10;  // epochs without validation-MAP improvement
    std::size_t hidden = 4096;
    std::size_t d_bits = 64;
    Activation hidden_act = Activation::Relu;
    double tanh_scale = 1.0;
    HashStrategy strategy = HashStrategy::TripleUpdate;
    bool reuse_forward = false;  // reuse the joint step's forward passes for
                                 // the two half-binary steps instead of
                                 // recomputing after each update
    std::string gc_cache_dir;    // empty disables the similarity-model cache
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    // Epoch means over the joint-update batches.
    double l_c = 0.0;
    double l_g = 0.0;
    double l_i = 0.0;
    double total = 0.0;
    double val_map_i2t = 0.0;
    double val_map_t2i = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    std::size_t best_epoch = 0;   // 1-based; 0 when no epoch ran
    double best_val_map = 0.0;    // mean of the two validation MAPs
    std::string stop_reason;      // "max_epochs" | "early_stopping" | "non_finite_loss"
};

struct TrainResult {
    HashNet img;
    HashNet txt;
    TrainReport report;
};

/// Similarity model over the training set, computed once from raw features.
/// With a cache directory, the model is stored under a content hash of
/// (features, params) and reloaded byte-identically on a hit.
GcModel precompute_gc(const PairedDataset& train, const GcParams& gc,
                      const std::string& cache_dir = "");

/// +1 where h > 0, -1 where h < 0, +1 at exactly 0 (codes must be nonzero).
MatD sign_quantize(const MatD& h);

/// Trains both hashing networks on the training set, validating by MAP on
/// the given validation query/retrieval sets (labels required) after every
/// epoch. Returns the parameters of the best validation epoch (or the
/// initial parameters when no epoch ran). Stops at sgd.epochs, after
/// `patience` epochs without improvement, or on a non-finite loss.
TrainResult train(const PairedDataset& train_set, const PairedDataset& val_queries,
                  const PairedDataset& val_retrieval, const TrainConfig& cfg);

/// Tab-separated per-epoch log: a header row, then one row per epoch with
/// epoch, l_c, l_g, l_i, total, val_map_i2t, val_map_t2i. Byte-deterministic
/// for equal reports.
void write_metrics_log(const TrainReport& report, const std::string& path);

}  // namespace cohash
