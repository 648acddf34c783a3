#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cohash/dataset.hpp"
#include "cohash/matrix.hpp"

namespace cohash {

/// Parameters of the graph-coherence similarity.
///   alpha  blends image and text cosine similarities in the fused distance
///   gamma  blends fused distance and coherence in the final similarity
///   beta   scales the coherence term (the raw probabilities are small)
///   k      neighborhood size of the conditional-probability graph
struct GcParams {
    double alpha = 0.5;
    double gamma = 0.3;
    double beta = 1.0;
    std::size_t k = 10;
    // The self column has maximal fused distance, so each node normally counts
    // itself among its neighbors; turn off to drop it from the candidate set.
    bool include_self = true;
    // When set, beta is replaced by 1 / mean(diag(prob)) so the scaled
    // coherence term has magnitude comparable to the fused distance.
    bool auto_beta = false;
};

/// Row-sparse matrix with at most k nonzeros per row; column indices are
/// sorted ascending within a row.
struct SparseRows {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> offsets;  // rows + 1
    std::vector<std::uint32_t> col;
    std::vector<double> val;

    std::size_t row_nnz(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
};

/// Everything derived from one dataset + parameter set: the fused pairwise
/// distance, the row-stochastic k-NN conditional probabilities, their Gram
/// product, and the final training similarity 2*((1-gamma)*dist +
/// gamma*beta*prob) - 1.
struct GcModel {
    std::size_t m = 0;
    GcParams params;
    double beta_effective = 0.0;  // equals params.beta unless auto_beta resolved it
    MatD dist;
    SparseRows pcond;
    MatD prob;
    MatD s_final;
};

/// x.y / (|x| |y|); returns 0 when either norm is below 1e-12.
double cosine(std::span<const double> x, std::span<const double> y);
double cosine(std::span<const float> x, std::span<const float> y);

/// Entry (i, j) = cosine(X_i, Y_j). Row-parallel with fixed per-entry
/// accumulation order, so results are identical for any thread count and
/// cosine_matrix(X, X) is bitwise symmetric.
MatD cosine_matrix(const MatF& x, const MatF& y);
MatD cosine_matrix(const MatD& x, const MatD& y);

/// Fused similarity (1-alpha)*cos(img, img) + alpha*cos(txt, txt).
/// Values lie in [0, 1] for non-negative features; higher means more similar.
MatD pairwise_distance(const PairedDataset& ds, double alpha);

/// Row-stochastic neighbor weights: row i keeps its k largest-distance
/// columns (ties at the boundary broken by ascending index), each weighted
/// dist[i,q] / sum over the kept columns. A row whose kept mass is zero is an
/// isolated node and raises an error.
SparseRows conditional_prob(const MatD& dist, std::size_t k, bool include_self = true);

/// prob = pcond * pcond^T. Runs in O(m * k^2) using per-column nonzero lists
/// instead of the dense O(m^3) product; output is dense, symmetric and PSD.
MatD gc_probability(const SparseRows& pcond);

/// 2*((1-gamma)*dist + gamma*beta*prob) - 1, elementwise.
MatD gc_final(const MatD& dist, const MatD& prob, double gamma, double beta);

/// Full pipeline over one dataset.
GcModel compute_gc(const PairedDataset& ds, const GcParams& params);

/// Hash of (features, params); key of the on-disk GC cache.
std::uint64_t gc_content_hash(const PairedDataset& ds, const GcParams& params);

/// Binary GcModel cache (magic "GCM1", little-endian, f64 payload). Round
/// trips are byte-exact.
void save_gc_model(const GcModel& model, const std::string& path);
GcModel load_gc_model(const std::string& path);

}  // namespace cohash
