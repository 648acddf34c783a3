#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cohash/matrix.hpp"

namespace cohash {

/// A set of coexistent image/text feature pairs. Row i of both feature
/// matrices describes the same pair. Feature entries are non-negative and
/// exactly representable as 32-bit floats (the on-disk precision); labels are
/// optional and only consulted at evaluation time.
struct PairedDataset {
    std::size_t m = 0;
    std::size_t d_img = 0;
    std::size_t d_txt = 0;
    std::size_t n_classes = 0;  // 0 = unlabeled
    MatF img_feats;             // m x d_img
    MatF txt_feats;             // m x d_txt
    MatU8 labels;               // m x n_classes, entries 0/1; empty when unlabeled

    bool has_labels() const { return n_classes > 0; }
};

/// Index lists of a retrieval/train/query split. train is a subset of
/// retrieval; the two query sets are disjoint from retrieval and from each
/// other. Indices are sorted ascending within each list.
struct SplitSpec {
    std::vector<std::uint32_t> retrieval;
    std::vector<std::uint32_t> train;
    std::vector<std::uint32_t> validation_query;
    std::vector<std::uint32_t> test_query;
};

struct SplitFractions {
    double test_query = 0.0;
    double validation_query = 0.0;
    std::size_t train_size = 0;  // 0 = the whole retrieval set
};

struct SyntheticConfig {
    std::size_t n_clusters = 2;
    std::size_t per_cluster = 2;
    std::size_t d_img = 8;
    std::size_t d_txt = 8;
    double noise = 0.0;        // feature noise std-dev, clamped at 0 after adding
    double label_noise = 0.0;  // probability of flipping a label to another cluster
    std::uint64_t seed = 0;
};

/// Throws if any PairedDataset invariant is violated (shape consistency,
/// non-negative finite features, no all-zero label row).
void validate_dataset(const PairedDataset& ds);

/// CMF file format (little-endian): magic "CMF1"; u32 m; u32 d_img; u32 d_txt;
/// u32 n_classes (0 = no labels); f32 image matrix row-major; f32 text matrix
/// row-major; if n_classes > 0, u8 label matrix row-major with entries 0/1.
PairedDataset load_dataset(const std::string& path);

/// Writes atomically: the file appears under `path` only after a complete
/// write (temp file + rename), so a failed save leaves nothing behind.
void save_dataset(const PairedDataset& ds, const std::string& path);

/// Clustered synthetic pairs: one non-negative uniform prototype per cluster
/// and modality, Gaussian noise clamped at zero, one-hot cluster labels with
/// optional flips. Cross-modal structure exists only through shared cluster
/// membership. Deterministic given the seed.
PairedDataset gen_synthetic(const SyntheticConfig& cfg);

/// Seeded shuffle-based split: query sets first, remainder is the retrieval
/// set, train drawn from retrieval.
SplitSpec make_split(const PairedDataset& ds, const SplitFractions& fractions, std::uint64_t seed);

void save_split(const SplitSpec& split, const std::string& path);
SplitSpec load_split(const std::string& path);

/// Checks the SplitSpec invariants against a dataset of m rows: indices in
/// range, train within retrieval, query sets disjoint from retrieval and
/// from each other.
void validate_split(const SplitSpec& split, std::size_t m);

/// New dataset holding the given rows (in the given order).
PairedDataset select_rows(const PairedDataset& ds, std::span<const std::uint32_t> idx);

}  // namespace cohash
