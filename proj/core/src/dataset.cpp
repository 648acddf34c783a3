#include "cohash/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "cohash/binary_io.hpp"
#include "cohash/error.hpp"
#include "cohash/rng.hpp"

namespace cohash {

void validate_dataset(const PairedDataset& ds) {
    if (ds.m == 0) throw Error("dataset: empty dataset");
    if (ds.d_img == 0 || ds.d_txt == 0)
        throw Error("dataset: dimension mismatch (zero feature dimension)");
    if (ds.img_feats.rows() != ds.m || ds.img_feats.cols() != ds.d_img ||
        ds.txt_feats.rows() != ds.m || ds.txt_feats.cols() != ds.d_txt)
        throw Error("dataset: dimension mismatch between header and feature matrices");

    auto check_feats = [](const MatF& f, const char* name) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            const float v = f.data()[i];
            if (!std::isfinite(v)) throw Error(std::string("dataset: non-finite ") + name + " feature entry");
            if (v < 0.0f) throw Error(std::string("dataset: negative ") + name + " feature entry");
        }
    };
    check_feats(ds.img_feats, "image");
    check_feats(ds.txt_feats, "text");

    if (ds.n_classes > 0) {
        if (ds.labels.rows() != ds.m || ds.labels.cols() != ds.n_classes)
            throw Error("dataset: dimension mismatch in label matrix");
        for (std::size_t i = 0; i < ds.m; ++i) {
            bool any = false;
            for (std::size_t c = 0; c < ds.n_classes; ++c) {
                const std::uint8_t v = ds.labels(i, c);
                if (v > 1) throw Error("dataset: label entry is not 0/1");
                any = any || v == 1;
            }
            if (!any) throw Error("dataset: unlabeled item (label row without a set bit)");
        }
    } else if (!ds.labels.empty()) {
        throw Error("dataset: label matrix present but n_classes is 0");
    }
}

PairedDataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cmf: cannot open '" + path + "'");
    io::expect_magic(is, "CMF1", "cmf");

    PairedDataset ds;
    ds.m = io::read_pod<std::uint32_t>(is, "cmf");
    ds.d_img = io::read_pod<std::uint32_t>(is, "cmf");
    ds.d_txt = io::read_pod<std::uint32_t>(is, "cmf");
    ds.n_classes = io::read_pod<std::uint32_t>(is, "cmf");
    if (ds.m == 0) throw Error("cmf: empty dataset");
    if (ds.d_img == 0 || ds.d_txt == 0) throw Error("cmf: dimension mismatch (zero feature dimension)");

    ds.img_feats = MatF(ds.m, ds.d_img);
    io::read_array(is, ds.img_feats.data(), ds.img_feats.size(), "cmf");
    ds.txt_feats = MatF(ds.m, ds.d_txt);
    io::read_array(is, ds.txt_feats.data(), ds.txt_feats.size(), "cmf");
    if (ds.n_classes > 0) {
        ds.labels = MatU8(ds.m, ds.n_classes);
        io::read_array(is, ds.labels.data(), ds.labels.size(), "cmf");
    }
    io::expect_eof(is, "cmf");

    validate_dataset(ds);
    return ds;
}

void save_dataset(const PairedDataset& ds, const std::string& path) {
    validate_dataset(ds);
    io::atomic_write(path, "cmf", /*binary=*/true, [&](std::ostream& os) {
        os.write("CMF1", 4);
        io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(ds.m));
        io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(ds.d_img));
        io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(ds.d_txt));
        io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(ds.n_classes));
        io::write_array(os, ds.img_feats.data(), ds.img_feats.size());
        io::write_array(os, ds.txt_feats.data(), ds.txt_feats.size());
        if (ds.n_classes > 0) io::write_array(os, ds.labels.data(), ds.labels.size());
    });
}

PairedDataset gen_synthetic(const SyntheticConfig& cfg) {
    if (cfg.n_clusters < 2) throw Error("synthetic: n_clusters must be >= 2");
    if (cfg.per_cluster < 2) throw Error("synthetic: per_cluster must be >= 2");
    if (cfg.d_img == 0 || cfg.d_txt == 0) throw Error("synthetic: feature dimensions must be >= 1");
    if (cfg.noise < 0.0) throw Error("synthetic: noise must be >= 0");
    if (cfg.label_noise < 0.0 || cfg.label_noise > 1.0)
        throw Error("synthetic: label_noise must be in [0, 1]");

    Rng rng(cfg.seed);
    const std::size_t m = cfg.n_clusters * cfg.per_cluster;

    // Independent prototypes per modality: cross-modal structure comes only
    // from shared cluster membership.
    MatD proto_img(cfg.n_clusters, cfg.d_img);
    MatD proto_txt(cfg.n_clusters, cfg.d_txt);
    for (std::size_t c = 0; c < cfg.n_clusters; ++c) {
        for (std::size_t d = 0; d < cfg.d_img; ++d) proto_img(c, d) = rng.uniform();
        for (std::size_t d = 0; d < cfg.d_txt; ++d) proto_txt(c, d) = rng.uniform();
    }

    PairedDataset ds;
    ds.m = m;
    ds.d_img = cfg.d_img;
    ds.d_txt = cfg.d_txt;
    ds.n_classes = cfg.n_clusters;
    ds.img_feats = MatF(m, cfg.d_img);
    ds.txt_feats = MatF(m, cfg.d_txt);
    ds.labels = MatU8(m, cfg.n_clusters);

    for (std::size_t c = 0; c < cfg.n_clusters; ++c) {
        for (std::size_t j = 0; j < cfg.per_cluster; ++j) {
            const std::size_t row = c * cfg.per_cluster + j;
            for (std::size_t d = 0; d < cfg.d_img; ++d) {
                const double n = cfg.noise > 0.0 ? cfg.noise * rng.normal() : 0.0;
                ds.img_feats(row, d) = static_cast<float>(std::max(0.0, proto_img(c, d) + n));
            }
            for (std::size_t d = 0; d < cfg.d_txt; ++d) {
                const double n = cfg.noise > 0.0 ? cfg.noise * rng.normal() : 0.0;
                ds.txt_feats(row, d) = static_cast<float>(std::max(0.0, proto_txt(c, d) + n));
            }
            std::size_t cluster = c;
            if (cfg.label_noise > 0.0 && rng.uniform() < cfg.label_noise) {
                const std::size_t shift = 1 + static_cast<std::size_t>(rng.integer(cfg.n_clusters - 1));
                cluster = (c + shift) % cfg.n_clusters;
            }
            ds.labels(row, cluster) = 1;
        }
    }
    return ds;
}

SplitSpec make_split(const PairedDataset& ds, const SplitFractions& fractions, std::uint64_t seed) {
    if (fractions.test_query < 0.0 || fractions.validation_query < 0.0 ||
        fractions.test_query + fractions.validation_query > 1.0)
        throw Error("split: query fractions must be non-negative and sum to <= 1");

    const std::size_t m = ds.m;
    const auto n_test = static_cast<std::size_t>(std::llround(fractions.test_query * static_cast<double>(m)));
    const auto n_val = static_cast<std::size_t>(std::llround(fractions.validation_query * static_cast<double>(m)));
    if (n_test + n_val >= m) throw Error("split: fractions leave retrieval set empty");

    std::vector<std::uint32_t> perm(m);
    for (std::size_t i = 0; i < m; ++i) perm[i] = static_cast<std::uint32_t>(i);
    Rng rng(seed);
    rng.shuffle(perm);

    SplitSpec split;
    split.test_query.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.validation_query.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test),
                                  perm.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
    split.retrieval.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), perm.end());

    if (fractions.train_size == 0) {
        split.train = split.retrieval;
    } else {
        if (fractions.train_size > split.retrieval.size())
            throw Error("split: train_size exceeds retrieval set size");
        split.train.assign(split.retrieval.begin(),
                           split.retrieval.begin() + static_cast<std::ptrdiff_t>(fractions.train_size));
    }

    std::sort(split.retrieval.begin(), split.retrieval.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation_query.begin(), split.validation_query.end());
    std::sort(split.test_query.begin(), split.test_query.end());
    validate_split(split, m);
    return split;
}

void validate_split(const SplitSpec& split, std::size_t m) {
    auto check_range = [m](const std::vector<std::uint32_t>& v, const char* name) {
        for (const std::uint32_t i : v)
            if (i >= m) throw Error(std::string("split: ") + name + " index out of range");
    };
    check_range(split.retrieval, "retrieval");
    check_range(split.train, "train");
    check_range(split.validation_query, "validation_query");
    check_range(split.test_query, "test_query");
    if (split.retrieval.empty()) throw Error("split: retrieval set is empty");

    const std::set<std::uint32_t> retrieval(split.retrieval.begin(), split.retrieval.end());
    for (const std::uint32_t i : split.train)
        if (!retrieval.contains(i)) throw Error("split: train index outside retrieval set");

    std::set<std::uint32_t> queries;
    for (const std::uint32_t i : split.validation_query) {
        if (retrieval.contains(i)) throw Error("split: validation query overlaps retrieval set");
        if (!queries.insert(i).second) throw Error("split: duplicate query index");
    }
    for (const std::uint32_t i : split.test_query) {
        if (retrieval.contains(i)) throw Error("split: test query overlaps retrieval set");
        if (!queries.insert(i).second) throw Error("split: query sets overlap");
    }
}

void save_split(const SplitSpec& split, const std::string& path) {
    nlohmann::json j;
    j["retrieval"] = split.retrieval;
    j["train"] = split.train;
    j["validation_query"] = split.validation_query;
    j["test_query"] = split.test_query;

    io::atomic_write(path, "split", /*binary=*/false,
                     [&](std::ostream& os) { os << j.dump(2) << "\n"; });
}

SplitSpec load_split(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("split: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("split: invalid JSON: ") + e.what());
    }
    SplitSpec split;
    try {
        split.retrieval = j.at("retrieval").get<std::vector<std::uint32_t>>();
        split.train = j.at("train").get<std::vector<std::uint32_t>>();
        split.validation_query = j.at("validation_query").get<std::vector<std::uint32_t>>();
        split.test_query = j.at("test_query").get<std::vector<std::uint32_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("split: missing or malformed field: ") + e.what());
    }
    return split;
}

PairedDataset select_rows(const PairedDataset& ds, std::span<const std::uint32_t> idx) {
    if (idx.empty()) throw Error("dataset: cannot select an empty row set");
    PairedDataset out;
    out.m = idx.size();
    out.d_img = ds.d_img;
    out.d_txt = ds.d_txt;
    out.n_classes = ds.n_classes;
    out.img_feats = MatF(out.m, ds.d_img);
    out.txt_feats = MatF(out.m, ds.d_txt);
    if (ds.has_labels()) out.labels = MatU8(out.m, ds.n_classes);

    for (std::size_t r = 0; r < idx.size(); ++r) {
        const std::uint32_t i = idx[r];
        if (i >= ds.m) throw Error("dataset: row index out of range");
        std::copy_n(ds.img_feats.row(i), ds.d_img, out.img_feats.row(r));
        std::copy_n(ds.txt_feats.row(i), ds.d_txt, out.txt_feats.row(r));
        if (ds.has_labels()) std::copy_n(ds.labels.row(i), ds.n_classes, out.labels.row(r));
    }
    return out;
}

}  // namespace cohash
