#include <benchmark/benchmark.h>

#include "cohash/dataset.hpp"
#include "cohash/simgraph.hpp"

using namespace cohash;

namespace {

PairedDataset bench_dataset(std::size_t m) {
    SyntheticConfig cfg;
    cfg.n_clusters = 5;
    cfg.per_cluster = m / 5;
    cfg.d_img = 32;
    cfg.d_txt = 32;
    cfg.noise = 0.3;
    cfg.seed = 1;
    return gen_synthetic(cfg);
}

void BM_PairwiseDistance(benchmark::State& state) {
    const PairedDataset ds = bench_dataset(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        MatD d = pairwise_distance(ds, 0.5);
        benchmark::DoNotOptimize(d.data());
    }
}
BENCHMARK(BM_PairwiseDistance)->Arg(250)->Arg(500)->Arg(1000);

void BM_ConditionalProb(benchmark::State& state) {
    const PairedDataset ds = bench_dataset(500);
    const MatD dist = pairwise_distance(ds, 0.5);
    for (auto _ : state) {
        SparseRows pcond = conditional_prob(dist, static_cast<std::size_t>(state.range(0)));
        benchmark::DoNotOptimize(pcond.val.data());
    }
}
BENCHMARK(BM_ConditionalProb)->Arg(10)->Arg(50)->Arg(100);

void BM_GcProbability(benchmark::State& state) {
    const PairedDataset ds = bench_dataset(500);
    const MatD dist = pairwise_distance(ds, 0.5);
    const SparseRows pcond = conditional_prob(dist, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        MatD prob = gc_probability(pcond);
        benchmark::DoNotOptimize(prob.data());
    }
}
BENCHMARK(BM_GcProbability)->Arg(10)->Arg(50)->Arg(100);

void BM_ComputeGcFull(benchmark::State& state) {
    const PairedDataset ds = bench_dataset(static_cast<std::size_t>(state.range(0)));
    GcParams params;
    params.k = 50;
    params.beta = 100.0;
    for (auto _ : state) {
        GcModel model = compute_gc(ds, params);
        benchmark::DoNotOptimize(model.s_final.data());
    }
}
BENCHMARK(BM_ComputeGcFull)->Arg(250)->Arg(500)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
