#include <benchmark/benchmark.h>

#include <cstddef>

#include "cohash/matrix.hpp"
#include "cohash/retrieval.hpp"
#include "cohash/rng.hpp"

using namespace cohash;

namespace {

MatD random_signs(Rng& rng, std::size_t n, std::size_t d) {
    MatD m(n, d);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.bits() & 1u ? 1.0 : -1.0;
    return m;
}

MatU8 random_labels(Rng& rng, std::size_t n, std::size_t ncls) {
    MatU8 l(n, ncls);
    for (std::size_t i = 0; i < n; ++i) l(i, rng.integer(ncls)) = 1;
    return l;
}

void BM_Pack(benchmark::State& state) {
    Rng rng(1);
    const MatD signs = random_signs(rng, 1000, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        PackedCodes pc = pack(signs);
        benchmark::DoNotOptimize(pc.words.data());
    }
}
BENCHMARK(BM_Pack)->Arg(16)->Arg(64)->Arg(96);

void BM_HammingPairs(benchmark::State& state) {
    Rng rng(2);
    const PackedCodes a = pack(random_signs(rng, 1000, static_cast<std::size_t>(state.range(0))));
    const PackedCodes b = pack(random_signs(rng, 1000, static_cast<std::size_t>(state.range(0))));
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(hamming(a, i % a.n, b, (i * 7) % b.n));
        ++i;
    }
}
BENCHMARK(BM_HammingPairs)->Arg(16)->Arg(64)->Arg(96);

void BM_RankItems(benchmark::State& state) {
    Rng rng(3);
    const PackedCodes q = pack(random_signs(rng, 1, 64));
    const PackedCodes r =
        pack(random_signs(rng, static_cast<std::size_t>(state.range(0)), 64));
    for (auto _ : state) {
        auto ranked = rank_items(q, 0, r);
        benchmark::DoNotOptimize(ranked.data());
    }
}
BENCHMARK(BM_RankItems)->Arg(1000)->Arg(10000);

void BM_Evaluate(benchmark::State& state) {
    Rng rng(4);
    const std::size_t nr = static_cast<std::size_t>(state.range(0));
    const PackedCodes q = pack(random_signs(rng, 100, 64));
    const PackedCodes r = pack(random_signs(rng, nr, 64));
    const MatU8 ql = random_labels(rng, 100, 5);
    const MatU8 rl = random_labels(rng, nr, 5);
    for (auto _ : state) {
        EvalReport rep = evaluate(q, ql, r, rl, {100, 500}, "I2T");
        benchmark::DoNotOptimize(rep.map);
    }
}
BENCHMARK(BM_Evaluate)->Arg(1000)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
