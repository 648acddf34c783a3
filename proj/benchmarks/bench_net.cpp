#include <benchmark/benchmark.h>

#include <cstddef>

#include "cohash/net.hpp"
#include "cohash/rng.hpp"

using namespace cohash;

namespace {

MatF random_batch(Rng& rng, std::size_t n, std::size_t d) {
    MatF f(n, d);
    for (std::size_t i = 0; i < f.size(); ++i)
        f.data()[i] = static_cast<float>(rng.uniform());
    return f;
}

void BM_Forward(benchmark::State& state) {
    Rng rng(1);
    const std::size_t hidden = static_cast<std::size_t>(state.range(0));
    const HashNet net = init_net(32, hidden, 64, 7);
    const MatF batch = random_batch(rng, 256, 32);
    for (auto _ : state) {
        MatD h = forward(net, batch);
        benchmark::DoNotOptimize(h.data());
    }
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(512)->Arg(4096);

void BM_ForwardBackward(benchmark::State& state) {
    Rng rng(2);
    const std::size_t hidden = static_cast<std::size_t>(state.range(0));
    HashNet net = init_net(32, hidden, 64, 7);
    const MatF batch = random_batch(rng, 256, 32);
    MatD d_out(256, 64);
    for (std::size_t i = 0; i < d_out.size(); ++i) d_out.data()[i] = rng.uniform(-1.0, 1.0);
    for (auto _ : state) {
        ForwardCache cache;
        MatD h = forward(net, batch, &cache);
        NetGrads grads = backward(net, batch, cache, d_out);
        benchmark::DoNotOptimize(grads.w1.data());
    }
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(512)->Arg(4096);

void BM_SgdStep(benchmark::State& state) {
    Rng rng(3);
    const std::size_t hidden = static_cast<std::size_t>(state.range(0));
    HashNet net = init_net(32, hidden, 64, 7);
    const MatF batch = random_batch(rng, 256, 32);
    MatD d_out(256, 64);
    for (std::size_t i = 0; i < d_out.size(); ++i) d_out.data()[i] = rng.uniform(-1.0, 1.0);
    ForwardCache cache;
    forward(net, batch, &cache);
    const NetGrads grads = backward(net, batch, cache, d_out);
    const SgdConfig sgd;
    for (auto _ : state) {
        apply_grads(net, grads, sgd);
        benchmark::DoNotOptimize(net.w1.data());
    }
}
BENCHMARK(BM_SgdStep)->Arg(64)->Arg(512)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
