// Serial reference loops against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "coagsim/discrete_solver.hpp"
#include "coagsim/pair_kernels.hpp"

using namespace coagsim;

namespace {

MeasureState cloud(std::size_t n) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.01, 100.0);
  MeasureState s(2);
  for (std::size_t i = 0; i < n; ++i) s.add(Composition{u(rng), u(rng)}, 1.0 / double(n));
  return s;
}

void BM_LossRates(benchmark::State& state, Exec exec) {
  const Kernel k = Kernel::diffusion(1.0);
  const auto s = cloud(static_cast<std::size_t>(state.range(0)));
  const auto c = prepare_cloud(k, s.particles());
  std::vector<double> out(c.size());
  for (auto _ : state) {
    loss_rates(exec, k, c, c, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetComplexityN(state.range(0));
}

void BM_Gain(benchmark::State& state, Exec exec) {
  const Kernel k = Kernel::diffusion(1.0);
  const auto s = cloud(static_cast<std::size_t>(state.range(0)));
  const auto c = prepare_cloud(k, s.particles());
  const BinGrid g = BinGrid::for_band(2, 1e-3);
  Compactor sink(g);
  for (auto _ : state) {
    auto lost = accumulate_gain(exec, k, s.particles(), c, 1e-3, 1.0, sink);
    benchmark::DoNotOptimize(lost);
    auto out = sink.take(0.0);
    benchmark::DoNotOptimize(out);
  }
}

void BM_DiscreteRhsReference(benchmark::State& state) {
  DiscreteSystem sys(Kernel::additive(1.0), 1, state.range(0));
  std::vector<double> n(sys.size(), 1e-3);
  for (auto _ : state) benchmark::DoNotOptimize(rhs_reference(sys, n));
}

void BM_DiscreteRhs(benchmark::State& state) {
  DiscreteSystem sys(Kernel::additive(1.0), 1, state.range(0));
  std::vector<double> n(sys.size(), 1e-3);
  for (auto _ : state) benchmark::DoNotOptimize(rhs(sys, n));
}

}  // namespace

BENCHMARK_CAPTURE(BM_LossRates, serial, Exec::kSerial)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK_CAPTURE(BM_LossRates, parallel, Exec::kParallel)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK_CAPTURE(BM_Gain, serial, Exec::kSerial)->Arg(256)->Arg(1024);
BENCHMARK_CAPTURE(BM_Gain, parallel, Exec::kParallel)->Arg(256)->Arg(1024);
BENCHMARK(BM_DiscreteRhsReference)->Arg(256)->Arg(1024);
BENCHMARK(BM_DiscreteRhs)->Arg(256)->Arg(1024);

BENCHMARK_MAIN();
