// Serial against OpenMP versions of the three hot kernels on a case 1 panel.
#include <benchmark/benchmark.h>

#include "tvcn/bootstrap.hpp"
#include "tvcn/estimator.hpp"
#include "tvcn/simlab.hpp"
#include "tvcn/tuning.hpp"

namespace {

using namespace tvcn;

SimulatedPanel case_one(std::size_t n) {
  SimSpec spec;
  spec.n = n;
  spec.seed = 1;
  return simulate_case(spec);
}

struct Fixture {
  DifferencedPanel diffs;
  BandwidthSet bands;
  CorrFieldEstimate est;

  explicit Fixture(std::size_t n)
      : diffs(difference(case_one(n).panel, default_lag(n))),
        bands(BandwidthSet::uniform(6, 0.25)),
        est(estimate_corr_field(diffs, bands, fourth_order_epanechnikov(), LrvParams::uniform(6, 6, 0.35))) {}
};

const Fixture& fixture(std::size_t n) {
  static const Fixture f450(450), f600(600);
  return n == 450 ? f450 : f600;
}

ExecPolicy policy_of(const benchmark::State& state) {
  return state.range(1) ? ExecPolicy::parallel : ExecPolicy::serial;
}

void BM_EstimateMoments(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_moments(f.diffs, f.bands, fourth_order_epanechnikov(), policy_of(state)));
  }
}

void BM_BlockSums(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  const InnovationField xi(f.est, f.bands, fourth_order_epanechnikov());
  for (auto _ : state) benchmark::DoNotOptimize(block_sums(xi, 12, policy_of(state)));
}

void BM_DrawEnsemble(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  const InnovationField xi(f.est, f.bands, fourth_order_epanechnikov());
  const auto sums = block_sums(xi, 12);
  for (auto _ : state) benchmark::DoNotOptimize(draw_ensemble(sums, f.bands, 1000, 7, policy_of(state)));
}

}  // namespace

BENCHMARK(BM_EstimateMoments)->ArgsProduct({{450, 600}, {0, 1}})->ArgNames({"n", "parallel"})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BlockSums)->ArgsProduct({{450, 600}, {0, 1}})->ArgNames({"n", "parallel"})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DrawEnsemble)->ArgsProduct({{450, 600}, {0, 1}})->ArgNames({"n", "parallel"})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
