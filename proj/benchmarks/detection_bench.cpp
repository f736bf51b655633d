#include <benchmark/benchmark.h>

#include "qgfc/correlation.hpp"
#include "qgfc/detection.hpp"
#include "qgfc/timing.hpp"

namespace {

qgfc::ModeLattice lattice(std::int64_t n) {
  qgfc::ModeLattice::Params p;
  p.n_modes = n;
  return qgfc::ModeLattice(p);
}

void BM_SamplePairs(benchmark::State& state) {
  const auto l = lattice(1000);
  const double pairs = static_cast<double>(state.range(0));
  for (auto _ : state) {
    auto p = qgfc::sample_pairs(l, {}, 10.0, pairs / 10.0, 0.0, 1);
    benchmark::DoNotOptimize(p.d1.timestamps.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SamplePairs)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_HistogramSweep(benchmark::State& state) {
  const auto l = lattice(1000);
  const auto p = qgfc::sample_pairs(l, {}, 10.0, static_cast<double>(state.range(0)) / 10.0, 0.0, 2);
  const double w = qgfc::comb_peak_width(l);
  for (auto _ : state) {
    auto h = qgfc::build_histogram(p.d1, p.d2, w / 10, -2.5 * l.period(), 2.5 * l.period());
    benchmark::DoNotOptimize(h.counts.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HistogramSweep)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_DetectAndFit(benchmark::State& state) {
  const auto l = lattice(1000);
  const auto p = qgfc::sample_pairs(l, {}, 10.0, 1e5, 0.0, 3);
  auto h = qgfc::build_histogram(p.d1, p.d2, qgfc::comb_peak_width(l) / 10, -2.5 * l.period(), 2.5 * l.period());
  h.metadata.lattice = l;
  for (auto _ : state) {
    auto fit = qgfc::fit_comb(qgfc::detect_peaks(h), l.nu_b());
    benchmark::DoNotOptimize(fit.offset_est);
  }
}
BENCHMARK(BM_DetectAndFit)->Unit(benchmark::kMillisecond);

}  // namespace
