#include <benchmark/benchmark.h>

#include "mbdf/adaptive.hpp"
#include "mbdf/codec.hpp"
#include "mbdf/detectors.hpp"
#include "mbdf/filters.hpp"
#include "mbdf/sysmodel.hpp"

using namespace mbdf;

namespace {

CVector qpsk_vector(Eigen::Index n, Rng& rng) {
  const auto c = Constellation::qpsk();
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  CVector s(n);
  for (Eigen::Index j = 0; j < n; ++j) s(j) = c.point(pick(rng));
  return s;
}

void BM_DesignStatistical(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0)), l = static_cast<int>(state.range(1));
  Rng rng(1);
  const auto h = random_channel(n, n, 0.1, rng);
  const auto stats = perfect_feedback_stats(h.gains, 1.0, h.noise_variance);
  const auto specs = make_sic_branches(fixed_orderings(n, l), kDefaultBeta);
  for (auto _ : state) benchmark::DoNotOptimize(design_statistical(stats, specs));
}
BENCHMARK(BM_DesignStatistical)->Args({4, 1})->Args({4, 4})->Args({8, 4});

void BM_DesignClosedForm(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0)), l = static_cast<int>(state.range(1));
  Rng rng(1);
  const auto h = random_channel(n, n, 0.1, rng);
  const auto stats = perfect_feedback_stats(h.gains, 1.0, h.noise_variance);
  const auto specs = make_sic_branches(fixed_orderings(n, l), kDefaultBeta);
  for (auto _ : state) benchmark::DoNotOptimize(design_closed_form(stats, specs));
}
BENCHMARK(BM_DesignClosedForm)->Args({4, 4})->Args({8, 4});

void BM_Detect(benchmark::State& state) {
  const auto kind = static_cast<DetectorKind>(state.range(0));
  const int l = static_cast<int>(state.range(1));
  Rng rng(2);
  const auto h = random_channel(4, 4, 0.1, rng);
  DetectorConfig cfg;
  cfg.kind = kind;
  cfg.branches = l;
  Receiver rx(cfg, Constellation::qpsk());
  rx.prepare(h.gains, h.noise_variance);
  const CVector r = transmit(h, qpsk_vector(4, rng), rng);
  for (auto _ : state) benchmark::DoNotOptimize(rx.detect(r));
}
BENCHMARK(BM_Detect)
    ->Args({static_cast<int>(DetectorKind::linear), 1})
    ->Args({static_cast<int>(DetectorKind::sic), 1})
    ->Args({static_cast<int>(DetectorKind::mbdf), 4})
    ->Args({static_cast<int>(DetectorKind::mbdf), 8})
    ->Args({static_cast<int>(DetectorKind::ml), 1});

void BM_AdaptiveStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(3);
  const auto h = random_channel(n, n, 0.1, rng);
  AdaptiveConfig cfg;
  cfg.detector.branches = 2;
  AdaptiveReceiver rx(cfg, Constellation::qpsk(), n, n, h.noise_variance);
  const CVector s = qpsk_vector(n, rng);
  const CVector r = transmit(h, s, rng);
  for (auto _ : state) benchmark::DoNotOptimize(rx.step(r, &s));
}
BENCHMARK(BM_AdaptiveStep)->Arg(4)->Arg(8);

void BM_RlsCovariance(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  Rng rng(4);
  auto st = RlsState::init(n, n);
  CVector r(n);
  for (Eigen::Index i = 0; i < n; ++i) r(i) = complex_gaussian(rng, 1.0);
  for (auto _ : state) {
    rls_covariance_update(st, r);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_RlsCovariance)->Arg(4)->Arg(8);

void BM_Bcjr(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  Rng rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> llr(2 * (k + 2));
  for (auto& x : llr) x = 2.0 + 1.5 * g(rng);
  for (auto _ : state) benchmark::DoNotOptimize(bcjr_decode(llr));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * k));
}
BENCHMARK(BM_Bcjr)->Arg(1000)->Arg(4000);

}  // namespace

BENCHMARK_MAIN();
