#include <benchmark/benchmark.h>

#include <vector>

#include "frg/data.hpp"
#include "frg/downstream.hpp"
#include "frg/representation.hpp"
#include "frg/rng.hpp"
#include "frg/stats_bounds.hpp"

namespace {

using namespace frg;

Dataset bench_data(std::size_t n, int d) {
  SyntheticSpec spec;
  spec.n = n;
  spec.d = d;
  spec.leakage = 1.0;
  spec.seed = 1;
  return generate_synthetic(spec);
}

RepresentationArch adult_like_arch() {
  RepresentationArch a;
  a.latent_dim = 32;
  a.encoder_hidden = {64};
  a.decoder_hidden = {64};
  return a;
}

void BM_Encode(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dataset d = bench_data(n, 117);
  const RepresentationModel m(117, 2, adult_like_arch(), 3);
  for (auto _ : state) benchmark::DoNotOptimize(m.encode(d.features(), d.sensitive()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Encode)->Arg(256)->Arg(4096);

void BM_BatchObjectiveWithGradients(benchmark::State& state) {
  const Dataset d = bench_data(256, 117);
  RepresentationModel m(117, 2, adult_like_arch(), 3);
  Rng rng(4);
  Matrix noise(256, 32);
  for (auto& v : noise.reshaped()) v = rng.normal();
  const ConstraintTerm term{true, 0.0044, 0.02, 0.0};
  for (auto _ : state) {
    for (auto* p : m.parameter_ptrs()) p->grad.setZero();
    benchmark::DoNotOptimize(batch_objective(m, d.features(), d.sensitive(), noise, term, 2.0, true));
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_BatchObjectiveWithGradients);

void BM_EstimateI1(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dataset d = bench_data(n, 117);
  const RepresentationModel m(117, 2, adult_like_arch(), 3);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_I1(m, d));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_EstimateI1)->Arg(10000)->Arg(100000);

void BM_TQuantile(benchmark::State& state) {
  double dof = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(t_quantile(0.9, dof));
    dof = dof > 1e4 ? 1.0 : dof * 1.7;
  }
}
BENCHMARK(BM_TQuantile);

void BM_UpperBound(benchmark::State& state) {
  Rng rng(5);
  std::vector<double> s(static_cast<std::size_t>(state.range(0)));
  for (auto& v : s) v = rng.normal();
  const ConfidenceBoundSpec spec;
  for (auto _ : state) benchmark::DoNotOptimize(upper_bound(s, spec));
}
BENCHMARK(BM_UpperBound)->Arg(1000)->Arg(18000);

void BM_Auc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(6);
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.normal();
    labels[i] = rng.bernoulli(0.25);
  }
  for (auto _ : state) benchmark::DoNotOptimize(auc(scores, labels));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(9000);

void BM_DeltaDp(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(7);
  std::vector<int> pred(n), s(n);
  for (std::size_t i = 0; i < n; ++i) {
    pred[i] = rng.bernoulli(0.3);
    s[i] = static_cast<int>(i % 2);
  }
  for (auto _ : state) benchmark::DoNotOptimize(delta_dp(pred, s, 2));
}
BENCHMARK(BM_DeltaDp)->Arg(9000);

}  // namespace

BENCHMARK_MAIN();
