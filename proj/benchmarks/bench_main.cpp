#include <benchmark/benchmark.h>

#include "orbit/algebra_tests.hpp"
#include "orbit/estimation.hpp"
#include "orbit/recovery.hpp"
#include "orbit/so3.hpp"

using namespace orbit;

static void BM_SampleGeneration(benchmark::State& state) {
  const auto spec = ProblemSpec::cyclic(static_cast<int>(state.range(0))).with_sigma(1.0);
  Rng rng(1);
  const SampleGenerator gen(spec, random_signal(spec, rng), 7);
  Eigen::VectorXd y(spec.observed_dim());
  std::int64_t i = 0;
  for (auto _ : state) {
    gen.sample(i++, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SampleGeneration)->Arg(5)->Arg(21);

static void BM_StreamingEstimate(benchmark::State& state) {
  const auto spec = ProblemSpec::cyclic(static_cast<int>(state.range(0))).with_sigma(1.0);
  Rng rng(2);
  const auto theta = random_signal(spec, rng);
  const std::int64_t n = 100000;
  for (auto _ : state) {
    auto est = estimate_moments_streaming(spec, theta, n, 3, NoiseModel::gaussian(3));
    benchmark::DoNotOptimize(est.tensors.back().values().data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_StreamingEstimate)->Arg(5)->Arg(11)->Unit(benchmark::kMillisecond);

static void BM_JennrichRecover(benchmark::State& state) {
  const auto spec = ProblemSpec::cyclic(static_cast<int>(state.range(0)));
  Rng rng(3);
  const auto t3 = exact_moment(spec, random_signal(spec, rng), 3);
  for (auto _ : state) {
    auto r = jennrich_recover(t3, spec, rng);
    benchmark::DoNotOptimize(r.residual);
  }
}
BENCHMARK(BM_JennrichRecover)->Arg(5)->Arg(9)->Arg(15)->Unit(benchmark::kMillisecond);

static void BM_ExactJacobianRank(benchmark::State& state) {
  const auto spec = ProblemSpec::cyclic(static_cast<int>(state.range(0)));
  const auto basis = invariant_basis_up_to(spec, 3);
  Rng rng(4);
  for (auto _ : state) {
    auto r = jacobian_rank(basis, spec, rng, RankMode::Exact);
    benchmark::DoNotOptimize(r.rank);
  }
}
BENCHMARK(BM_ExactJacobianRank)->Arg(9)->Arg(15)->Arg(21)->Unit(benchmark::kMillisecond);

static void BM_NumericCryoRank(benchmark::State& state) {
  const auto spec = ProblemSpec::so3(2, static_cast<int>(state.range(0))).with_projection(Projection::Equator);
  const auto basis = invariant_basis_up_to(spec, 3);
  Rng rng(5);
  for (auto _ : state) {
    auto r = jacobian_rank(basis, spec, rng, RankMode::Numeric);
    benchmark::DoNotOptimize(r.rank);
  }
}
BENCHMARK(BM_NumericCryoRank)->Arg(2)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

static void BM_WignerD(benchmark::State& state) {
  Rng rng(6);
  const auto q = so3::haar_quaternion(rng);
  const int l = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto d = so3::wigner_d_all(l, q);
    benchmark::DoNotOptimize(d.back().data());
  }
}
BENCHMARK(BM_WignerD)->Arg(4)->Arg(10)->Arg(20);

static void BM_FrequencyMarch(benchmark::State& state) {
  const auto spec = ProblemSpec::so3(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  Rng rng(7);
  const auto tables = so3_tables_from_signal(spec, random_signal(spec, rng)[0]);
  for (auto _ : state) {
    auto r = frequency_march(tables, rng);
    benchmark::DoNotOptimize(r.residual);
  }
}
BENCHMARK(BM_FrequencyMarch)->Args({3, 2})->Args({4, 5})->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
