#include "zopro/analysis.hpp"
#include "zopro/estimators.hpp"
#include "zopro/solvers.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace zopro;

void BM_JointEstimate(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const int b = static_cast<int>(state.range(1));
  const auto p = make_logistic_problem(2, d, 20, 1.0, 1);
  const ValueOracle f = [&p](const Vector& x) { return p.node(0).value(x); };
  SmoothingConfig c;
  c.batch = b;
  const auto dirs = sample_directions(c, d, 0);
  const Vector x = Vector::Constant(d, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(joint_estimate(f, x, dirs, c.mu));
  state.SetItemsProcessed(state.iterations() * (2 * b + 1));
}
BENCHMARK(BM_JointEstimate)->Args({5, 64})->Args({20, 50})->Args({20, 200});

void BM_SampleDirections(benchmark::State& state) {
  SmoothingConfig c;
  c.batch = static_cast<int>(state.range(1));
  std::int64_t round = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_directions(c, static_cast<int>(state.range(0)), round++));
}
BENCHMARK(BM_SampleDirections)->Args({20, 50});

// One synchronous round over the whole network.
void BM_ZoProRound(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int d = static_cast<int>(state.range(1));
  const auto g = random_connected_graph(n, 4.0, 3, WeightPolicy::Metropolis);
  const auto p = make_logistic_problem(n, d, 20, 1.0, 3);
  AlgoConfig cfg;
  cfg.rho = 1.0;
  cfg.d_policy.tau = 4.0;
  cfg.trace_mode = TraceMode::Off;
  SyncNetwork net(g, cfg.trace_mode);
  auto states = initial_states(p, net, cfg, 1);
  const auto model = zeroth_order_model(cfg.smoothing, d);
  std::int64_t round = 0;
  for (auto _ : state) benchmark::DoNotOptimize(zopro_round(states, p, net, cfg, round++, model));
}
BENCHMARK(BM_ZoProRound)->Args({10, 5})->Args({50, 20})->Unit(benchmark::kMillisecond);

void BM_SoProRound(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto g = random_connected_graph(n, 4.0, 3, WeightPolicy::Metropolis);
  const auto p = make_logistic_problem(n, 20, 20, 1.0, 3);
  AlgoConfig cfg;
  cfg.rho = 1.0;
  cfg.d_policy.tau = 4.0;
  cfg.trace_mode = TraceMode::Off;
  SyncNetwork net(g, cfg.trace_mode);
  auto states = initial_states(p, net, cfg, 1);
  for (auto _ : state) benchmark::DoNotOptimize(sopro_round(states, p, net, cfg));
}
BENCHMARK(BM_SoProRound)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_TheoremConstants(benchmark::State& state) {
  const auto g = ring_graph(4);
  const auto p = make_quadratic_problem(4, Matrix::Identity(2, 2), 1.0, 1);
  AlgoConfig cfg;
  const std::vector<Matrix> d(4, 3.0 * Matrix::Identity(2, 2));
  for (auto _ : state) benchmark::DoNotOptimize(theorem_constants(p, g, cfg, d, 1.0, 1.0, 1.0));
}
BENCHMARK(BM_TheoremConstants)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
