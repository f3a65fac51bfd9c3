#include "minlqg/config.hpp"
#include "minlqg/fokker_planck.hpp"
#include "minlqg/kernels.hpp"
#include "minlqg/mc.hpp"
#include "minlqg/meanfield.hpp"

#include <benchmark/benchmark.h>

using namespace minlqg;

namespace {

Scenario bench_scenario() { return reference_scenario(0.1, 1.5, 500.0, 2000); }

Vector scalar(double v) { return Vector::Constant(1, v); }

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::Parallel : Exec::Serial; }

void label(benchmark::State& state) { state.SetLabel(state.range(0) ? "parallel" : "serial"); }

void BM_DriftField(benchmark::State& state) {
  const Scenario s = bench_scenario();
  const VectorSeries xbar(s.grid, std::vector<Vector>(s.grid.n_nodes(), scalar(0.3)));
  const MinLqgPolicy pol = MinLqgPolicy::build(s.population.classes[0], s.destinations, xbar);
  const SpatialGrid g = s.default_fp_grid();
  std::vector<double> x(static_cast<std::size_t>(g.nodes)), mu(x.size());
  for (int i = 0; i < g.nodes; ++i) x[i] = g.x(i);
  const Exec exec = exec_of(state);
  std::size_t k = 0;
  for (auto _ : state) {
    drift_field(pol, pol.node(k), x, mu, exec);
    benchmark::DoNotOptimize(mu.data());
    k = (k + 97) % (s.grid.n_nodes() - 1);
  }
  label(state);
}

void BM_Evaluate(benchmark::State& state) {
  const MeanFieldSolver solver(bench_scenario(), exec_of(state));
  for (auto _ : state) benchmark::DoNotOptimize(solver.evaluate(Cdm::binary(0.39)).f);
  label(state);
}

void BM_Simulate(benchmark::State& state) {
  const MeanFieldSolver solver(bench_scenario());
  SimulationConfig cfg;
  cfg.n_agents = 2000;
  cfg.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_population(solver, Cdm::binary(0.39), cfg).mean);
  label(state);
}

}  // namespace

BENCHMARK(BM_DriftField)->Arg(0)->Arg(1);
BENCHMARK(BM_Evaluate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Simulate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
