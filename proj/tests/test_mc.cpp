#include "minlqg/mc.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace minlqg;
using namespace minlqg::test;

namespace {

InitialDistribution point_mass(double x) { return InitialDistribution(EmpiricalInitial{{scalar(x)}}); }

double spread_at_terminal(const TrajectoryEnsemble& ens) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& x : ens.terminal) {
    lo = std::min(lo, x(0));
    hi = std::max(hi, x(0));
  }
  return hi - lo;
}

}  // namespace

TEST_CASE("largest-remainder class allocation in contiguous ranges") {
  auto counts = [](const std::vector<std::size_t>& idx, std::size_t k) {
    std::vector<std::size_t> c(k, 0);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      ++c[idx[i]];
      if (i > 0) CHECK(idx[i] >= idx[i - 1]);
    }
    return c;
  };
  const std::vector<double> w{0.5, 0.5};
  CHECK(counts(allocate_classes(w, 11), 2) == std::vector<std::size_t>{6, 5});
  const std::vector<double> w3{0.2, 0.3, 0.5};
  const auto a = allocate_classes(w3, 7);
  CHECK(a.size() == 7);
  CHECK(counts(a, 3) == std::vector<std::size_t>{1, 2, 4});
  const auto one = allocate_classes(std::vector<double>{1.0}, 10000);
  CHECK(counts(one, 1)[0] == 10000);
  CHECK_THROWS_AS(allocate_classes(w, 0), ValidationError);
}

TEST_CASE("vanishing noise gives identical paths") {
  Scenario s = with_parameter(small_reference(), "sigma", 1e-8);
  s.initial = point_mass(0.3);
  const MeanFieldSolver solver(s);
  SimulationConfig cfg;
  cfg.n_agents = 200;
  const TrajectoryEnsemble ens = simulate_population(solver, Cdm::binary(0.4), cfg);
  CHECK(spread_at_terminal(ens) < 1e-4);
  REQUIRE(ens.paths.size() == 10);
  for (std::size_t i = 0; i < s.grid.n_nodes(); ++i) {
    CHECK(std::abs(ens.paths[3][i](0) - ens.paths[7][i](0)) < 1e-4);
  }
}

TEST_CASE("degenerate start at a destination gives an indicator row") {
  Scenario s = with_parameter(small_reference(), "sigma", 1e-8);
  s.initial = point_mass(-10.0);
  const MeanFieldSolver solver(s);
  SimulationConfig cfg;
  cfg.n_agents = 300;
  const TrajectoryEnsemble ens = simulate_population(solver, Cdm::binary(1.0), cfg);
  const Cdm f = empirical_cdm(ens, 1, 2);
  CHECK(f(0, 0) == 1.0);
  CHECK(f(0, 1) == 0.0);
}

TEST_CASE("empirical CDM rows sum to one exactly, per class") {
  Scenario s = small_reference();
  AgentClassParams b = s.population.classes[0];
  b.Q = Matrix::Constant(1, 1, 10.0);
  s.population = Population{{s.population.classes[0], b}, {0.3, 0.7}};
  const MeanFieldSolver solver(s);
  SimulationConfig cfg;
  cfg.n_agents = 999;
  const TrajectoryEnsemble ens = simulate_population(solver, Cdm::barycenter(2, 2), cfg);
  CHECK(std::count(ens.class_index.begin(), ens.class_index.end(), 0u) == 300);
  const Cdm f = empirical_cdm(ens, 2, 2);
  for (int c = 0; c < 2; ++c) CHECK(f(c, 0) + f(c, 1) == 1.0);
  CHECK_THROWS_AS(empirical_cdm(ens, 3, 2), ValidationError);
}

TEST_CASE("simulation is reproducible and independent of scheduling") {
  const MeanFieldSolver solver(small_reference());
  SimulationConfig cfg;
  cfg.n_agents = 1000;
  cfg.exec = Exec::Serial;
  const TrajectoryEnsemble a = simulate_population(solver, Cdm::binary(0.39), cfg);
  const TrajectoryEnsemble b = simulate_population(solver, Cdm::binary(0.39), cfg);
  cfg.exec = Exec::Parallel;
  const TrajectoryEnsemble c = simulate_population(solver, Cdm::binary(0.39), cfg);
  CHECK(a.terminal == b.terminal);
  CHECK(a.terminal == c.terminal);
  CHECK(a.mean == c.mean);
  cfg.seed = 8;
  const TrajectoryEnsemble d = simulate_population(solver, Cdm::binary(0.39), cfg);
  CHECK(a.terminal != d.terminal);
}

TEST_CASE("refined time steps see the same Brownian path") {
  const MeanFieldSolver solver(small_reference());
  SimulationConfig coarse;
  coarse.n_agents = 500;
  coarse.substeps = 1;
  coarse.noise_refinement = 2;
  SimulationConfig fine = coarse;
  fine.substeps = 2;
  fine.noise_refinement = 1;
  SimulationConfig other = coarse;
  other.seed = 99;
  const Cdm lam = Cdm::binary(0.39);
  const TrajectoryEnsemble a = simulate_population(solver, lam, coarse);
  const TrajectoryEnsemble b = simulate_population(solver, lam, fine);
  const TrajectoryEnsemble c = simulate_population(solver, lam, other);
  double coupled = 0.0, independent = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    coupled += std::abs(a.terminal[i](0) - b.terminal[i](0));
    independent += std::abs(a.terminal[i](0) - c.terminal[i](0));
  }
  coupled /= a.size();
  independent /= a.size();
  MESSAGE("mean |dx(T)| coupled " << coupled << ", independent " << independent);
  CHECK(coupled < 0.05 * independent);
}

TEST_CASE("Q=20 empirical left fraction") {
  const MeanFieldSolver solver(reference_scenario(20.0));
  const double r = bisection_fixed_point(solver).r;
  SimulationConfig cfg;
  cfg.n_agents = 10000;
  const TrajectoryEnsemble ens = simulate_population(solver, Cdm::binary(r), cfg);
  const double emp = empirical_cdm(ens, 1, 2)(0, 0);
  MESSAGE("r*=" << r << " empirical " << emp);
  CHECK(std::abs(emp - 0.02) <= 0.01);
}

TEST_CASE("empirical mean path approaches the tracked path as N grows") {
  const MeanFieldSolver solver(small_reference());
  const double r = bisection_fixed_point(solver).r;
  const Cdm lam = Cdm::binary(r);
  const VectorSeries xbar = solver.path(lam).xbar;
  std::vector<double> dev;
  for (int n : {100, 1000, 10000}) {
    SimulationConfig cfg;
    cfg.n_agents = n;
    dev.push_back(mean_path_deviation(simulate_population(solver, lam, cfg), xbar));
    MESSAGE("N=" << n << " deviation " << dev.back());
  }
  CHECK(dev[2] < dev[0]);
  CHECK(dev[2] < 0.05);
}

TEST_CASE("epsilon-Nash estimator: domain, determinism and decay") {
  const MeanFieldSolver solver(small_reference());
  const double r = bisection_fixed_point(solver).r;
  CHECK_THROWS_AS(estimate_epsilon_nash(solver, Cdm::binary(r), {1}), ValidationError);
  NashOptions opts;
  opts.replications = 4;
  const auto rows = estimate_epsilon_nash(solver, Cdm::binary(r), {10, 1000}, opts);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].N == 10);
  CHECK(rows[0].replications == 4);
  CHECK(rows[0].warning);
  CHECK(rows[0].std_error >= 0.0);
  MESSAGE("eps_10 " << rows[0].epsilon << " +/- " << rows[0].std_error << ", eps_1000 "
                    << rows[1].epsilon << " +/- " << rows[1].std_error);
  // the best response cannot lose against the target it was built for
  CHECK(rows[0].epsilon > 0.0);
  CHECK(rows[0].cost_best_response <= rows[0].cost_equilibrium);
  CHECK(rows[1].epsilon < rows[0].epsilon);
  const auto again = estimate_epsilon_nash(solver, Cdm::binary(r), {10}, opts);
  CHECK(again[0].epsilon == rows[0].epsilon);
  opts.replications = 1;
  CHECK_THROWS_AS(estimate_epsilon_nash(solver, Cdm::binary(r), {10}, opts), ValidationError);
}

TEST_CASE("epsilon-Nash estimator on a vector state uses sampled paths") {
  AgentClassParams p;
  p.A = Matrix::Zero(2, 2);
  p.B = p.R = p.sigma = Matrix::Identity(2, 2);
  p.Q = Matrix::Identity(2, 2);
  p.M = 20.0 * Matrix::Identity(2, 2);
  p.eta = 1.0;
  Scenario s = small_reference();
  s.population = Population{{p}, {1.0}};
  s.destinations = DestinationSet({vec({-2.0, 0.0}), vec({2.0, 0.0})}, p.M);
  s.initial = InitialDistribution(GaussianInitial{vec({0.3, 0.0}), Matrix::Identity(2, 2)});
  s.grid = TimeGrid(1.0, 50);
  s.cell_samples = 256;
  s.ensemble.n_agents = 200;
  const MeanFieldSolver solver(s);
  NashOptions opts;
  opts.replications = 3;
  opts.agent_paths = 4;
  const auto rows = estimate_epsilon_nash(solver, Cdm::barycenter(1, 2), {5}, opts);
  REQUIRE(rows.size() == 1);
  CHECK(std::isfinite(rows[0].epsilon));
  CHECK(rows[0].std_error >= 0.0);
}

TEST_CASE("terminal proximity: vacuous and nested events") {
  const Scenario s = small_reference();
  SimulationConfig cfg;
  cfg.n_agents = 2000;
  const auto huge = terminal_proximity_curve(s, {500.0}, 1e6, cfg);
  CHECK(huge[0].probability == 0.0);
  const auto one = terminal_proximity_curve(s, {500.0}, 1.0, cfg);
  const auto two = terminal_proximity_curve(s, {500.0}, 2.0, cfg);
  CHECK(two[0].probability <= one[0].probability);
  CHECK(one[0].r == doctest::Approx(huge[0].r));
  CHECK(one[0].rate_ratio > 0.0);
}

TEST_CASE("mc_cell_probability limits") {
  const Scenario s = with_parameter(small_reference(), "sigma", 1e-8);
  const MinLqgPolicy pol = MinLqgPolicy::build(s.population.classes[0], s.destinations,
                                               constant_path(s.grid, scalar(0.3)));
  const CellProbability in = mc_cell_probability(pol, 1, 0.0, scalar(5.0), 500, 3);
  CHECK(in.value == 1.0);
  // too late to cross the boundary
  CHECK(pol.cell_probability(0, 1.95, scalar(15.0)).value == 0.0);
  const CellProbability out = mc_cell_probability(pol, 0, 1.95, scalar(15.0), 500, 3);
  CHECK(out.value == 0.0);
  // noisy case stays a frequency
  const Scenario n = small_reference();
  const MinLqgPolicy np = MinLqgPolicy::build(n.population.classes[0], n.destinations,
                                              constant_path(n.grid, scalar(0.3)));
  const CellProbability c = mc_cell_probability(np, 0, 1.8, scalar(7.5), 2000, 5);
  CHECK(c.value >= 0.0);
  CHECK(c.value <= 1.0);
  CHECK(c.std_error > 0.0);
}
