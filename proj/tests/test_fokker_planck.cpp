#include "minlqg/fokker_planck.hpp"

#include "support.hpp"

#include <doctest.h>

#include <numbers>

using namespace minlqg;
using namespace minlqg::test;

namespace {

double gaussian_pdf(double x, double var) {
  return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

double l1_error(const std::vector<double>& p, const SpatialGrid& g, double var) {
  double err = 0.0;
  for (int i = 0; i < g.nodes; ++i) err += std::abs(p[i] - gaussian_pdf(g.x(i), var));
  return err * g.dx();
}

double total_mass(const std::vector<double>& p, const SpatialGrid& g) {
  double m = 0.0;
  for (double v : p) m += v;
  return m * g.dx();
}

const DriftField kNoDrift = [](std::size_t, std::span<const double>, std::span<double> mu) {
  std::fill(mu.begin(), mu.end(), 0.0);
};

}  // namespace

TEST_CASE("initial density is normalized and centred") {
  const SpatialGrid g{-10.0, 10.0, 801};
  const InitialDistribution gauss(GaussianInitial{scalar(0.3), Matrix::Constant(1, 1, 1.0)});
  const std::vector<double> p = initial_density(gauss, g);
  CHECK(total_mass(p, g) == doctest::Approx(1.0).epsilon(1e-12));
  double mean = 0.0;
  for (int i = 0; i < g.nodes; ++i) mean += g.x(i) * p[i] * g.dx();
  CHECK(mean == doctest::Approx(0.3).epsilon(1e-6));

  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(1.0, 0.5);
  EmpiricalInitial e;
  for (int i = 0; i < 5000; ++i) e.samples.push_back(scalar(n(rng)));
  const std::vector<double> q = initial_density(InitialDistribution(e), g);
  CHECK(total_mass(q, g) == doctest::Approx(1.0).epsilon(1e-12));
  for (double v : q) CHECK(v >= 0.0);
  // smoothed histogram of N(1, 0.25) is close to the true density
  double err = 0.0;
  for (int i = 0; i < g.nodes; ++i) err += std::abs(q[i] - gaussian_pdf(g.x(i) - 1.0, 0.25)) * g.dx();
  CHECK(err < 0.1);
}

TEST_CASE("pure diffusion matches the heat kernel") {
  const double sigma = 1.5;
  const double s0 = 1.0;
  const double T = 2.0;
  const SpatialGrid g{-20.0, 20.0, 1601};
  const InitialDistribution init(GaussianInitial{scalar(0.0), Matrix::Constant(1, 1, s0 * s0)});
  FpOptions opts{g, {1.0}};
  const DensityField d = solve_fokker_planck(kNoDrift, 0.5 * sigma * sigma, init, TimeGrid(T, 4000), opts);
  const double err_T = l1_error(d.terminal, g, s0 * s0 + sigma * sigma * T);
  const double err_mid = l1_error(d.snapshots[0], g, s0 * s0 + sigma * sigma * 1.0);
  MESSAGE("L1 at T = " << err_T << ", at t=1: " << err_mid);
  CHECK(err_T < 1e-3);
  CHECK(err_mid < 1e-3);
  CHECK(std::abs(d.mass.back() - 1.0) < 1e-12);
  CHECK(std::abs(d.mean.back()) < 1e-10);
}

TEST_CASE("constant drift translates the density") {
  const SpatialGrid g{-15.0, 15.0, 1201};
  const InitialDistribution init(GaussianInitial{scalar(-2.0), Matrix::Constant(1, 1, 1.0)});
  const DriftField shift = [](std::size_t, std::span<const double>, std::span<double> mu) {
    std::fill(mu.begin(), mu.end(), 2.0);
  };
  const DensityField d = solve_fokker_planck(shift, 0.5, init, TimeGrid(2.0, 2000), FpOptions{g});
  CHECK(d.mean.back() == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(d.mean[1000] == doctest::Approx(0.0).scale(1.0).epsilon(2e-3));
}

TEST_CASE("zero-flux walls conserve mass and keep the density nonnegative") {
  // strong outward drift piles mass against the walls
  const SpatialGrid g{-5.0, 5.0, 201};
  const InitialDistribution init(GaussianInitial{scalar(0.0), Matrix::Constant(1, 1, 1.0)});
  const DriftField out = [](std::size_t, std::span<const double> x, std::span<double> mu) {
    for (std::size_t i = 0; i < x.size(); ++i) mu[i] = 3.0 * x[i];
  };
  const DensityField d = solve_fokker_planck(out, 0.1, init, TimeGrid(3.0, 300), FpOptions{g});
  for (double m : d.mass) CHECK(std::abs(m - 1.0) < 1e-10);
  for (double v : d.terminal) CHECK(v >= 0.0);
  CHECK(d.terminal_mass(-INFINITY, 0.0) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("reference scenario: mass, bimodality and clipping") {
  const Scenario s = reference_scenario();
  const MinLqgPolicy pol = MinLqgPolicy::build(s.population.classes[0], s.destinations,
                                               constant_path(s.grid, scalar(0.3)));
  FpOptions opts{s.default_fp_grid(), {0.0, 1.0, 2.0}};
  const DensityField d = solve_fokker_planck(pol, s.initial, opts);
  CHECK(std::abs(d.mass.back() - 1.0) < 1e-3);
  CHECK(d.max_clipped < 1e-8);
  for (const auto& snap : d.snapshots) {
    for (double v : snap) CHECK(v >= 0.0);
  }
  CHECK(d.snapshot_times == std::vector<double>{0.0, 1.0, 2.0});

  // one local maximum on each side of the boundary, close to each destination
  const SpatialGrid& g = d.grid;
  double left_peak = 0.0, right_peak = 0.0, left_x = 0.0, right_x = 0.0;
  for (int i = 0; i < g.nodes; ++i) {
    const double x = g.x(i);
    if (x < 0.0 && d.terminal[i] > left_peak) left_peak = d.terminal[i], left_x = x;
    if (x > 0.0 && d.terminal[i] > right_peak) right_peak = d.terminal[i], right_x = x;
  }
  MESSAGE("modes at " << left_x << " and " << right_x);
  CHECK(std::abs(left_x + 10.0) < 1.0);
  CHECK(std::abs(right_x - 10.0) < 1.0);
  const double mid = d.terminal[static_cast<std::size_t>((0.0 - g.lo) / g.dx())];
  CHECK(mid < 0.01 * std::min(left_peak, right_peak));
  CHECK(d.terminal_mass(-INFINITY, 0.0) + d.terminal_mass(0.0, INFINITY) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("mass drift aborts with refinement advice") {
  const SpatialGrid g{-5.0, 5.0, 101};
  const InitialDistribution init(GaussianInitial{scalar(0.0), Matrix::Constant(1, 1, 1.0)});
  FpOptions opts{g};
  opts.mass_tolerance = 1e-3;
  // a density centred outside the domain loses most of its mass on discretization
  const InitialDistribution outside(GaussianInitial{scalar(30.0), Matrix::Constant(1, 1, 0.01)});
  CHECK_THROWS(solve_fokker_planck(kNoDrift, 0.5, outside, TimeGrid(1.0, 10), opts));
  CHECK_NOTHROW(solve_fokker_planck(kNoDrift, 0.5, init, TimeGrid(1.0, 10), opts));
}

TEST_CASE("observer sees every time node") {
  const SpatialGrid g{-10.0, 10.0, 201};
  const InitialDistribution init(GaussianInitial{scalar(1.0), Matrix::Constant(1, 1, 1.0)});
  FpOptions opts{g};
  std::vector<std::size_t> seen;
  std::vector<double> first;
  opts.observer = [&](std::size_t k, std::span<const double> p) {
    seen.push_back(k);
    double m = 0.0;
    for (int i = 0; i < g.nodes; ++i) m += g.x(i) * p[static_cast<std::size_t>(i)] * g.dx();
    first.push_back(m);
  };
  const DensityField d = solve_fokker_planck(kNoDrift, 0.5, init, TimeGrid(1.0, 20), opts);
  REQUIRE(seen.size() == 21);
  for (std::size_t k = 0; k < seen.size(); ++k) {
    CHECK(seen[k] == k);
    CHECK(first[k] == doctest::Approx(d.mean[k]));
  }
}

TEST_CASE("mass_between weights partial cells") {
  const SpatialGrid g{0.0, 4.0, 5};
  const std::vector<double> p{0.25, 0.25, 0.25, 0.25, 0.25};
  CHECK(mass_between(p, g, 0.0, 4.0) == doctest::Approx(1.0));
  CHECK(mass_between(p, g, 0.0, 2.0) == doctest::Approx(0.5));
  CHECK(mass_between(p, g, 1.0, 1.5) == doctest::Approx(0.125));
}
