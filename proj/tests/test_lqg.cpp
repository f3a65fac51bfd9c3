#include "minlqg/lqg.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace minlqg;
using namespace minlqg::test;

namespace {

double analytic_pi(double M, double T, double t) { return M / (1.0 + M * (T - t)); }

}  // namespace

TEST_CASE("scalar Riccati matches the analytic solution") {
  const AgentClassParams p = scalar_class(0.0, 1.0, 1.0, 1.0, 0.0, 500.0);
  const TimeGrid g(2.0, 2000);
  const RiccatiSolution sol = solve_riccati(p, g);
  CHECK(sol.pi[g.n_nodes() - 1](0, 0) == 500.0);
  CHECK(sol.pi[0](0, 0) == doctest::Approx(0.49950).epsilon(1e-5));
  for (double t : {0.0, 0.5, 1.0, 1.5}) {
    const double exact = analytic_pi(500.0, 2.0, t);
    CHECK(std::abs(sol.pi.linear(t)(0, 0) - exact) / exact < 1e-6);
  }
}

TEST_CASE("Riccati RK4 converges at fourth order") {
  const AgentClassParams p = scalar_class(0.0, 1.0, 1.0, 1.0, 0.0, 5.0);
  double prev = 0.0;
  for (int n : {80, 160, 320}) {
    const RiccatiSolution sol = solve_riccati(p, TimeGrid(2.0, n));
    const double err = std::abs(sol.pi[0](0, 0) - analytic_pi(5.0, 2.0, 0.0));
    if (prev > 0.0) {
      const double order = std::log2(prev / err);
      CHECK(order > 3.7);
      CHECK(order < 4.3);
    }
    prev = err;
  }
}

TEST_CASE("Riccati stays symmetric and blows up loudly") {
  AgentClassParams p;
  p.A = Matrix::Zero(2, 2);
  p.A(0, 1) = 0.3;
  p.B = p.R = p.sigma = Matrix::Identity(2, 2);
  p.Q = Matrix::Identity(2, 2);
  p.M = 2.0 * Matrix::Identity(2, 2);
  const RiccatiSolution sol = solve_riccati(p, TimeGrid(1.0, 100));
  for (const auto& P : sol.pi.values()) {
    CHECK((P - P.transpose()).norm() == 0.0);
    CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(P).eigenvalues().minCoeff() > 0.0);
  }
  // growth like exp(2AT) before the tiny gain S can saturate it
  const AgentClassParams unstable = scalar_class(10.0, 1e-7, 1.0, 1.0, 1.0, 1.0);
  CHECK_THROWS_AS(solve_riccati(unstable, TimeGrid(2.0, 200)), NumericalError);
}

TEST_CASE("reference Riccati agrees with a 10x finer grid") {
  const Scenario s = reference_scenario();
  const auto& p = s.population.classes[0];
  const RiccatiSolution coarse = solve_riccati(p, TimeGrid(2.0, 2000));
  const RiccatiSolution fine = solve_riccati(p, TimeGrid(2.0, 20000));
  const double a = coarse.pi[0](0, 0);
  const double b = fine.pi[0](0, 0);
  CHECK(a > 0.0);
  CHECK(std::abs(a - b) / b < 1e-6);
}

TEST_CASE("tracking offsets: terminal conditions and zero forcing") {
  const Scenario s = reference_scenario(0.1, 1.5, 500.0, 400);
  const auto& p = s.population.classes[0];
  const RiccatiSolution ric = solve_riccati(p, s.grid);
  const TrackingOffsets off = solve_offsets(p, ric, constant_path(s.grid, scalar(0.0)), s.destinations);
  const std::size_t last = s.grid.n_nodes() - 1;
  CHECK(off.beta[0][last](0) == 5000.0);
  CHECK(off.beta[1][last](0) == -5000.0);
  CHECK(off.delta[0][last] == 25000.0);
  CHECK(off.delta[1][last] == 25000.0);

  const DestinationSet origin({scalar(0.0)}, p.M);
  const TrackingOffsets zero = solve_offsets(p, ric, constant_path(s.grid, scalar(0.0)), origin);
  for (const auto& b : zero.beta[0].values()) CHECK(b(0) == 0.0);

  const TimeGrid other(2.0, 100);
  CHECK_THROWS_AS(solve_offsets(p, ric, constant_path(other, scalar(0.0)), s.destinations),
                  ValidationError);
}

TEST_CASE("transition kernel and terminal covariance") {
  const Scenario s = reference_scenario();
  const auto& p = s.population.classes[0];
  const RiccatiSolution ric = solve_riccati(p, s.grid);
  const TransitionKernel k = transition_and_covariance(p, ric, s.grid);
  const std::size_t last = s.grid.n_nodes() - 1;
  CHECK(k.covariance[last](0, 0) == 0.0);
  CHECK(k.to_terminal[last](0, 0) == 1.0);
  CHECK(k.forward[0](0, 0) == 1.0);
  CHECK(k.alpha(0.7, 0.7)(0, 0) == doctest::Approx(1.0));
  // alpha(T,0) two ways
  CHECK(k.forward[last](0, 0) == doctest::Approx(k.to_terminal[0](0, 0)).epsilon(1e-8));
  CHECK(k.covariance[0](0, 0) > 0.0);
  for (std::size_t i = 1; i < s.grid.n_nodes(); ++i) {
    CHECK(k.covariance[i](0, 0) <= k.covariance[i - 1](0, 0));
  }

  const TimeGrid fine(2.0, 20000);
  const TransitionKernel kf = transition_and_covariance(p, solve_riccati(p, fine), fine);
  for (double t : {0.0, 1.0, 1.9}) {
    const double a = k.covariance.linear(t)(0, 0);
    const double b = kf.covariance.linear(t)(0, 0);
    CHECK(std::abs(a - b) / b < 1e-6);
  }
}

TEST_CASE("terminal covariance is psd and Loewner-monotone in 2-D") {
  AgentClassParams p;
  p.A = Matrix::Zero(2, 2);
  p.A(0, 1) = 1.0;
  p.B = Matrix::Identity(2, 2);
  p.R = Matrix::Identity(2, 2);
  p.sigma = 0.5 * Matrix::Identity(2, 2);
  p.Q = Matrix::Identity(2, 2);
  p.M = 10.0 * Matrix::Identity(2, 2);
  const TimeGrid g(1.0, 200);
  const TransitionKernel k = transition_and_covariance(p, solve_riccati(p, g), g);
  for (std::size_t i = 0; i + 1 < g.n_nodes(); i += 7) {
    const Matrix d = k.covariance[i] - k.covariance[i + 1];
    CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(d).eigenvalues().minCoeff() > -1e-14);
    CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(k.covariance[i]).eigenvalues().minCoeff() >= 0.0);
  }
}

TEST_CASE("single-destination value and control") {
  const Scenario s = reference_scenario(0.1, 1.5, 500.0, 400);
  const auto& p = s.population.classes[0];
  const RiccatiSolution ric = solve_riccati(p, s.grid);
  const TrackingOffsets off = solve_offsets(p, ric, constant_path(s.grid, scalar(0.3)), s.destinations);
  const LqgSolution lqg(p, ric, off);
  const double T = s.grid.horizon();
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(lqg.value(j, 0.8, scalar(0.0)) == doctest::Approx(off.delta[j].linear(0.8)));
    CHECK(lqg.control(j, 0.8, scalar(0.0))(0) ==
          doctest::Approx(-0.2 / 5.0 * off.beta[j].linear(0.8)(0)));
    const Vector pj = s.destinations.point(j);
    CHECK(lqg.value(j, T, pj) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(lqg.value(j, T, scalar(3.7)) ==
          doctest::Approx(weighted_norm_sq(scalar(3.7) - pj, p.M)));
  }

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ut(0.0, T);
  std::uniform_real_distribution<double> ux(-15.0, 15.0);
  for (int k = 0; k < 100; ++k) {
    const double t = ut(rng);
    const double x = ux(rng);
    const std::size_t j = k % 2;
    const double h = 1e-5 * (1.0 + std::abs(x));
    const double grad = (lqg.value(j, t, scalar(x + h)) - lqg.value(j, t, scalar(x - h))) / (2 * h);
    const double u = lqg.control(j, t, scalar(x))(0);
    const double expected = -0.2 / 5.0 * grad;
    CHECK(std::abs(u - expected) <= 1e-5 * std::max(1.0, std::abs(u)));
  }
}
