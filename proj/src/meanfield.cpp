#include "minlqg/meanfield.hpp"

#include "minlqg/mc.hpp"
#include "ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace minlqg {

using detail::Direction;

namespace {

Matrix block_diag(const Population& pop, const Matrix AgentClassParams::*field) {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  for (const auto& c : pop.classes) {
    rows += (c.*field).rows();
    cols += (c.*field).cols();
  }
  Matrix out = Matrix::Zero(rows, cols);
  Eigen::Index r = 0;
  Eigen::Index q = 0;
  for (const auto& c : pop.classes) {
    const Matrix& m = c.*field;
    out.block(r, q, m.rows(), m.cols()) = m;
    r += m.rows();
    q += m.cols();
  }
  return out;
}

double condition_number(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  return s(0) / s(s.size() - 1);
}

}  // namespace

AggregateModel AggregateModel::build(const Population& pop) {
  if (pop.classes.empty()) throw ValidationError("population has no classes");
  AggregateModel agg;
  agg.n = pop.state_dim();
  agg.k = static_cast<int>(pop.size());
  agg.A = block_diag(pop, &AgentClassParams::A);
  agg.B = block_diag(pop, &AgentClassParams::B);
  agg.Q = block_diag(pop, &AgentClassParams::Q);
  agg.R = block_diag(pop, &AgentClassParams::R);
  agg.M = block_diag(pop, &AgentClassParams::M);
  agg.sigma = block_diag(pop, &AgentClassParams::sigma);
  const int n = agg.n;
  const int nk = n * agg.k;
  agg.P1 = Matrix::Zero(n, nk);
  for (int s = 0; s < agg.k; ++s) {
    agg.P1.block(0, s * n, n, n) = pop.weights[s] * Matrix::Identity(n, n);
  }
  agg.L = Matrix::Identity(nk, nk);
  for (int s = 0; s < agg.k; ++s) agg.L.block(s * n, 0, n, nk) -= agg.P1;
  return agg;
}

Matrix AggregateModel::control_gain() const { return B * R.ldlt().solve(B.transpose()); }

MatrixSeries solve_aggregate_riccati(const AggregateModel& agg, const TimeGrid& grid) {
  const Matrix S = agg.control_gain();
  const Matrix QL = agg.Q * agg.L;
  auto rhs = [&](double, const Matrix& P) -> Matrix {
    return -agg.A.transpose() * P - P * agg.A + P * S * P - QL;
  };
  auto check = [](Matrix& P, double t) {
    if (!P.allFinite() || P.norm() > kRiccatiBlowUp) {
      std::ostringstream os;
      os << "Assumption 2 violated on this horizon: aggregate Riccati solution blew up at t=" << t;
      throw NumericalError(os.str());
    }
  };
  return MatrixSeries(grid, detail::rk4<Matrix>(grid, agg.M, Direction::Backward, rhs, check));
}

PathBasis solve_path_basis(const AggregateModel& agg, const MatrixSeries& pi) {
  const TimeGrid& grid = pi.grid();
  const Matrix S = agg.control_gain();
  const auto nk = agg.A.rows();
  auto closed_loop = [&](double t) -> Matrix { return agg.A - S * pi.cubic(t); };

  auto r1 = detail::rk4<Matrix>(grid, Matrix::Identity(nk, nk), Direction::Forward,
                                [&](double t, const Matrix& R) -> Matrix {
                                  return closed_loop(t) * R;
                                });
  double worst = 0.0;
  for (const auto& m : r1) worst = std::max(worst, condition_number(m));

  std::vector<Matrix> to_terminal(r1.size());
  if (worst <= kBasisConditionLimit) {
    for (std::size_t i = 0; i < r1.size(); ++i) {
      to_terminal[i] = r1.back() * r1[i].partialPivLu().inverse();
    }
  } else {
    // d/dt R1(T,t) = -R1(T,t) Acl(t)
    to_terminal = detail::rk4<Matrix>(grid, Matrix::Identity(nk, nk), Direction::Backward,
                                      [&](double t, const Matrix& G) -> Matrix {
                                        return -G * closed_loop(t);
                                      });
  }
  MatrixSeries r1_T(grid, std::move(to_terminal));

  auto r2 = detail::rk4<Matrix>(grid, Matrix::Zero(nk, nk), Direction::Forward,
                                [&](double t, const Matrix& R) -> Matrix {
                                  return closed_loop(t) * R + S * r1_T.cubic(t).transpose() * agg.M;
                                });
  return {MatrixSeries(grid, std::move(r1)), MatrixSeries(grid, std::move(r2))};
}

ChoiceDistributionMatrix::ChoiceDistributionMatrix(Matrix lambda) : lambda_(std::move(lambda)) {
  if (lambda_.size() == 0) throw ValidationError("empty choice distribution matrix");
  for (Eigen::Index s = 0; s < lambda_.rows(); ++s) {
    for (Eigen::Index j = 0; j < lambda_.cols(); ++j) {
      const double v = lambda_(s, j);
      if (!(v >= -kRowSumTolerance && v <= 1.0 + kRowSumTolerance)) {
        throw ValidationError("choice distribution entries must lie in [0,1]");
      }
    }
    if (std::abs(lambda_.row(s).sum() - 1.0) > kRowSumTolerance) {
      std::ostringstream os;
      os << "choice distribution row " << s << " sums to " << lambda_.row(s).sum();
      throw ValidationError(os.str());
    }
  }
}

ChoiceDistributionMatrix ChoiceDistributionMatrix::binary(double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw ValidationError("r must lie in [0,1]");
  Matrix m(1, 2);
  m << r, 1.0 - r;
  return ChoiceDistributionMatrix(std::move(m));
}

ChoiceDistributionMatrix ChoiceDistributionMatrix::barycenter(int k, int l) {
  return ChoiceDistributionMatrix(Matrix::Constant(k, l, 1.0 / l));
}

MeanFieldPath mean_path_for_cdm(const AggregateModel& agg, const PathBasis& basis,
                                const Cdm& lambda, const Vector& X0, const DestinationSet& dest) {
  const int n = agg.n;
  if (lambda.classes() != agg.k || lambda.destinations() != static_cast<int>(dest.size())) {
    throw ValidationError("choice distribution shape does not match the scenario");
  }
  Vector target = Vector::Zero(n * agg.k);
  for (int s = 0; s < agg.k; ++s) {
    for (int j = 0; j < lambda.destinations(); ++j) {
      target.segment(s * n, n) += lambda(s, j) * dest.point(j);
    }
  }
  const TimeGrid& grid = basis.r1.grid();
  std::vector<Vector> X(grid.n_nodes());
  std::vector<Vector> x(grid.n_nodes());
  for (std::size_t i = 0; i < X.size(); ++i) {
    X[i] = basis.r1[i] * X0 + basis.r2[i] * target;
    x[i] = agg.P1 * X[i];
  }
  return {VectorSeries(grid, std::move(x)), VectorSeries(grid, std::move(X))};
}

MeanFieldSolver::MeanFieldSolver(Scenario scenario, Exec exec)
    : scenario_(std::move(scenario)), exec_(exec) {
  for (const auto& c : scenario_.population.classes) {
    if (!(c.eta > 0.0)) {
      require_valid(scenario_.population, scenario_.destinations, scenario_.grid);
      break;
    }
  }
  agg_ = AggregateModel::build(scenario_.population);
  pi_ = solve_aggregate_riccati(agg_, scenario_.grid);
  basis_ = solve_path_basis(agg_, pi_);
  x0_ = Vector(agg_.n * agg_.k);
  for (int s = 0; s < agg_.k; ++s) x0_.segment(s * agg_.n, agg_.n) = scenario_.initial.mean();
}

MeanFieldPath MeanFieldSolver::path(const Cdm& lambda) const {
  return mean_path_for_cdm(agg_, basis_, lambda, x0_, scenario_.destinations);
}

std::vector<MinLqgPolicy> MeanFieldSolver::policies(const MeanFieldPath& path) const {
  PolicyOptions opts;
  opts.cell_samples = scenario_.cell_samples;
  std::vector<MinLqgPolicy> out;
  for (const auto& c : scenario_.population.classes) {
    out.push_back(MinLqgPolicy::build(c, scenario_.destinations, path.xbar, opts));
  }
  return out;
}

FpOptions MeanFieldSolver::fp_options(std::vector<double> snapshot_times) const {
  FpOptions o;
  o.grid = scenario_.default_fp_grid();
  o.snapshot_times = std::move(snapshot_times);
  o.exec = exec_;
  return o;
}

FEvaluation MeanFieldSolver::evaluate(const Cdm& lambda, std::vector<double> snapshot_times) const {
  const auto k = static_cast<std::size_t>(agg_.k);
  const auto l = scenario_.destinations.size();
  MeanFieldPath path = this->path(lambda);
  std::vector<MinLqgPolicy> pols = policies(path);
  Matrix f(k, l);
  std::vector<std::vector<Vector>> class_mean(k);
  std::vector<DensityField> densities;

  if (agg_.n == 1) {
    densities.resize(k);
    const FpOptions opts = fp_options(std::move(snapshot_times));
    for_each_index(k, exec_, [&](std::size_t s) {
      densities[s] = solve_fokker_planck(pols[s], scenario_.initial, opts);
    });
    for (std::size_t s = 0; s < k; ++s) {
      const DensityField& d = densities[s];
      const double total = d.terminal_mass(-INFINITY, INFINITY);
      for (std::size_t j = 0; j < l; ++j) {
        auto [lo, hi] = scenario_.destinations.interval(j);
        f(s, j) = d.terminal_mass(lo, hi) / total;
      }
      for (double m : d.mean) class_mean[s].push_back(Vector::Constant(1, m));
    }
  } else {
    SimulationConfig cfg;
    cfg.n_agents = scenario_.ensemble.n_agents;
    cfg.seed = scenario_.ensemble.seed;
    cfg.recorded_paths = 0;
    cfg.exec = exec_;
    TrajectoryEnsemble ens = simulate_policies(pols, scenario_.population.weights,
                                               scenario_.destinations, scenario_.initial, cfg);
    f = empirical_cdm(ens, k, l).matrix();
    class_mean = std::move(ens.class_mean);
  }
  return {Cdm(std::move(f)), std::move(path), std::move(class_mean), std::move(densities)};
}

Cdm MeanFieldSolver::F(const Cdm& lambda) const { return evaluate(lambda).f; }

double MeanFieldSolver::G(double r) const {
  if (!scenario_.scalar_binary()) {
    throw ValidationError("G(r) requires a scalar binary scenario with a single class");
  }
  return F(Cdm::binary(r))(0, 0);
}

Cdm eval_F(const MeanFieldSolver& solver, const Cdm& lambda) { return solver.F(lambda); }

double eval_G(const MeanFieldSolver& solver, double r) { return solver.G(r); }

BisectionResult bisection_fixed_point(const MeanFieldSolver& solver, double tol, int max_iter) {
  BisectionResult out;
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo >= tol && out.iterations < max_iter) {
    const double mid = 0.5 * (lo + hi);
    const double h = solver.G(mid) - mid;
    out.trace.emplace_back(mid, h);
    ++out.iterations;
    if (h > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.r = 0.5 * (lo + hi);
  return out;
}

std::vector<double> find_all_fixed_points(const MeanFieldSolver& solver, int n_scan, double tol) {
  if (n_scan < 2) throw ValidationError("n_scan must be at least 2");
  const auto n = static_cast<std::size_t>(n_scan);
  std::vector<double> r(n), h(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = static_cast<double>(i) / (n_scan - 1);
  for_each_index(n, solver.exec(), [&](std::size_t i) { h[i] = solver.G(r[i]) - r[i]; });

  std::vector<std::pair<double, double>> brackets;
  std::vector<double> roots;
  for (std::size_t i = 0; i < n; ++i) {
    if (h[i] == 0.0) roots.push_back(r[i]);
    if (i + 1 < n && h[i] * h[i + 1] < 0.0) brackets.emplace_back(r[i], r[i + 1]);
  }
  std::vector<double> refined(brackets.size());
  for_each_index(brackets.size(), solver.exec(), [&](std::size_t b) {
    auto [lo, hi] = brackets[b];
    const bool rising = solver.G(lo) - lo < 0.0;
    while (hi - lo >= tol) {
      const double mid = 0.5 * (lo + hi);
      const double hm = solver.G(mid) - mid;
      if ((hm < 0.0) == rising) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    refined[b] = 0.5 * (lo + hi);
  });
  roots.insert(roots.end(), refined.begin(), refined.end());
  std::sort(roots.begin(), roots.end());
  std::vector<double> out;
  for (double x : roots) {
    if (out.empty() || x - out.back() > 2.0 * tol) out.push_back(x);
  }
  return out;
}

DampedResult damped_iteration(const MeanFieldSolver& solver, const Cdm& lambda0, double omega,
                              double tol, int max_iter) {
  if (!(omega > 0.0 && omega <= 1.0)) throw ValidationError("omega must lie in (0,1]");
  Matrix lambda = lambda0.matrix();
  Matrix best = lambda;
  double best_residual = INFINITY;
  DampedResult out{lambda0};
  for (int it = 0; it < max_iter; ++it) {
    const Matrix f = solver.F(Cdm(lambda)).matrix();
    const double residual = (f - lambda).cwiseAbs().maxCoeff();
    if (residual < best_residual) {
      best_residual = residual;
      best = lambda;
    }
    Matrix next = (1.0 - omega) * lambda + omega * f;
    for (Eigen::Index s = 0; s < next.rows(); ++s) next.row(s) /= next.row(s).sum();
    const double change = (next - lambda).cwiseAbs().maxCoeff();
    lambda = std::move(next);
    out.iterations = it + 1;
    if (change < tol) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged) lambda = best;
  out.lambda = Cdm(lambda);
  out.residual = (solver.F(out.lambda).matrix() - lambda).cwiseAbs().maxCoeff();
  if (!out.converged) {
    std::ostringstream os;
    os << "damped iteration did not converge in " << max_iter << " iterations; best residual "
       << out.residual;
    out.warning = os.str();
  } else if (out.residual >= 5.0 * tol) {
    std::ostringstream os;
    os << "converged iterate fails re-verification: |F(L)-L| = " << out.residual;
    out.warning = os.str();
  }
  return out;
}

std::vector<DampedResult> damped_multistart(const MeanFieldSolver& solver, double omega,
                                            double tol, int max_iter) {
  const int k = solver.aggregate().k;
  const int l = static_cast<int>(solver.scenario().destinations.size());
  std::vector<Cdm> starts;
  for (int j = 0; j < l; ++j) {
    Matrix v = Matrix::Zero(k, l);
    v.col(j).setOnes();
    starts.emplace_back(std::move(v));
  }
  starts.push_back(Cdm::barycenter(k, l));
  std::vector<DampedResult> out;
  for (const auto& s : starts) {
    DampedResult r = damped_iteration(solver, s, omega, tol, max_iter);
    const bool seen = std::any_of(out.begin(), out.end(), [&](const DampedResult& o) {
      return (o.lambda.matrix() - r.lambda.matrix()).cwiseAbs().maxCoeff() < 10.0 * tol;
    });
    if (!seen) out.push_back(std::move(r));
  }
  return out;
}

double consistency_residual(const FEvaluation& eval, const Population& pop) {
  const VectorSeries& xbar = eval.path.xbar;
  double sup = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < xbar.size(); ++i) {
    Vector m = Vector::Zero(xbar[i].size());
    for (std::size_t s = 0; s < eval.class_mean.size(); ++s) {
      m += pop.weights[s] * eval.class_mean[s][i];
    }
    sup = std::max(sup, (m - xbar[i]).norm());
    scale = std::max(scale, xbar[i].norm());
  }
  return sup / (1.0 + scale);
}

double consistency_residual(const MeanFieldSolver& solver, const Cdm& lambda) {
  return consistency_residual(solver.evaluate(lambda), solver.scenario().population);
}

std::vector<BoundednessRow> boundedness_sweep(const Scenario& scenario,
                                              const std::vector<double>& M_values) {
  std::vector<BoundednessRow> out;
  for (double M : M_values) {
    MeanFieldSolver solver(with_parameter(scenario, "M", M));
    const int k = solver.aggregate().k;
    const int l = static_cast<int>(scenario.destinations.size());
    std::vector<Cdm> lambdas;
    for (int j = 0; j < l; ++j) {
      Matrix v = Matrix::Zero(k, l);
      v.col(j).setOnes();
      lambdas.emplace_back(std::move(v));
    }
    lambdas.push_back(Cdm::barycenter(k, l));
    BoundednessRow row{M, {}, 0.0};
    const double dt = scenario.grid.dt();
    for (const auto& lam : lambdas) {
      const VectorSeries xbar = solver.path(lam).xbar;
      double integral = 0.0;
      for (std::size_t i = 0; i + 1 < xbar.size(); ++i) {
        integral += 0.5 * dt * (xbar[i].squaredNorm() + xbar[i + 1].squaredNorm());
      }
      row.norms.push_back(std::sqrt(integral));
      row.max_norm = std::max(row.max_norm, row.norms.back());
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace minlqg
