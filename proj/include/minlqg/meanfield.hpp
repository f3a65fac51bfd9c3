#pragma once

#include "minlqg/config.hpp"
#include "minlqg/fokker_planck.hpp"
#include "minlqg/kernels.hpp"
#include "minlqg/policy.hpp"

#include <optional>
#include <string>
#include <vector>

namespace minlqg {

/// Block-diagonal stacking of the k classes plus the averaging operators
/// P1 = (alpha' (x) I_n) and L = I - 1_k (x) P1.
struct AggregateModel {
  Matrix A, B, Q, R, M, sigma;
  Matrix P1;
  Matrix L;
  int n = 0;
  int k = 0;

  static AggregateModel build(const Population& pop);
  /// B R^-1 B' of the stacked system.
  Matrix control_gain() const;
};

/// Backward RK4 of dpi/dt = -A'pi - pi A + pi S pi - Q L, pi(T) = M.
/// Throws NumericalError("Assumption 2 violated on this horizon ...") on
/// blow-up.
MatrixSeries solve_aggregate_riccati(const AggregateModel& agg, const TimeGrid& grid);

struct PathBasis {
  MatrixSeries r1;  // R1(t, 0)
  MatrixSeries r2;  // R2(t)
};

/// Conditioning of R1(t,0) above which R1(T,t) is integrated directly.
inline constexpr double kBasisConditionLimit = 1e10;

PathBasis solve_path_basis(const AggregateModel& agg, const MatrixSeries& pi);

/// k x l row-stochastic matrix.
class ChoiceDistributionMatrix {
 public:
  explicit ChoiceDistributionMatrix(Matrix lambda);
  /// (r, 1 - r) for the scalar binary case.
  static ChoiceDistributionMatrix binary(double r);
  static ChoiceDistributionMatrix barycenter(int k, int l);

  const Matrix& matrix() const { return lambda_; }
  double operator()(int s, int j) const { return lambda_(s, j); }
  int classes() const { return static_cast<int>(lambda_.rows()); }
  int destinations() const { return static_cast<int>(lambda_.cols()); }

 private:
  Matrix lambda_;
};
using Cdm = ChoiceDistributionMatrix;

inline constexpr double kRowSumTolerance = 1e-9;

struct MeanFieldPath {
  VectorSeries xbar;  // n-vectors
  VectorSeries Xbar;  // nk-vectors, per-class means
};

/// x(t) = P1 (R1(t,0) X0 + R2(t) (Lambda (x) I_n) p).
MeanFieldPath mean_path_for_cdm(const AggregateModel& agg, const PathBasis& basis,
                                const Cdm& lambda, const Vector& X0, const DestinationSet& dest);

/// Output of one application of the map F.
struct FEvaluation {
  Cdm f;
  MeanFieldPath path;
  /// Per-class mean of the propagated law at every time node.
  std::vector<std::vector<Vector>> class_mean;
  /// Scalar states only: one density per class.
  std::vector<DensityField> densities;
};

/// Caches everything about a scenario that does not depend on Lambda
/// (aggregate Riccati and path basis) and evaluates the map F.
class MeanFieldSolver {
 public:
  explicit MeanFieldSolver(Scenario scenario, Exec exec = Exec::Parallel);

  const Scenario& scenario() const { return scenario_; }
  const AggregateModel& aggregate() const { return agg_; }
  const MatrixSeries& aggregate_riccati() const { return pi_; }
  const PathBasis& basis() const { return basis_; }
  Exec exec() const { return exec_; }
  /// Stacked initial class means.
  const Vector& initial_means() const { return x0_; }

  MeanFieldPath path(const Cdm& lambda) const;
  std::vector<MinLqgPolicy> policies(const MeanFieldPath& path) const;
  FpOptions fp_options(std::vector<double> snapshot_times = {}) const;

  FEvaluation evaluate(const Cdm& lambda, std::vector<double> snapshot_times = {}) const;
  Cdm F(const Cdm& lambda) const;
  /// [F(r, 1-r)]_1 for the scalar binary scenario.
  double G(double r) const;

 private:
  Scenario scenario_;
  Exec exec_;
  AggregateModel agg_;
  MatrixSeries pi_;
  PathBasis basis_;
  Vector x0_;
};

Cdm eval_F(const MeanFieldSolver& solver, const Cdm& lambda);
double eval_G(const MeanFieldSolver& solver, double r);

struct BisectionResult {
  double r = 0.0;
  int iterations = 0;
  std::vector<std::pair<double, double>> trace;  // (r, G(r) - r)
};

BisectionResult bisection_fixed_point(const MeanFieldSolver& solver, double tol = 1e-3,
                                      int max_iter = 25);

/// All roots of G(r) - r found by a uniform scan plus bisection refinement,
/// deduplicated within 2 tol, sorted.
std::vector<double> find_all_fixed_points(const MeanFieldSolver& solver, int n_scan = 41,
                                          double tol = 1e-3);

struct DampedResult {
  Cdm lambda;
  int iterations = 0;
  bool converged = false;
  /// |F(Lambda) - Lambda|_inf at the returned iterate.
  double residual = 0.0;
  std::optional<std::string> warning;
};

DampedResult damped_iteration(const MeanFieldSolver& solver, const Cdm& lambda0,
                              double omega = 0.5, double tol = 1e-4, int max_iter = 200);

/// Damped iteration from every vertex of the simplex product (one
/// destination per class, all classes alike) and the barycenter; distinct
/// limits within 10 tol are merged.
std::vector<DampedResult> damped_multistart(const MeanFieldSolver& solver, double omega = 0.5,
                                            double tol = 1e-4, int max_iter = 200);

/// sup_t |sum_s alpha_s mean_s(t) - xbar(t)| / (1 + |xbar|_inf).
double consistency_residual(const MeanFieldSolver& solver, const Cdm& lambda);
double consistency_residual(const FEvaluation& eval, const Population& pop);

struct BoundednessRow {
  double M = 0.0;
  /// (int_0^T |xbar|^2 dt)^(1/2) per Lambda: vertices first, barycenter last.
  std::vector<double> norms;
  double max_norm = 0.0;
};

std::vector<BoundednessRow> boundedness_sweep(const Scenario& scenario,
                                              const std::vector<double>& M_values);

}  // namespace minlqg
