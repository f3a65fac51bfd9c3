#pragma once

#include "minlqg/types.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace minlqg {

/// One agent type: dx = (A x + B u) dt + sigma dw with running cost
/// |x - xbar|_Q^2 + |u|_R^2 and terminal cost min_j |x(T) - p_j|_M^2.
/// Norms follow the half convention |v|_W^2 = v'Wv / 2 throughout.
struct AgentClassParams {
  Matrix A;
  Matrix B;
  Matrix sigma;
  Matrix Q;
  Matrix R;
  Matrix M;
  /// Hopf-Cole scalar with B R^-1 B' = eta sigma sigma'. Filled by
  /// `fit_eta` / `validate_params`; zero means not yet derived.
  double eta = 0.0;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int control_dim() const { return static_cast<int>(B.cols()); }

  /// B R^-1 B'.
  Matrix control_gain() const;
  /// R^-1 B'.
  Matrix feedback_gain() const;
};

/// Least-squares eta for B R^-1 B' ~ eta sigma sigma' together with the
/// relative Frobenius mismatch of the fit.
struct EtaFit {
  double eta = 0.0;
  double relative_mismatch = 0.0;
};
EtaFit fit_eta(const AgentClassParams& params);

inline constexpr double kNoiseAlignmentTolerance = 1e-10;

struct Population {
  std::vector<AgentClassParams> classes;
  std::vector<double> weights;

  std::size_t size() const { return classes.size(); }
  int state_dim() const { return classes.empty() ? 0 : classes.front().state_dim(); }
};

/// Destination points with M-weighted Voronoi cells.
class DestinationSet {
 public:
  DestinationSet(std::vector<Vector> points, Matrix metric);

  std::size_t size() const { return points_.size(); }
  int dim() const { return static_cast<int>(metric_.rows()); }
  const std::vector<Vector>& points() const { return points_; }
  const Vector& point(std::size_t j) const { return points_[j]; }
  const Matrix& metric() const { return metric_; }

  /// Smallest index attaining min_j |x - p_j|_M.
  std::size_t nearest(const Vector& x) const;

  /// For a scalar state: the interval [lo, hi] forming cell j (possibly
  /// unbounded). Boundaries have probability zero under any law with a
  /// density, so open/closed ends are irrelevant for cell masses.
  std::pair<double, double> interval(std::size_t j) const;

 private:
  std::vector<Vector> points_;
  Matrix metric_;
};

/// Half-convention squared weighted norm x'Wx / 2.
double weighted_norm_sq(const Vector& x, const Matrix& W);

std::size_t nearest_destination(const Vector& x, const DestinationSet& dest);

struct GaussianInitial {
  Vector mean;
  Matrix cov;
};
struct EmpiricalInitial {
  std::vector<Vector> samples;
};

class InitialDistribution {
 public:
  explicit InitialDistribution(GaussianInitial g);
  explicit InitialDistribution(EmpiricalInitial e);

  bool is_gaussian() const { return std::holds_alternative<GaussianInitial>(law_); }
  const GaussianInitial& gaussian() const { return std::get<GaussianInitial>(law_); }
  const EmpiricalInitial& empirical() const { return std::get<EmpiricalInitial>(law_); }

  int dim() const;
  Vector mean() const;
  Matrix covariance() const;

 private:
  std::variant<GaussianInitial, EmpiricalInitial> law_;
};

struct ValidationIssue {
  std::optional<std::size_t> class_index;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  /// One entry per class; meaningful only where B R^-1 B' is a multiple of sigma sigma'.
  std::vector<double> eta;

  bool ok() const { return issues.empty(); }
  std::string describe() const;
};

/// Checks every standing assumption and derives eta per class. Does not
/// modify its inputs.
ValidationReport validate_params(const Population& pop, const DestinationSet& dest,
                                 const TimeGrid& grid);

/// Throws ValidationError listing every violation, otherwise writes the
/// derived eta into each class.
void require_valid(Population& pop, const DestinationSet& dest, const TimeGrid& grid);

}  // namespace minlqg
