#pragma once

#include "minlqg/lqg.hpp"

#include <cstdint>
#include <memory>
#include <span>

namespace minlqg {

struct CellProbability {
  double value = 0.0;
  /// Zero for the exact scalar formula; binomial standard error otherwise.
  double std_error = 0.0;
};

struct PolicyOptions {
  /// Samples of the terminal Gaussian used for g_j when n > 1. The draws are
  /// fixed at construction, so g_j is a deterministic function of (t,x).
  int cell_samples = 4096;
  std::uint64_t cell_seed = 0x5eedULL;
};

/// Smallest eigenvalue of Sigma_t below which the terminal law is treated
/// as a point mass.
inline constexpr double kDegenerateCovariance = 1e-12;

/// All time-dependent coefficients of the Min-LQG policy at one instant.
struct PolicyNode {
  double t = 0.0;
  bool terminal = false;
  Matrix pi;
  std::vector<Vector> beta;
  std::vector<double> delta;
  Matrix alpha_T;  // alpha(T, t)
  Matrix cov;      // Sigma_t
  std::vector<Vector> shift;
  Vector xbar;
  bool degenerate = false;
  double sd = 0.0;    // sqrt(Sigma_t) for scalar states
  Matrix cov_factor;  // L with L L' = Sigma_t, n > 1 only
};

/// Best response of one agent class to a deterministic mean path xbar:
/// the Min-LQG value and Gibbs-weighted control built from the
/// single-destination LQG solutions. Immutable once built; every node is
/// precomputed, so concurrent evaluation is safe.
class MinLqgPolicy {
 public:
  static MinLqgPolicy build(const AgentClassParams& params, const DestinationSet& dest,
                            const VectorSeries& xbar, const PolicyOptions& opts = {});

  const AgentClassParams& params() const { return shared_->params; }
  const DestinationSet& destinations() const { return shared_->dest; }
  const TimeGrid& grid() const { return riccati_.pi.grid(); }
  double eta() const { return shared_->params.eta; }
  int state_dim() const { return shared_->params.state_dim(); }
  int control_dim() const { return shared_->params.control_dim(); }
  std::size_t n_destinations() const { return shared_->dest.size(); }

  const RiccatiSolution& riccati() const { return riccati_; }
  const TrackingOffsets& offsets() const { return offsets_; }
  const TransitionKernel& kernel() const { return kernel_; }
  const VectorSeries& xbar() const { return xbar_; }

  const PolicyNode& node(std::size_t i) const { return nodes_[i]; }
  /// Coefficients at an arbitrary time, linearly interpolated between nodes.
  PolicyNode node_at(double t) const;

  double lqg_value(std::size_t j, double t, const Vector& x) const;
  Vector lqg_control(std::size_t j, double t, const Vector& x) const;

  CellProbability cell_probability(std::size_t j, double t, const Vector& x) const;
  CellProbability cell_probability(const PolicyNode& node, std::size_t j, const Vector& x) const;

  double value(double t, const Vector& x) const;
  double value(const PolicyNode& node, const Vector& x) const;
  Vector control(double t, const Vector& x) const;
  Vector control(const PolicyNode& node, const Vector& x) const;
  /// A x + B u*(t,x).
  Vector drift(const PolicyNode& node, const Vector& x) const;
  /// Scalar-state drift without heap allocation; the Fokker-Planck and
  /// Monte Carlo kernels call this in their inner loops.
  double drift_1d(const PolicyNode& node, double x) const;

  /// Gibbs weights w_j of u* = sum_j w_j u^(j); empty terms get weight 0.
  Vector weights(double t, const Vector& x) const;
  Vector weights(const PolicyNode& node, const Vector& x) const;

  /// V_j - log(g_j) / eta; +infinity where g_j = 0.
  double risk_adjusted_value(std::size_t j, double t, const Vector& x) const;
  /// Softmax of -eta * risk-adjusted values (equal to the Gibbs weights).
  Vector choice_probabilities(double t, const Vector& x) const;

 private:
  struct Shared {
    AgentClassParams params;
    DestinationSet dest;
    Matrix gain;      // B R^-1 B'
    Matrix feedback;  // R^-1 B'
    std::vector<std::pair<double, double>> intervals;  // scalar cells
    Matrix base_draws;                                   // n x samples
  };

  MinLqgPolicy(std::shared_ptr<const Shared> shared, RiccatiSolution riccati,
               TrackingOffsets offsets, TransitionKernel kernel, VectorSeries xbar,
               std::vector<PolicyNode> nodes);

  /// log g_j for all j at (node, x); -infinity where g_j = 0.
  void log_cell_probabilities(const PolicyNode& node, const Vector& x, std::span<double> out) const;
  double scalar_log_weights(const PolicyNode& node, double x, std::span<double> log_w) const;
  /// -eta V_j + log g_j per destination.
  std::vector<double> gibbs_exponents(const PolicyNode& node, const Vector& x) const;
  void finish_node(PolicyNode& node) const;

  std::shared_ptr<const Shared> shared_;
  RiccatiSolution riccati_;
  TrackingOffsets offsets_;
  TransitionKernel kernel_;
  VectorSeries xbar_;
  std::vector<PolicyNode> nodes_;
};

/// log Phi(z), accurate deep into the lower tail.
double log_normal_cdf(double z);
/// log(Phi(b) - Phi(a)) for a < b.
double log_normal_interval(double a, double b);

struct SamplePoint {
  double t;
  Vector x;
};

struct HjbResidual {
  double hjb = 0.0;        // relative residual of the HJB equation for V
  double parabolic = 0.0;  // relative residual of the linear PDE for exp(-eta V)
  double max() const { return std::max(hjb, parabolic); }
};

/// Finite-difference residuals of the HJB equation for the Min-LQG value
/// and of the parabolic equation satisfied by psi = exp(-eta V). Each
/// residual is normalized by the sum of magnitudes of the equation's terms.
/// Time steps use the policy grid (t is snapped to the nearest node);
/// spatial steps scale as sqrt(dt), so both errors are O(dt).
HjbResidual hjb_residual(const MinLqgPolicy& policy, std::span<const SamplePoint> sample);

/// Max absolute residual of the backward Kolmogorov equation of g_j under
/// the pure feedback u^(j), with fourth-order stencils. Scalar states only.
double kolmogorov_residual(const MinLqgPolicy& policy, std::size_t j,
                           std::span<const SamplePoint> sample);

}  // namespace minlqg
