#pragma once

#include "minlqg/model.hpp"

namespace minlqg {

/// Pi(t) of the single-destination LQG tracking problem on a TimeGrid.
struct RiccatiSolution {
  MatrixSeries pi;
};

/// Backward RK4 of dPi/dt = Pi S Pi - A'Pi - Pi A - Q, Pi(T) = M, with
/// S = B R^-1 B'. Symmetrized every step. Throws NumericalError when
/// |Pi| exceeds 1e12.
RiccatiSolution solve_riccati(const AgentClassParams& params, const TimeGrid& grid);

/// Per-destination beta_j(t) and delta_j(t) so that
/// V_j(t,x) = x'Pi x / 2 + x'beta_j + delta_j.
struct TrackingOffsets {
  std::vector<VectorSeries> beta;
  std::vector<ScalarSeries> delta;
};

TrackingOffsets solve_offsets(const AgentClassParams& params, const RiccatiSolution& riccati,
                              const VectorSeries& xbar, const DestinationSet& dest);

/// Closed-loop transition matrices of x' = (A - S Pi) x and the terminal
/// covariance Sigma_t = int_t^T alpha(T,s) sigma sigma' alpha(T,s)' ds.
struct TransitionKernel {
  MatrixSeries forward;      // alpha(t, 0)
  MatrixSeries to_terminal;  // alpha(T, t)
  MatrixSeries covariance;   // Sigma_t

  /// alpha(t, s) = alpha(t,0) alpha(s,0)^-1.
  Matrix alpha(double t, double s) const;
};

TransitionKernel transition_and_covariance(const AgentClassParams& params,
                                           const RiccatiSolution& riccati, const TimeGrid& grid);

/// int_t^T alpha(T,s) S beta_j(s) ds per destination, so that the terminal
/// state under u^(j) started from (t,x) has mean alpha(T,t) x - shift_j(t).
std::vector<VectorSeries> terminal_mean_shift(const AgentClassParams& params,
                                              const TransitionKernel& kernel,
                                              const TrackingOffsets& offsets);

/// Value and feedback of each single-destination sub-problem.
class LqgSolution {
 public:
  LqgSolution(AgentClassParams params, RiccatiSolution riccati, TrackingOffsets offsets);

  std::size_t destinations() const { return offsets_.beta.size(); }
  double value(std::size_t j, double t, const Vector& x) const;
  Vector control(std::size_t j, double t, const Vector& x) const;

  const AgentClassParams& params() const { return params_; }
  const RiccatiSolution& riccati() const { return riccati_; }
  const TrackingOffsets& offsets() const { return offsets_; }

 private:
  AgentClassParams params_;
  RiccatiSolution riccati_;
  TrackingOffsets offsets_;
  Matrix feedback_;
};

inline constexpr double kRiccatiBlowUp = 1e12;

}  // namespace minlqg
