#pragma once

#include "minlqg/config.hpp"
#include "minlqg/kernels.hpp"

#include <functional>
#include <span>
#include <vector>

namespace minlqg {

/// Scalar population density p(t,x) on a uniform spatial grid.
struct DensityField {
  SpatialGrid grid;
  TimeGrid time_grid{1.0, 1};
  std::vector<double> snapshot_times;
  std::vector<std::vector<double>> snapshots;
  std::vector<double> terminal;
  std::vector<double> mean;  // per time node
  std::vector<double> mass;  // per time node
  /// Largest mass removed by clipping negative values in a single step.
  double max_clipped = 0.0;

  /// Terminal mass in [lo, hi]; fractional cells at the ends are counted
  /// by the overlapping length.
  double terminal_mass(double lo, double hi) const;
};

struct FpOptions {
  SpatialGrid grid;
  std::vector<double> snapshot_times;
  Exec exec = Exec::Parallel;
  double mass_tolerance = 1e-3;
  /// Called with (time node, density) after every step, including node 0.
  std::function<void(std::size_t, std::span<const double>)> observer;
};

/// mu(x_i) for all spatial nodes at the policy time node `k`.
using DriftField = std::function<void(std::size_t k, std::span<const double> x, std::span<double> mu)>;

/// Discretized initial density, normalized to unit mass on the grid.
/// Samples are smoothed with a Gaussian kernel (Silverman bandwidth).
std::vector<double> initial_density(const InitialDistribution& init, const SpatialGrid& grid);

/// Backward-Euler finite volumes for p_t = -(mu p)_x + D p_xx with
/// zero-flux walls and upwind advective fluxes. The step t_k -> t_{k+1}
/// uses the drift at node k+1, except the last step, which uses node N-1.
DensityField solve_fokker_planck(const DriftField& drift, double diffusion,
                                 const InitialDistribution& init, const TimeGrid& time_grid,
                                 const FpOptions& opts);

DensityField solve_fokker_planck(const MinLqgPolicy& policy, const InitialDistribution& init,
                                 const FpOptions& opts);

/// Mass of `p` in [lo, hi] with cell-overlap weighting.
double mass_between(std::span<const double> p, const SpatialGrid& grid, double lo, double hi);

}  // namespace minlqg
