#pragma once

#include "minlqg/meanfield.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace minlqg {

struct SimulationConfig {
  int n_agents = 10000;
  std::uint64_t seed = 7;
  /// Euler-Maruyama steps per time-grid step.
  int substeps = 1;
  /// Normals summed (and rescaled) into each Euler-Maruyama increment. A
  /// run with substeps = s, noise_refinement = 1 sees the same Brownian
  /// path as one with substeps = 1, noise_refinement = s.
  int noise_refinement = 1;
  /// Number of leading agents whose full paths are kept.
  int recorded_paths = 10;
  Exec exec = Exec::Parallel;
};

/// Independent Gaussian stream of one agent. Streams are keyed by
/// (seed, agent) and consumed in step order, so the increment of a given
/// agent at a given step never depends on how agents are scheduled.
class AgentStream {
 public:
  AgentStream(std::uint64_t seed, std::uint64_t agent);
  double normal() { return normal_(engine_); }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// Agents per reduction block. Block sums are combined in block order, so
/// averages do not depend on the thread count.
inline constexpr std::size_t kReductionBlock = 256;

struct TrajectoryEnsemble {
  TimeGrid grid{1.0, 1};
  std::vector<std::size_t> class_index;
  std::vector<Vector> terminal;
  std::vector<std::size_t> terminal_cell;
  /// [class][node]
  std::vector<std::vector<Vector>> class_mean;
  /// Mean over all agents at every node.
  std::vector<Vector> mean;
  /// Full paths of the first `recorded_paths` agents, [agent][node].
  std::vector<std::vector<Vector>> paths;

  std::size_t size() const { return terminal.size(); }
};

/// Largest-remainder split of n agents over the class weights; agents are
/// assigned to classes in contiguous index ranges.
std::vector<std::size_t> allocate_classes(std::span<const double> weights, int n);

/// Euler-Maruyama under one policy per class. Agent i uses AgentStream(seed, i).
TrajectoryEnsemble simulate_policies(const std::vector<MinLqgPolicy>& policies,
                                     std::span<const double> weights, const DestinationSet& dest,
                                     const InitialDistribution& init, const SimulationConfig& cfg);

/// Simulates the population best-responding to the mean path of Lambda.
TrajectoryEnsemble simulate_population(const MeanFieldSolver& solver, const Cdm& lambda,
                                       const SimulationConfig& cfg);

/// Per-class terminal cell frequencies.
Cdm empirical_cdm(const TrajectoryEnsemble& ens, std::size_t n_classes, std::size_t n_dest);

/// sup_t |mean_N(t) - xbar(t)| / (1 + |xbar|_inf).
double mean_path_deviation(const TrajectoryEnsemble& ens, const VectorSeries& xbar);

struct NashRow {
  int N = 0;
  double epsilon = 0.0;
  double std_error = 0.0;
  int replications = 0;
  double cost_equilibrium = 0.0;
  double cost_best_response = 0.0;
  bool warning = false;
};

struct NashOptions {
  int replications = 20;
  /// Vector states only: paths of the deviating agent per replication,
  /// shared by both controls.
  int agent_paths = 64;
  std::uint64_t seed = 11;
  Exec exec = Exec::Parallel;
};

/// Gap between agent 0's cost under u* and under its best response to the
/// estimated mean m of the other N-1 agents. Since x - xbar_N equals
/// (N-1)/N (x - m), the best response tracks m with Q scaled by
/// ((N-1)/N)^2. Agent 0 is independent of the others, so the variance of
/// their realized mean adds the same constant to both expected costs; both
/// are evaluated against m itself. m averages the simulated means over the
/// replications. Scalar states price each control by quadrature against its
/// own Fokker-Planck density, with a leave-one-replication-out jackknife
/// for the standard error. Vector states fall back to sampled paths.
std::vector<NashRow> estimate_epsilon_nash(const MeanFieldSolver& solver, const Cdm& lambda,
                                           const std::vector<int>& N_values,
                                           const NashOptions& opts = {});

struct ProximityRow {
  double M = 0.0;
  double r = 0.0;  // fixed point used for this M
  double probability = 0.0;
  double std_error = 0.0;
  /// probability / (log M / M)
  double rate_ratio = 0.0;
};

/// P(min_j |x(T) - p_j| > epsilon) at the bisection fixed point of each M.
std::vector<ProximityRow> terminal_proximity_curve(const Scenario& scenario,
                                                   const std::vector<double>& M_values,
                                                   double epsilon, const SimulationConfig& cfg);

/// Euler-Maruyama estimate of g_j(t,x) under the pure feedback u^(j).
CellProbability mc_cell_probability(const MinLqgPolicy& policy, std::size_t j, double t,
                                    const Vector& x, int n_paths, std::uint64_t seed,
                                    int substeps = 4, Exec exec = Exec::Parallel);

}  // namespace minlqg
