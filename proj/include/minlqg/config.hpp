#pragma once

#include "minlqg/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace minlqg {

/// Spatial grid for the scalar Fokker-Planck solver. `nodes == 0` in a
/// config means "derive the default domain from the scenario".
struct SpatialGrid {
  double lo = 0.0;
  double hi = 0.0;
  int nodes = 0;

  double dx() const { return (hi - lo) / (nodes - 1); }
  double x(int i) const { return lo + dx() * i; }
};

struct SimulationDefaults {
  int n_agents = 4000;
  std::uint64_t seed = 7;
};

/// Everything a solver pipeline needs: population, destinations, initial
/// law, time grid, and numerical settings for the population-law solvers.
struct Scenario {
  Population population;
  DestinationSet destinations;
  InitialDistribution initial;
  TimeGrid grid;
  int fp_nodes = 801;
  /// Cell-probability samples for n > 1 (ignored for scalar states).
  int cell_samples = 4096;
  /// Ensemble used by the map F when n > 1.
  SimulationDefaults ensemble;

  bool scalar_binary() const;
  SpatialGrid default_fp_grid() const;
};

/// Parses the JSON configuration. Matrices are row-major nested arrays; a
/// bare number is accepted for 1x1 matrices and 1-vectors. Throws
/// ValidationError on malformed input and on any violated model invariant
/// (eta is derived per class on success).
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::filesystem::path& path);

/// Parses without running validate_params so that `validate` can report
/// every violation instead of the first.
Scenario parse_scenario_unchecked(const std::string& json_text);

/// The scalar binary-choice scenario used throughout the simulation study:
/// A=0.1, B=0.2, R=5, M=500, T=2, x(0)~N(0.3,1), destinations -10 and 10.
Scenario reference_scenario(double Q = 0.1, double sigma = 1.5, double M = 500.0,
                            int n_steps = 2000);

/// Copy of `s` with one scalar parameter (Q, sigma, M, A, B or R) set to
/// value * I in every class; M also rescales the destination metric.
/// Re-validates and re-derives eta.
Scenario with_parameter(const Scenario& s, const std::string& name, double value);

/// JSON text for a scenario (round-trips through parse_scenario).
std::string scenario_to_json(const Scenario& s);

}  // namespace minlqg
