#include "minlqg/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace minlqg {

namespace {

double gaussian_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

double total_mass(std::span<const double> p, double dx) {
  double s = 0.0;
  for (double v : p) s += v;
  return s * dx;
}

double first_moment(std::span<const double> p, const SpatialGrid& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += g.x(static_cast<int>(i)) * p[i];
  return s * g.dx();
}

}  // namespace

double mass_between(std::span<const double> p, const SpatialGrid& grid, double lo, double hi) {
  const double dx = grid.dx();
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double c = grid.x(static_cast<int>(i));
    const double a = std::max(lo, c - 0.5 * dx);
    const double b = std::min(hi, c + 0.5 * dx);
    if (b > a) s += p[i] * (b - a);
  }
  return s;
}

double DensityField::terminal_mass(double lo, double hi) const {
  return mass_between(terminal, grid, lo, hi);
}

std::vector<double> initial_density(const InitialDistribution& init, const SpatialGrid& grid) {
  if (init.dim() != 1) throw ValidationError("Fokker-Planck solver requires a scalar state");
  std::vector<double> p(static_cast<std::size_t>(grid.nodes), 0.0);
  if (init.is_gaussian()) {
    const double m = init.gaussian().mean(0);
    const double v = init.gaussian().cov(0, 0);
    for (int i = 0; i < grid.nodes; ++i) p[i] = gaussian_pdf(grid.x(i), m, v);
  } else {
    const auto& samples = init.empirical().samples;
    const double sd = std::sqrt(init.covariance()(0, 0));
    double h = 1.06 * sd * std::pow(static_cast<double>(samples.size()), -0.2);
    h = std::max(h, 2.0 * grid.dx());
    for (const auto& s : samples) {
      for (int i = 0; i < grid.nodes; ++i) p[i] += gaussian_pdf(grid.x(i), s(0), h * h);
    }
  }
  const double mass = total_mass(p, grid.dx());
  if (!(mass > 0.0)) throw ValidationError("initial law has no mass on the Fokker-Planck domain");
  for (double& v : p) v /= mass;
  return p;
}

DensityField solve_fokker_planck(const DriftField& drift, double diffusion,
                                 const InitialDistribution& init, const TimeGrid& time_grid,
                                 const FpOptions& opts) {
  const SpatialGrid& g = opts.grid;
  if (g.nodes < 3 || !(g.hi > g.lo)) throw ValidationError("invalid Fokker-Planck spatial grid");
  const auto nx = static_cast<std::size_t>(g.nodes);
  const double dx = g.dx();
  const double dt = time_grid.dt();
  const std::size_t n_steps = static_cast<std::size_t>(time_grid.n_steps());

  DensityField out;
  out.grid = g;
  out.time_grid = time_grid;
  out.snapshot_times = opts.snapshot_times;
  out.snapshots.resize(opts.snapshot_times.size());

  std::vector<std::size_t> snap_nodes;
  for (double t : opts.snapshot_times) {
    const double r = std::clamp(t / dt, 0.0, static_cast<double>(n_steps));
    snap_nodes.push_back(static_cast<std::size_t>(std::lround(r)));
  }
  auto record = [&](std::size_t k, const std::vector<double>& p) {
    for (std::size_t s = 0; s < snap_nodes.size(); ++s) {
      if (snap_nodes[s] == k) out.snapshots[s] = p;
    }
    out.mean.push_back(first_moment(p, g));
    out.mass.push_back(total_mass(p, dx));
    if (opts.observer) opts.observer(k, p);
  };

  std::vector<double> p = initial_density(init, g);
  std::vector<double> x(nx), mu(nx), face(nx - 1);
  std::vector<double> lower(nx), diag(nx), upper(nx);
  for (std::size_t i = 0; i < nx; ++i) x[i] = g.x(static_cast<int>(i));
  record(0, p);

  const double d = diffusion / (dx * dx);
  for (std::size_t k = 0; k < n_steps; ++k) {
    const std::size_t node = std::min(k + 1, n_steps - 1);
    drift(node, x, mu);
    for (std::size_t i = 0; i + 1 < nx; ++i) face[i] = 0.5 * (mu[i] + mu[i + 1]);

    // flux through face i+1/2: F = a+ p_i - a- p_{i+1} - D (p_{i+1} - p_i) / dx
    std::fill(lower.begin(), lower.end(), 0.0);
    std::fill(upper.begin(), upper.end(), 0.0);
    for (std::size_t i = 0; i < nx; ++i) diag[i] = 1.0;
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      const double ap = std::max(face[i], 0.0) / dx;
      const double am = std::max(-face[i], 0.0) / dx;
      // outflow from cell i, inflow to cell i+1
      diag[i] += dt * (ap + d);
      upper[i] -= dt * (am + d);
      diag[i + 1] += dt * (am + d);
      lower[i + 1] -= dt * (ap + d);
    }
    solve_tridiagonal(lower, diag, upper, p);

    double clipped = 0.0;
    for (double& v : p) {
      if (v < 0.0) {
        clipped -= v;
        v = 0.0;
      }
    }
    out.max_clipped = std::max(out.max_clipped, clipped * dx);
    record(k + 1, p);
    const double mass = out.mass.back();
    if (!std::isfinite(mass) || std::abs(mass - 1.0) > opts.mass_tolerance) {
      std::ostringstream os;
      os << "Fokker-Planck mass drifted to " << mass << " at t=" << time_grid.time(k + 1)
         << "; refine the spatial grid or widen the domain";
      throw NumericalError(os.str());
    }
  }
  out.terminal = std::move(p);
  return out;
}

DensityField solve_fokker_planck(const MinLqgPolicy& policy, const InitialDistribution& init,
                                 const FpOptions& opts) {
  const double s = policy.params().sigma(0, 0);
  const Exec exec = opts.exec;
  DriftField field = [&](std::size_t k, std::span<const double> x, std::span<double> mu) {
    drift_field(policy, policy.node(k), x, mu, exec);
  };
  return solve_fokker_planck(field, 0.5 * s * s, init, policy.grid(), opts);
}

}  // namespace minlqg
