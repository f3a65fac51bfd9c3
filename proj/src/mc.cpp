#include "minlqg/mc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace minlqg {

AgentStream::AgentStream(std::uint64_t seed, std::uint64_t agent) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(agent), static_cast<std::uint32_t>(agent >> 32)};
  engine_.seed(seq);
}

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), 0x6e617368u};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

/// Draws x(0) from the initial law.
class InitialSampler {
 public:
  explicit InitialSampler(const InitialDistribution& init) : init_(init) {
    if (init.is_gaussian()) chol_ = init.gaussian().cov.llt().matrixL();
  }

  Vector draw(AgentStream& rng) const {
    if (!init_.is_gaussian()) {
      const auto& s = init_.empirical().samples;
      return s[rng.index(s.size())];
    }
    Vector z(chol_.rows());
    for (Eigen::Index d = 0; d < z.size(); ++d) z(d) = rng.normal();
    return init_.gaussian().mean + chol_ * z;
  }

 private:
  const InitialDistribution& init_;
  Matrix chol_;
};

/// Policy coefficients at every Euler-Maruyama step of one class.
struct StepNodes {
  std::vector<PolicyNode> owned;
  std::vector<const PolicyNode*> at;

  StepNodes(const MinLqgPolicy& policy, int substeps) {
    const TimeGrid& g = policy.grid();
    const auto n_steps = static_cast<std::size_t>(g.n_steps());
    if (substeps == 1) {
      for (std::size_t i = 0; i < n_steps; ++i) at.push_back(&policy.node(i));
      return;
    }
    const double h = g.dt() / substeps;
    owned.reserve(n_steps * substeps);
    for (std::size_t i = 0; i < n_steps; ++i) {
      for (int s = 0; s < substeps; ++s) owned.push_back(policy.node_at(g.time(i) + s * h));
    }
    for (const auto& nd : owned) at.push_back(&nd);
  }
};

[[noreturn]] void diverged(std::size_t agent, std::size_t step) {
  std::ostringstream os;
  os << "Euler-Maruyama path of agent " << agent << " became non-finite at step " << step;
  throw NumericalError(os.str());
}

/// One agent path; calls visit(node_index, x) at every grid node.
template <typename Visit>
Vector simulate_agent(const MinLqgPolicy& policy, const StepNodes& steps, int substeps,
                      int refinement, const Vector& x0, AgentStream& rng, std::size_t agent,
                      Visit&& visit) {
  const TimeGrid& g = policy.grid();
  const double h = g.dt() / substeps;
  const double sqh = std::sqrt(h / refinement);
  auto draw = [&] {
    double z = 0.0;
    for (int r = 0; r < refinement; ++r) z += rng.normal();
    return z;
  };
  const auto n_steps = static_cast<std::size_t>(g.n_steps());
  const Matrix& sigma = policy.params().sigma;
  if (policy.state_dim() == 1) {
    const double s = sigma(0, 0);
    double x = x0(0);
    Vector tmp(1);
    tmp(0) = x;
    visit(0, tmp);
    for (std::size_t i = 0; i < n_steps; ++i) {
      for (int k = 0; k < substeps; ++k) {
        const PolicyNode& nd = *steps.at[i * substeps + k];
        x += policy.drift_1d(nd, x) * h + s * sqh * draw();
      }
      if (!std::isfinite(x)) diverged(agent, (i + 1) * substeps);
      tmp(0) = x;
      visit(i + 1, tmp);
    }
    return tmp;
  }
  Vector x = x0;
  Vector z(x.size());
  visit(0, x);
  for (std::size_t i = 0; i < n_steps; ++i) {
    for (int k = 0; k < substeps; ++k) {
      const PolicyNode& nd = *steps.at[i * substeps + k];
      for (Eigen::Index d = 0; d < z.size(); ++d) z(d) = draw();
      x += policy.drift(nd, x) * h + sqh * (sigma * z);
    }
    if (!x.allFinite()) diverged(agent, (i + 1) * substeps);
    visit(i + 1, x);
  }
  return x;
}

/// Simulates agents [first, classes.size()) with class labels `classes`.
TrajectoryEnsemble run_ensemble(const std::vector<MinLqgPolicy>& policies,
                                const std::vector<std::size_t>& classes, std::size_t first,
                                const DestinationSet& dest, const InitialDistribution& init,
                                const SimulationConfig& cfg) {
  if (cfg.substeps < 1 || cfg.noise_refinement < 1) {
    throw ValidationError("substeps and noise_refinement must be at least 1");
  }
  const TimeGrid& grid = policies.front().grid();
  const std::size_t nodes = grid.n_nodes();
  const std::size_t k = policies.size();
  const auto n = static_cast<std::size_t>(policies.front().state_dim());
  const std::size_t count = classes.size() - first;

  std::vector<StepNodes> steps;
  for (const auto& p : policies) steps.emplace_back(p, cfg.substeps);
  const InitialSampler sampler(init);

  TrajectoryEnsemble ens;
  ens.grid = grid;
  ens.class_index.assign(classes.begin() + static_cast<std::ptrdiff_t>(first), classes.end());
  ens.terminal.resize(count);
  ens.terminal_cell.resize(count);
  const std::size_t recorded =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(cfg.recorded_paths, 0)));
  ens.paths.assign(recorded, std::vector<Vector>(nodes));

  const std::size_t n_blocks = (count + kReductionBlock - 1) / kReductionBlock;
  std::vector<std::vector<double>> block_sums(n_blocks);
  for_each_index(n_blocks, cfg.exec, [&](std::size_t b) {
    std::vector<double>& sums = block_sums[b];
    sums.assign(k * nodes * n, 0.0);
    const std::size_t end = std::min(count, (b + 1) * kReductionBlock);
    for (std::size_t a = b * kReductionBlock; a < end; ++a) {
      const std::size_t agent = first + a;
      const std::size_t c = classes[agent];
      AgentStream rng(cfg.seed, agent);
      const Vector x0 = sampler.draw(rng);
      double* base = sums.data() + c * nodes * n;
      const Vector xT = simulate_agent(policies[c], steps[c], cfg.substeps, cfg.noise_refinement, x0,
                                       rng, agent,
                                       [&](std::size_t i, const Vector& x) {
                                         for (std::size_t d = 0; d < n; ++d) base[i * n + d] += x(d);
                                         if (a < recorded) ens.paths[a][i] = x;
                                       });
      ens.terminal[a] = xT;
      ens.terminal_cell[a] = dest.nearest(xT);
    }
  });

  std::vector<double> total(k * nodes * n, 0.0);
  for (const auto& sums : block_sums) {
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += sums[i];
  }
  std::vector<std::size_t> per_class(k, 0);
  for (std::size_t c : ens.class_index) ++per_class[c];
  ens.class_mean.assign(k, std::vector<Vector>(nodes, Vector::Zero(n)));
  ens.mean.assign(nodes, Vector::Zero(n));
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < nodes; ++i) {
      for (std::size_t d = 0; d < n; ++d) {
        const double s = total[(c * nodes + i) * n + d];
        ens.mean[i](d) += s;
        if (per_class[c] > 0) ens.class_mean[c][i](d) = s / static_cast<double>(per_class[c]);
      }
    }
  }
  for (auto& m : ens.mean) m /= static_cast<double>(std::max<std::size_t>(count, 1));
  return ens;
}

}  // namespace

std::vector<std::size_t> allocate_classes(std::span<const double> weights, int n) {
  if (n < 1) throw ValidationError("population size must be positive");
  const std::size_t k = weights.size();
  std::vector<std::size_t> counts(k);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < k; ++s) {
    const double exact = weights[s] * n;
    counts[s] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[s];
    remainders.emplace_back(exact - std::floor(exact), s);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < static_cast<std::size_t>(n); ++i, ++assigned) {
    ++counts[remainders[i % k].second];
  }
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::size_t s = 0; s < k; ++s) out.insert(out.end(), counts[s], s);
  return out;
}

TrajectoryEnsemble simulate_policies(const std::vector<MinLqgPolicy>& policies,
                                     std::span<const double> weights, const DestinationSet& dest,
                                     const InitialDistribution& init, const SimulationConfig& cfg) {
  if (policies.empty() || policies.size() != weights.size()) {
    throw ValidationError("one policy per class is required");
  }
  return run_ensemble(policies, allocate_classes(weights, cfg.n_agents), 0, dest, init, cfg);
}

TrajectoryEnsemble simulate_population(const MeanFieldSolver& solver, const Cdm& lambda,
                                       const SimulationConfig& cfg) {
  const Scenario& sc = solver.scenario();
  return simulate_policies(solver.policies(solver.path(lambda)), sc.population.weights,
                           sc.destinations, sc.initial, cfg);
}

Cdm empirical_cdm(const TrajectoryEnsemble& ens, std::size_t n_classes, std::size_t n_dest) {
  Matrix counts = Matrix::Zero(static_cast<Eigen::Index>(n_classes),
                               static_cast<Eigen::Index>(n_dest));
  for (std::size_t a = 0; a < ens.size(); ++a) {
    counts(static_cast<Eigen::Index>(ens.class_index[a]),
           static_cast<Eigen::Index>(ens.terminal_cell[a])) += 1.0;
  }
  for (Eigen::Index s = 0; s < counts.rows(); ++s) {
    const double total = counts.row(s).sum();
    if (total == 0.0) {
      std::ostringstream os;
      os << "class " << s << " has no simulated agents";
      throw ValidationError(os.str());
    }
    counts.row(s) /= total;
  }
  return Cdm(std::move(counts));
}

double mean_path_deviation(const TrajectoryEnsemble& ens, const VectorSeries& xbar) {
  if (ens.mean.size() != xbar.size()) throw ValidationError("mean path grids differ");
  double sup = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < xbar.size(); ++i) {
    sup = std::max(sup, (ens.mean[i] - xbar[i]).norm());
    scale = std::max(scale, xbar[i].norm());
  }
  return sup / (1.0 + scale);
}

namespace {

struct CostPath {
  std::vector<Vector> x;  // grid nodes
  std::vector<Vector> u;  // steps
};

CostPath single_agent_path(const MinLqgPolicy& policy, const InitialSampler& sampler,
                           std::uint64_t seed, std::size_t agent) {
  const TimeGrid& g = policy.grid();
  const auto n_steps = static_cast<std::size_t>(g.n_steps());
  const double h = g.dt();
  const double sqh = std::sqrt(h);
  const Matrix& A = policy.params().A;
  const Matrix& B = policy.params().B;
  const Matrix& sigma = policy.params().sigma;
  AgentStream rng(seed, agent);
  CostPath out;
  Vector x = sampler.draw(rng);
  Vector z(x.size());
  out.x.push_back(x);
  for (std::size_t i = 0; i < n_steps; ++i) {
    const Vector u = policy.control(policy.node(i), x);
    for (Eigen::Index d = 0; d < z.size(); ++d) z(d) = rng.normal();
    x += (A * x + B * u) * h + sqh * (sigma * z);
    if (!x.allFinite()) diverged(agent, i + 1);
    out.u.push_back(u);
    out.x.push_back(x);
  }
  return out;
}

double realized_cost(const CostPath& path, const std::vector<Vector>& others_mean, int N,
                     const AgentClassParams& params, const DestinationSet& dest, double dt) {
  const double w = 1.0 / N;
  double J = 0.0;
  for (std::size_t i = 0; i < path.u.size(); ++i) {
    const Vector xbar = w * path.x[i] + (1.0 - w) * others_mean[i];
    J += dt * (weighted_norm_sq(path.x[i] - xbar, params.Q) + weighted_norm_sq(path.u[i], params.R));
  }
  const Vector& xT = path.x.back();
  double terminal = INFINITY;
  for (const auto& p : dest.points()) terminal = std::min(terminal, weighted_norm_sq(xT - p, params.M));
  return J + terminal;
}

/// Per-node moments of one agent's law under a scalar policy, from its
/// Fokker-Planck density. Enough to price the running cost against any
/// target path.
struct CostMoments {
  std::vector<double> ex, ex2, eu2;  // E x, E x^2, E u^2 per node
  double terminal = 0.0;             // E min_j |x(T) - p_j|^2_M
};

CostMoments scalar_cost_moments(const MinLqgPolicy& policy, const InitialDistribution& init,
                                FpOptions opts) {
  const TimeGrid& grid = policy.grid();
  const std::size_t last = static_cast<std::size_t>(grid.n_steps());
  const double a = policy.params().A(0, 0);
  const double b = policy.params().B(0, 0);
  const double M = policy.params().M(0, 0);
  const DestinationSet& dest = policy.destinations();
  CostMoments out;
  out.ex.resize(last + 1);
  out.ex2.resize(last + 1);
  out.eu2.resize(last + 1);
  opts.observer = [&](std::size_t k, std::span<const double> p) {
    const SpatialGrid& g = opts.grid;
    // the step into node k moves with the drift of node min(k, N-1)
    const PolicyNode& node = policy.node(std::min(std::max<std::size_t>(k, 1), last - 1));
    double m1 = 0.0, m2 = 0.0, u2 = 0.0, term = 0.0;
    for (int i = 0; i < g.nodes; ++i) {
      const double x = g.x(i);
      const double w = p[static_cast<std::size_t>(i)];
      const double u = b != 0.0 ? (policy.drift_1d(node, x) - a * x) / b : 0.0;
      m1 += w * x;
      m2 += w * x * x;
      u2 += w * u * u;
      if (k == last) {
        double c = INFINITY;
        for (const auto& pj : dest.points()) c = std::min(c, 0.5 * M * (x - pj(0)) * (x - pj(0)));
        term += w * c;
      }
    }
    out.ex[k] = m1 * g.dx();
    out.ex2[k] = m2 * g.dx();
    out.eu2[k] = u2 * g.dx();
    if (k == last) out.terminal = term * g.dx();
  };
  solve_fokker_planck(policy, init, opts);
  return out;
}

/// Expected cost against the target m with the tracking weight scaled by
/// c^2; right-point rule, matching the implicit step of the density.
double scalar_expected_cost(const CostMoments& mo, const std::vector<Vector>& m, double c,
                            const AgentClassParams& params, double dt) {
  const double q = params.Q(0, 0) * c * c;
  const double r = params.R(0, 0);
  double J = 0.0;
  for (std::size_t k = 1; k < mo.ex.size(); ++k) {
    const double mk = m[k](0);
    J += dt * (0.5 * q * (mo.ex2[k] - 2.0 * mk * mo.ex[k] + mk * mk) + 0.5 * r * mo.eu2[k]);
  }
  return J + mo.terminal;
}

}  // namespace

std::vector<NashRow> estimate_epsilon_nash(const MeanFieldSolver& solver, const Cdm& lambda,
                                           const std::vector<int>& N_values,
                                           const NashOptions& opts) {
  const Scenario& sc = solver.scenario();
  const int R = opts.replications;
  if (R < 2) throw ValidationError("epsilon-Nash estimation needs at least 2 replications");
  if (opts.agent_paths < 1) throw ValidationError("epsilon-Nash estimation needs agent_paths >= 1");
  const std::vector<MinLqgPolicy> policies = solver.policies(solver.path(lambda));
  const TimeGrid& grid = sc.grid;
  const InitialSampler sampler(sc.initial);
  std::vector<NashRow> rows;
  for (int N : N_values) {
    if (N < 2) throw ValidationError("epsilon-Nash estimation needs N >= 2 (agent 1 plus others)");
    const std::vector<std::size_t> classes = allocate_classes(sc.population.weights, N);
    const std::size_t c0 = classes.front();

    std::vector<std::vector<Vector>> others(static_cast<std::size_t>(R));
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r) {
      seeds[r] = derive_seed(opts.seed, static_cast<std::uint64_t>(N), static_cast<std::uint64_t>(r));
      SimulationConfig cfg;
      cfg.seed = seeds[r];
      cfg.recorded_paths = 0;
      cfg.exec = opts.exec;
      others[r] = run_ensemble(policies, classes, 1, sc.destinations, sc.initial, cfg).mean;
    }
    std::vector<Vector> m_hat(grid.n_nodes(), Vector::Zero(sc.population.state_dim()));
    for (const auto& m : others) {
      for (std::size_t i = 0; i < m_hat.size(); ++i) m_hat[i] += m[i] / R;
    }

    const double shrink = static_cast<double>(N - 1) / N;
    const AgentClassParams& params = sc.population.classes[c0];
    AgentClassParams deviator = params;
    deviator.Q *= shrink * shrink;
    PolicyOptions popts;
    popts.cell_samples = sc.cell_samples;
    auto best_response = [&](const std::vector<Vector>& target) {
      return MinLqgPolicy::build(deviator, sc.destinations, VectorSeries(grid, target), popts);
    };

    NashRow row;
    row.N = N;
    row.replications = R;
    row.warning = R < 10;
    if (sc.population.state_dim() == 1) {
      // expected costs by quadrature against the agent's own density;
      // standard error by jackknife over the replications of the others
      const FpOptions fp = solver.fp_options();
      const CostMoments eq = scalar_cost_moments(policies[c0], sc.initial, fp);
      auto gap = [&](const std::vector<Vector>& target, double* j_eq, double* j_br) {
        const CostMoments br = scalar_cost_moments(best_response(target), sc.initial, fp);
        const double a = scalar_expected_cost(eq, target, shrink, params, grid.dt());
        const double b = scalar_expected_cost(br, target, shrink, params, grid.dt());
        if (j_eq) *j_eq = a;
        if (j_br) *j_br = b;
        return a - b;
      };
      row.epsilon = gap(m_hat, &row.cost_equilibrium, &row.cost_best_response);
      std::vector<double> loo(static_cast<std::size_t>(R));
      for_each_index(static_cast<std::size_t>(R), opts.exec, [&](std::size_t r) {
        std::vector<Vector> target(m_hat.size());
        for (std::size_t i = 0; i < m_hat.size(); ++i) target[i] = (R * m_hat[i] - others[r][i]) / (R - 1);
        loo[r] = gap(target, nullptr, nullptr);
      });
      const double centre = std::accumulate(loo.begin(), loo.end(), 0.0) / R;
      double ss = 0.0;
      for (double v : loo) ss += (v - centre) * (v - centre);
      row.std_error = std::sqrt(ss * (R - 1) / R);
    } else {
      const MinLqgPolicy best = best_response(m_hat);
      std::vector<double> j_eq(static_cast<std::size_t>(R)), j_br(static_cast<std::size_t>(R));
      for_each_index(static_cast<std::size_t>(R), opts.exec, [&](std::size_t r) {
        // agent 0 draws from its own key space, disjoint from the others' streams
        const std::uint64_t own = derive_seed(seeds[r], 0, 0);
        for (int k = 0; k < opts.agent_paths; ++k) {
          const auto agent = static_cast<std::size_t>(k);
          const CostPath eq = single_agent_path(policies[c0], sampler, own, agent);
          const CostPath br = single_agent_path(best, sampler, own, agent);
          j_eq[r] += realized_cost(eq, m_hat, N, params, sc.destinations, grid.dt()) / opts.agent_paths;
          j_br[r] += realized_cost(br, m_hat, N, params, sc.destinations, grid.dt()) / opts.agent_paths;
        }
      });
      double mean = 0.0;
      for (int r = 0; r < R; ++r) mean += (j_eq[r] - j_br[r]) / R;
      double var = 0.0;
      for (int r = 0; r < R; ++r) var += std::pow(j_eq[r] - j_br[r] - mean, 2) / (R - 1);
      row.epsilon = mean;
      row.std_error = std::sqrt(var / R);
      row.cost_equilibrium = std::accumulate(j_eq.begin(), j_eq.end(), 0.0) / R;
      row.cost_best_response = std::accumulate(j_br.begin(), j_br.end(), 0.0) / R;
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<ProximityRow> terminal_proximity_curve(const Scenario& scenario,
                                                   const std::vector<double>& M_values,
                                                   double epsilon, const SimulationConfig& cfg) {
  if (!scenario.scalar_binary()) {
    throw ValidationError("terminal_proximity_curve requires a scalar binary scenario");
  }
  std::vector<ProximityRow> rows;
  for (double M : M_values) {
    const MeanFieldSolver solver(with_parameter(scenario, "M", M), cfg.exec);
    const double r = bisection_fixed_point(solver).r;
    const TrajectoryEnsemble ens = simulate_population(solver, Cdm::binary(r), cfg);
    std::size_t far = 0;
    for (const auto& x : ens.terminal) {
      double d = INFINITY;
      for (const auto& p : scenario.destinations.points()) d = std::min(d, (x - p).norm());
      if (d > epsilon) ++far;
    }
    const double n = static_cast<double>(ens.size());
    ProximityRow row;
    row.M = M;
    row.r = r;
    row.probability = static_cast<double>(far) / n;
    row.std_error = std::sqrt(row.probability * (1.0 - row.probability) / n);
    row.rate_ratio = row.probability / (std::log(M) / M);
    rows.push_back(row);
  }
  return rows;
}

CellProbability mc_cell_probability(const MinLqgPolicy& policy, std::size_t j, double t,
                                    const Vector& x, int n_paths, std::uint64_t seed, int substeps,
                                    Exec exec) {
  if (n_paths < 1 || substeps < 1) throw ValidationError("n_paths and substeps must be positive");
  const TimeGrid& g = policy.grid();
  const double T = g.horizon();
  const int steps = std::max(1, static_cast<int>(std::ceil((T - t) / g.dt() * substeps - 1e-9)));
  const double h = (T - t) / steps;
  const double sqh = std::sqrt(h);
  const AgentClassParams& p = policy.params();
  const Matrix S = p.control_gain();
  // drift = Acl(tau) x - S beta_j(tau)
  std::vector<Matrix> acl(static_cast<std::size_t>(steps));
  std::vector<Vector> offset(static_cast<std::size_t>(steps));
  for (int m = 0; m < steps; ++m) {
    const double tau = t + m * h;
    acl[m] = p.A - S * policy.riccati().pi.linear(tau);
    offset[m] = -S * policy.offsets().beta[j].linear(tau);
  }
  const DestinationSet& dest = policy.destinations();
  const auto total = static_cast<std::size_t>(n_paths);
  const std::size_t n_blocks = (total + kReductionBlock - 1) / kReductionBlock;
  std::vector<std::size_t> hits(n_blocks, 0);
  const bool scalar = policy.state_dim() == 1;
  for_each_index(n_blocks, exec, [&](std::size_t b) {
    const std::size_t end = std::min(total, (b + 1) * kReductionBlock);
    for (std::size_t a = b * kReductionBlock; a < end; ++a) {
      AgentStream rng(seed, a);
      if (scalar) {
        const double s = p.sigma(0, 0);
        double y = x(0);
        for (int m = 0; m < steps; ++m) {
          y += (acl[m](0, 0) * y + offset[m](0)) * h + s * sqh * rng.normal();
        }
        if (dest.nearest(Vector::Constant(1, y)) == j) ++hits[b];
      } else {
        Vector y = x;
        Vector z(y.size());
        for (int m = 0; m < steps; ++m) {
          for (Eigen::Index d = 0; d < z.size(); ++d) z(d) = rng.normal();
          y += (acl[m] * y + offset[m]) * h + sqh * (p.sigma * z);
        }
        if (dest.nearest(y) == j) ++hits[b];
      }
    }
  });
  const double prob =
      static_cast<double>(std::accumulate(hits.begin(), hits.end(), std::size_t{0})) / n_paths;
  return {prob, std::sqrt(prob * (1.0 - prob) / n_paths)};
}

}  // namespace minlqg
