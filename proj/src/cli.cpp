#include "minlqg/cli.hpp"

#include "minlqg/mc.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#ifndef MINLQG_VERSION
#define MINLQG_VERSION "0.0.0"
#endif

namespace minlqg {

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

namespace {

std::string num(double v) { return fmt::format("{:.10g}", v); }

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) { row(header); }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }
  void row(const std::vector<double>& cells) {
    std::vector<std::string> s;
    for (double v : cells) s.push_back(num(v));
    row(s);
  }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

struct Options {
  std::string config;
  std::string out = "minlqg_out";
  std::uint64_t seed = 7;
  int threads = 0;
  double tol = 1e-3;
  std::optional<double> r;
  std::string xbar_csv;
  std::string at;
  std::string snapshots;
  bool all = false;
  std::string param = "Q";
  double from = 0.1;
  double to = 30.0;
  int steps = 30;
  int agents = 10000;
  std::string n_list = "10,100,1000";
  int replications = 20;
  int fig = 1;
};

/// Output directory plus the manifest describing it.
class Outputs {
 public:
  Outputs(const Options& o, std::string command, std::string digest)
      : dir_(o.out), command_(std::move(command)), digest_(std::move(digest)), seed_(o.seed) {}

  void param(const std::string& key, const std::string& value) { params_[key] = value; }

  void write(const std::string& name, const std::string& text) {
    fs::create_directories(dir_);
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + (dir_ / name).string() + "'");
    f << text;
    files_.push_back(name);
  }

  void finish() {
    nlohmann::ordered_json m;
    m["command"] = command_;
    m["config_digest"] = digest_;
    m["parameters"] = params_;
    m["seed"] = seed_;
    m["tool_version"] = MINLQG_VERSION;
    m["outputs"] = files_;
    fs::create_directories(dir_);
    std::ofstream f(dir_ / "manifest.json", std::ios::binary);
    f << m.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  std::string command_;
  std::string digest_;
  std::uint64_t seed_;
  std::map<std::string, std::string> params_;
  std::vector<std::string> files_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct LoadedScenario {
  Scenario scenario;
  std::string digest;
};

LoadedScenario load(const Options& o, bool allow_default) {
  if (o.config.empty()) {
    if (!allow_default) throw ValidationError("--config is required for this command");
    Scenario s = reference_scenario();
    std::string digest = sha256_hex(scenario_to_json(s));
    return {std::move(s), std::move(digest)};
  }
  const std::string text = read_file(o.config);
  return {parse_scenario(text), sha256_hex(text)};
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("cannot parse number '" + item + "' in list '" + s + "'");
    }
  }
  return out;
}

/// Lambda from --r, else the equilibrium (bisection or damped iteration).
Cdm resolve_lambda(const MeanFieldSolver& solver, const Options& o, Outputs& outs) {
  if (o.r) {
    outs.param("r", num(*o.r));
    return Cdm::binary(*o.r);
  }
  if (solver.scenario().scalar_binary()) {
    const double r = bisection_fixed_point(solver, o.tol).r;
    outs.param("r", num(r) + " (bisection)");
    return Cdm::binary(r);
  }
  const Scenario& s = solver.scenario();
  DampedResult d = damped_iteration(
      solver, Cdm::barycenter(static_cast<int>(s.population.size()),
                              static_cast<int>(s.destinations.size())));
  outs.param("lambda", "damped iteration");
  return d.lambda;
}

std::vector<std::string> vector_header(const std::string& prefix, Eigen::Index n) {
  std::vector<std::string> h;
  for (Eigen::Index d = 0; d < n; ++d) h.push_back(fmt::format("{}_{}", prefix, d));
  return h;
}

void append(std::vector<double>& row, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(v(i));
}

VectorSeries read_xbar(const std::string& path, const TimeGrid& grid, int n) {
  std::stringstream ss(read_file(path));
  std::string line;
  std::getline(ss, line);  // header
  std::vector<Vector> values;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const std::vector<double> cells = parse_list(line);
    if (static_cast<int>(cells.size()) != n + 1) {
      throw ValidationError(fmt::format("xbar CSV rows need t plus {} state columns", n));
    }
    values.push_back(Eigen::Map<const Vector>(cells.data() + 1, n));
  }
  if (values.size() != grid.n_nodes()) {
    throw ValidationError(fmt::format("xbar CSV has {} rows but the time grid has {} nodes",
                                      values.size(), grid.n_nodes()));
  }
  return VectorSeries(grid, std::move(values));
}

// ---------------------------------------------------------------- commands

int cmd_validate(const Options& o, std::ostream& out) {
  const std::string text = read_file(o.config);
  Scenario s = parse_scenario_unchecked(text);
  const ValidationReport report = validate_params(s.population, s.destinations, s.grid);
  Outputs outs(o, "validate", sha256_hex(text));
  Csv csv({"class", "eta", "assumption1_mismatch"});
  for (std::size_t c = 0; c < s.population.size(); ++c) {
    const EtaFit fit = fit_eta(s.population.classes[c]);
    csv.row({std::to_string(c), num(fit.eta), num(fit.relative_mismatch)});
  }
  outs.write("validation.csv", csv.text());
  outs.finish();
  if (!report.ok()) throw ValidationError(report.describe());
  out << "ok: " << s.population.size() << " class(es), " << s.destinations.size()
      << " destination(s)\n";
  for (std::size_t c = 0; c < report.eta.size(); ++c) {
    out << "class " << c << ": eta = " << num(report.eta[c]) << '\n';
  }
  return kExitOk;
}

int cmd_solve_riccati(const Options& o, std::ostream& out) {
  auto [scenario, digest] = load(o, false);
  Outputs outs(o, "solve-riccati", digest);
  const MeanFieldSolver solver(scenario);
  const Cdm lambda = o.r ? Cdm::binary(*o.r)
                         : Cdm::barycenter(static_cast<int>(scenario.population.size()),
                                           static_cast<int>(scenario.destinations.size()));
  if (!o.r) outs.param("lambda", "barycenter");
  const MeanFieldPath path = solver.path(lambda);
  const std::vector<MinLqgPolicy> pols = solver.policies(path);
  for (std::size_t c = 0; c < pols.size(); ++c) {
    const auto& pol = pols[c];
    const int n = pol.state_dim();
    std::vector<std::string> header{"t"};
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) header.push_back(fmt::format("pi_{}_{}", a, b));
    }
    for (std::size_t j = 0; j < pol.n_destinations(); ++j) {
      for (const auto& h : vector_header(fmt::format("beta{}", j + 1), n)) header.push_back(h);
    }
    for (std::size_t j = 0; j < pol.n_destinations(); ++j) header.push_back(fmt::format("delta{}", j + 1));
    Csv csv(header);
    const TimeGrid& g = pol.grid();
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
      std::vector<double> row{g.time(i)};
      const Matrix& P = pol.riccati().pi[i];
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) row.push_back(P(a, b));
      }
      for (const auto& beta : pol.offsets().beta) append(row, beta[i]);
      for (const auto& delta : pol.offsets().delta) row.push_back(delta[i]);
      csv.row(row);
    }
    const std::string name = fmt::format("riccati_class{}.csv", c);
    outs.write(name, csv.text());
    out << "Pi(0) of class " << c << ": " << num(pol.riccati().pi[0](0, 0)) << " -> " << name << '\n';
  }
  outs.finish();
  return kExitOk;
}

int cmd_eval_control(const Options& o, std::ostream& out) {
  auto [scenario, digest] = load(o, false);
  Outputs outs(o, "eval-control", digest);
  const MeanFieldSolver solver(scenario);
  const int n = scenario.population.state_dim();
  VectorSeries xbar;
  if (!o.xbar_csv.empty()) {
    xbar = read_xbar(o.xbar_csv, scenario.grid, n);
    outs.param("xbar", o.xbar_csv);
  } else {
    xbar = solver.path(resolve_lambda(solver, o, outs)).xbar;
  }
  const std::vector<double> at = parse_list(o.at);
  if (static_cast<int>(at.size()) != n + 1) {
    throw ValidationError(fmt::format("--at needs t followed by {} state coordinate(s)", n));
  }
  outs.param("at", o.at);
  const double t = at[0];
  const Vector x = Eigen::Map<const Vector>(at.data() + 1, n);
  PolicyOptions popts;
  popts.cell_samples = scenario.cell_samples;
  const MinLqgPolicy pol =
      MinLqgPolicy::build(scenario.population.classes.front(), scenario.destinations, xbar, popts);
  const std::size_t l = pol.n_destinations();

  std::vector<std::string> header{"t"};
  for (const auto& h : vector_header("x", n)) header.push_back(h);
  header.push_back("V");
  for (const auto& h : vector_header("u", pol.control_dim())) header.push_back(h);
  for (std::size_t j = 0; j < l; ++j) header.push_back(fmt::format("g{}", j + 1));
  for (std::size_t j = 0; j < l; ++j) header.push_back(fmt::format("Vtilde{}", j + 1));
  for (std::size_t j = 0; j < l; ++j) header.push_back(fmt::format("Pr{}", j + 1));
  Csv csv(header);
  std::vector<double> row{t};
  append(row, x);
  row.push_back(pol.value(t, x));
  append(row, pol.control(t, x));
  for (std::size_t j = 0; j < l; ++j) row.push_back(pol.cell_probability(j, t, x).value);
  for (std::size_t j = 0; j < l; ++j) row.push_back(pol.risk_adjusted_value(j, t, x));
  append(row, pol.choice_probabilities(t, x));
  csv.row(row);
  outs.write("eval_control.csv", csv.text());
  outs.finish();
  out << csv.text();
  return kExitOk;
}

/// Density, mean path and summary files for one Lambda.
double write_fp(const MeanFieldSolver& solver, const Cdm& lambda, std::vector<double> snapshots,
                Outputs& outs, const std::string& suffix) {
  const Scenario& s = solver.scenario();
  const FEvaluation ev = solver.evaluate(lambda, snapshots);
  const SpatialGrid& g = ev.densities.front().grid;
  std::vector<std::string> header{"x"};
  for (std::size_t c = 0; c < ev.densities.size(); ++c) {
    for (double t : snapshots) {
      header.push_back(ev.densities.size() == 1 ? fmt::format("p_t{}", num(t))
                                                : fmt::format("p{}_t{}", c, num(t)));
    }
  }
  Csv density(header);
  for (int i = 0; i < g.nodes; ++i) {
    std::vector<double> row{g.x(i)};
    for (const auto& d : ev.densities) {
      for (const auto& snap : d.snapshots) row.push_back(snap[static_cast<std::size_t>(i)]);
    }
    density.row(row);
  }
  outs.write("density" + suffix + ".csv", density.text());

  Csv mean({"t", "fp_mean", "tracked_xbar"});
  for (std::size_t i = 0; i < s.grid.n_nodes(); ++i) {
    double m = 0.0;
    for (std::size_t c = 0; c < ev.class_mean.size(); ++c) {
      m += s.population.weights[c] * ev.class_mean[c][i](0);
    }
    mean.row({s.grid.time(i), m, ev.path.xbar[i](0)});
  }
  outs.write("mean_path" + suffix + ".csv", mean.text());

  const double residual = consistency_residual(ev, s.population);
  double clipped = 0.0;
  double mass_error = 0.0;
  for (const auto& d : ev.densities) {
    clipped = std::max(clipped, d.max_clipped);
    mass_error = std::max(mass_error, std::abs(d.mass.back() - 1.0));
  }
  Csv summary({"metric", "value"});
  for (Eigen::Index c = 0; c < lambda.matrix().rows(); ++c) {
    for (Eigen::Index j = 0; j < lambda.matrix().cols(); ++j) {
      summary.row({fmt::format("lambda_{}_{}", c, j + 1), num(lambda(c, j))});
      summary.row({fmt::format("F_{}_{}", c, j + 1), num(ev.f(c, j))});
    }
  }
  summary.row({"consistency_residual", num(residual)});
  summary.row({"terminal_mass_error", num(mass_error)});
  summary.row({"max_clipped_mass", num(clipped)});
  outs.write("summary" + suffix + ".csv", summary.text());
  return residual;
}

std::vector<double> snapshot_times(const Options& o, const Scenario& s) {
  if (o.snapshots.empty()) return {0.0, 0.5 * s.grid.horizon(), s.grid.horizon()};
  return parse_list(o.snapshots);
}

int cmd_solve_fp(const Options& o, std::ostream& out) {
  auto [scenario, digest] = load(o, false);
  if (scenario.population.state_dim() != 1) {
    throw ValidationError("solve-fp requires a scalar state; use simulate for n > 1");
  }
  Outputs outs(o, "solve-fp", digest);
  const MeanFieldSolver solver(scenario);
  const Cdm lambda = resolve_lambda(solver, o, outs);
  const std::vector<double> snaps = snapshot_times(o, scenario);
  outs.param("snapshots", o.snapshots.empty() ? "0,T/2,T" : o.snapshots);
  const double residual = write_fp(solver, lambda, snaps, outs, "");
  outs.finish();
  out << "consistency residual " << num(residual) << '\n';
  return kExitOk;
}

int cmd_find_fixed_point(const Options& o, std::ostream& out) {
  auto [scenario, digest] = load(o, false);
  Outputs outs(o, "find-fixed-point", digest);
  outs.param("tol", num(o.tol));
  outs.param("all", o.all ? "true" : "false");
  const MeanFieldSolver solver(scenario);
  if (scenario.scalar_binary()) {
    std::vector<double> roots;
    if (o.all) {
      roots = find_all_fixed_points(solver, 41, o.tol);
    } else {
      roots.push_back(bisection_fixed_point(solver, o.tol).r);
    }
    Csv csv({"r", "G", "residual", "consistency"});
    for (double r : roots) {
      const FEvaluation ev = solver.evaluate(Cdm::binary(r));
      const double g = ev.f(0, 0);
      csv.row({r, g, std::abs(g - r), consistency_residual(ev, scenario.population)});
    }
    outs.write("fixed_points.csv", csv.text());
    out << csv.text();
  } else {
    const double tol = std::min(o.tol, 1e-4);
    const std::vector<DampedResult> results = damped_multistart(solver, 0.5, tol);
    Csv csv({"solution", "class", "destination", "probability", "residual", "converged"});
    for (std::size_t i = 0; i < results.size(); ++i) {
      const Matrix& m = results[i].lambda.matrix();
      for (Eigen::Index c = 0; c < m.rows(); ++c) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
          csv.row({std::to_string(i), std::to_string(c), std::to_string(j + 1), num(m(c, j)),
                   num(results[i].residual), results[i].converged ? "1" : "0"});
        }
      }
    }
    outs.write("fixed_points.csv", csv.text());
    out << csv.text();
  }
  outs.finish();
  return kExitOk;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + num(v[i]);
  return s;
}

std::string sweep_csv(const Scenario& base, const std::string& param,
                      const std::vector<double>& values, double tol, std::ostream& out) {
  Csv csv({param, "count", "fixed_points"});
  for (double v : values) {
    const MeanFieldSolver solver(with_parameter(base, param, v));
    std::vector<double> roots;
    if (base.scalar_binary()) {
      roots = find_all_fixed_points(solver, 41, tol);
    } else {
      for (const auto& d : damped_multistart(solver)) roots.push_back(d.lambda(0, 0));
    }
    csv.row({num(v), std::to_string(roots.size()), join(roots)});
    out << param << "=" << num(v) << ": " << roots.size() << " fixed point(s) " << join(roots) << '\n';
  }
  return csv.text();
}

int cmd_sweep(const Options& o, std::ostream& out) {
  auto [scenario, digest] = load(o, false);
  if (o.steps < 1) throw ValidationError("--steps must be at least 1");
  Outputs outs(o, "sweep", digest);
  outs.param("param", o.param);
  outs.param("from", num(o.from));
  outs.param("to", num(o.to));
  outs.param("steps", std::to_string(o.steps));
  std::vector<double> values;
  for (int i = 0; i <= o.steps; ++i) values.push_back(o.from + (o.to - o.from) * i / o.steps);
  outs.write("sweep.csv", sweep_csv(scenario, o.param, values, o.tol, out));
  outs.finish();
  return kExitOk;
}

void write_simulation(const MeanFieldSolver& solver, const Cdm& lambda, const Options& o,
                      Outputs& outs, std::ostream& out) {
  const Scenario& s = solver.scenario();
  SimulationConfig cfg;
  cfg.n_agents = o.agents;
  cfg.seed = o.seed;
  const TrajectoryEnsemble ens = simulate_population(solver, lambda, cfg);
  const VectorSeries xbar = solver.path(lambda).xbar;
  const int n = s.population.state_dim();

  std::vector<std::string> header{"t"};
  for (std::size_t a = 0; a < ens.paths.size(); ++a) {
    if (n == 1) {
      header.push_back(fmt::format("agent{}", a));
    } else {
      for (const auto& h : vector_header(fmt::format("agent{}", a), n)) header.push_back(h);
    }
  }
  Csv traj(header);
  for (std::size_t i = 0; i < s.grid.n_nodes(); ++i) {
    std::vector<double> row{s.grid.time(i)};
    for (const auto& p : ens.paths) append(row, p[i]);
    traj.row(row);
  }
  outs.write("trajectories.csv", traj.text());

  std::vector<std::string> mh{"t"};
  for (const auto& h : vector_header("empirical_mean", n)) mh.push_back(h);
  for (const auto& h : vector_header("tracked_xbar", n)) mh.push_back(h);
  Csv mean(mh);
  for (std::size_t i = 0; i < s.grid.n_nodes(); ++i) {
    std::vector<double> row{s.grid.time(i)};
    append(row, ens.mean[i]);
    append(row, xbar[i]);
    mean.row(row);
  }
  outs.write("mean_path_mc.csv", mean.text());

  const Cdm emp = empirical_cdm(ens, s.population.size(), s.destinations.size());
  const double dev = mean_path_deviation(ens, xbar);
  Csv summary({"metric", "value"});
  summary.row({"agents", std::to_string(ens.size())});
  summary.row({"seed", std::to_string(o.seed)});
  for (Eigen::Index c = 0; c < emp.matrix().rows(); ++c) {
    for (Eigen::Index j = 0; j < emp.matrix().cols(); ++j) {
      summary.row({fmt::format("lambda_{}_{}", c, j + 1), num(lambda(c, j))});
      summary.row({fmt::format("empirical_{}_{}", c, j + 1), num(emp(c, j))});
    }
  }
  summary.row({"mean_path_deviation", num(dev)});
  outs.write("summary_mc.csv", summary.text());
  out << "empirical fraction in cell 1: " << num(emp(0, 0)) << ", mean path deviation "
      << num(dev) << '\n';
}

int cmd_simulate(const Options& o, std::ostream& out) {
  auto [scenario, digest] = load(o, false);
  Outputs outs(o, "simulate", digest);
  outs.param("agents", std::to_string(o.agents));
  const MeanFieldSolver solver(scenario);
  const Cdm lambda = resolve_lambda(solver, o, outs);
  write_simulation(solver, lambda, o, outs, out);
  outs.finish();
  return kExitOk;
}

int cmd_check_nash(const Options& o, std::ostream& out) {
  auto [scenario, digest] = load(o, false);
  Outputs outs(o, "check-nash", digest);
  outs.param("N", o.n_list);
  outs.param("replications", std::to_string(o.replications));
  const MeanFieldSolver solver(scenario);
  const Cdm lambda = resolve_lambda(solver, o, outs);
  std::vector<int> Ns;
  for (double v : parse_list(o.n_list)) Ns.push_back(static_cast<int>(v));
  NashOptions nopts;
  nopts.replications = o.replications;
  nopts.seed = o.seed;
  Csv csv({"N", "epsilon", "std_error", "replications", "cost_equilibrium", "cost_best_response",
           "warning"});
  for (const auto& row : estimate_epsilon_nash(solver, lambda, Ns, nopts)) {
    csv.row({std::to_string(row.N), num(row.epsilon), num(row.std_error),
             std::to_string(row.replications), num(row.cost_equilibrium),
             num(row.cost_best_response), row.warning ? "few replications" : ""});
  }
  outs.write("nash.csv", csv.text());
  outs.finish();
  out << csv.text();
  return kExitOk;
}

int cmd_reproduce_figure(const Options& o, std::ostream& out) {
  auto [base, digest] = load(o, true);
  Outputs outs(o, "reproduce-figure", digest);
  outs.param("fig", std::to_string(o.fig));
  if (o.fig == 1) {
    const MeanFieldSolver solver(base);
    const double r = bisection_fixed_point(solver, o.tol).r;
    const Cdm lambda = Cdm::binary(r);
    write_fp(solver, lambda, snapshot_times(o, base), outs, "");
    write_simulation(solver, lambda, o, outs, out);
    out << "fixed point r = " << num(r) << '\n';
  } else if (o.fig == 2 || o.fig == 3) {
    struct Case {
      double Q;
      double sigma;
    };
    const std::vector<Case> cases =
        o.fig == 2 ? std::vector<Case>{{10.0, 1.5}, {20.0, 1.5}} : std::vector<Case>{{20.0, 3.0}, {20.0, 5.0}};
    Csv summary({"Q", "sigma", "r", "consistency"});
    for (const auto& c : cases) {
      const MeanFieldSolver solver(with_parameter(with_parameter(base, "Q", c.Q), "sigma", c.sigma));
      const double r = bisection_fixed_point(solver, o.tol).r;
      const std::string suffix = fmt::format("_Q{}_sigma{}", num(c.Q), num(c.sigma));
      const double res = write_fp(solver, Cdm::binary(r), snapshot_times(o, base), outs, suffix);
      summary.row({c.Q, c.sigma, r, res});
      out << "Q=" << num(c.Q) << " sigma=" << num(c.sigma) << ": r = " << num(r) << '\n';
    }
    outs.write("summary.csv", summary.text());
  } else if (o.fig == 4) {
    const std::vector<double> qs{0.1, 5, 10, 15, 18, 20, 21, 22, 23, 25, 28, 30};
    outs.write("fig4.csv", sweep_csv(base, "Q", qs, o.tol, out));
  } else {
    throw ValidationError("--fig must be 1, 2, 3 or 4");
  }
  outs.finish();
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Min-LQG mean-field game solver", "minlqg"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", o.config, "Scenario JSON file");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--threads", o.threads, "Worker threads (default: MINLQG_THREADS or all cores)");
  app.add_option("--tol", o.tol, "Fixed-point tolerance on r");

  auto* validate = app.add_subcommand("validate", "Check a scenario and derive eta");
  auto* riccati = app.add_subcommand("solve-riccati", "Dump Pi, beta_j and delta_j per class");
  riccati->add_option("--r", o.r, "Left-cell fraction defining the tracked path");
  auto* eval = app.add_subcommand("eval-control", "Evaluate V, u*, g_j, Vtilde_j, Pr_j at one point");
  eval->add_option("--xbar", o.xbar_csv, "Tracked path CSV (t, x...) on the time grid");
  eval->add_option("--r", o.r, "Left-cell fraction defining the tracked path");
  eval->add_option("--at", o.at, "Query point \"t,x1,...\"")->required();
  auto* fp = app.add_subcommand("solve-fp", "Fokker-Planck densities for one Lambda");
  fp->add_option("--r", o.r, "Left-cell fraction (default: the bisection fixed point)");
  fp->add_option("--snapshots", o.snapshots, "Comma-separated snapshot times");
  auto* fixed = app.add_subcommand("find-fixed-point", "Mean-field equilibria");
  fixed->add_flag("--all", o.all, "Return every fixed point (scan + bisection)");
  auto* sweep = app.add_subcommand("sweep", "Fixed points over a parameter range");
  sweep->add_option("--param", o.param, "Q, sigma, M, A, B or R");
  sweep->add_option("--from", o.from);
  sweep->add_option("--to", o.to);
  sweep->add_option("--steps", o.steps, "Number of intervals");
  auto* sim = app.add_subcommand("simulate", "Euler-Maruyama population simulation");
  sim->add_option("--r", o.r, "Left-cell fraction (default: the bisection fixed point)");
  sim->add_option("--agents", o.agents);
  auto* nash = app.add_subcommand("check-nash", "Empirical epsilon-Nash gaps");
  nash->add_option("--N", o.n_list, "Comma-separated population sizes");
  nash->add_option("--r", o.r, "Left-cell fraction (default: the bisection fixed point)");
  nash->add_option("--replications", o.replications);
  auto* figure = app.add_subcommand("reproduce-figure", "Data behind the simulation-study figures");
  figure->add_option("--fig", o.fig, "Figure 1-4")->required();
  figure->add_option("--snapshots", o.snapshots, "Comma-separated snapshot times");
  figure->add_option("--agents", o.agents);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  int threads = o.threads;
  if (threads <= 0) {
    if (const char* env = std::getenv("MINLQG_THREADS")) threads = std::atoi(env);
  }
  set_thread_count(threads);

  try {
    if (validate->parsed()) {
      if (o.config.empty()) throw ValidationError("--config is required for this command");
      return cmd_validate(o, out);
    }
    if (riccati->parsed()) return cmd_solve_riccati(o, out);
    if (eval->parsed()) return cmd_eval_control(o, out);
    if (fp->parsed()) return cmd_solve_fp(o, out);
    if (fixed->parsed()) return cmd_find_fixed_point(o, out);
    if (sweep->parsed()) return cmd_sweep(o, out);
    if (sim->parsed()) return cmd_simulate(o, out);
    if (nash->parsed()) return cmd_check_nash(o, out);
    if (figure->parsed()) return cmd_reproduce_figure(o, out);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace minlqg
