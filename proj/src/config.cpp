#include "minlqg/config.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace minlqg {

using nlohmann::json;

bool Scenario::scalar_binary() const {
  return population.size() == 1 && destinations.dim() == 1 && destinations.size() == 2 &&
         population.classes.front().control_dim() == 1;
}

SpatialGrid Scenario::default_fp_grid() const {
  double sigma_max = 0.0;
  for (const auto& c : population.classes) sigma_max = std::max(sigma_max, std::abs(c.sigma(0, 0)));
  const double m0 = initial.mean()(0);
  const double std0 = std::sqrt(initial.covariance()(0, 0));
  double pmin = m0;
  double pmax = m0;
  for (const auto& p : destinations.points()) {
    pmin = std::min(pmin, p(0));
    pmax = std::max(pmax, p(0));
  }
  const double pad = 5.0 * (sigma_max * std::sqrt(grid.horizon()) + std0);
  return {pmin - pad, pmax + pad, fp_nodes};
}

namespace {

Matrix to_matrix(const json& j, const char* name) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) {
    throw ValidationError(std::string(name) + ": expected a nested array or number");
  }
  if (j.front().is_number()) {
    // a flat list is read as a column
    Matrix m(static_cast<Eigen::Index>(j.size()), 1);
    for (std::size_t i = 0; i < j.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = j[i].get<double>();
    return m;
  }
  const auto rows = j.size();
  const auto cols = j.front().size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ValidationError(std::string(name) + ": ragged matrix");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

Vector to_vector(const json& j, const char* name) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array()) throw ValidationError(std::string(name) + ": expected an array or number");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("missing field '") + key + "'");
  return *it;
}

json from_matrix(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json from_vector(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

Scenario parse_scenario_unchecked(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  try {
    Population pop;
    for (const auto& c : field(root, "classes")) {
      AgentClassParams p;
      p.A = to_matrix(field(c, "A"), "A");
      p.B = to_matrix(field(c, "B"), "B");
      p.sigma = to_matrix(field(c, "sigma"), "sigma");
      p.Q = to_matrix(field(c, "Q"), "Q");
      p.R = to_matrix(field(c, "R"), "R");
      p.M = to_matrix(field(c, "M"), "M");
      pop.classes.push_back(std::move(p));
    }
    if (pop.classes.empty()) throw ValidationError("config has no classes");
    if (root.contains("weights")) {
      pop.weights = root["weights"].get<std::vector<double>>();
    } else {
      pop.weights.assign(pop.classes.size(), 1.0 / static_cast<double>(pop.classes.size()));
    }

    std::vector<Vector> points;
    for (const auto& p : field(root, "destinations")) points.push_back(to_vector(p, "destinations"));
    DestinationSet dest(std::move(points), pop.classes.front().M);

    const json& init = field(root, "initial");
    const std::string kind = init.value("kind", "gaussian");
    std::optional<InitialDistribution> initial;
    if (kind == "gaussian") {
      initial.emplace(GaussianInitial{to_vector(field(init, "mean"), "initial.mean"),
                                      to_matrix(field(init, "cov"), "initial.cov")});
    } else if (kind == "samples") {
      EmpiricalInitial e;
      for (const auto& s : field(init, "samples")) e.samples.push_back(to_vector(s, "initial.samples"));
      initial.emplace(std::move(e));
    } else {
      throw ValidationError("unknown initial kind '" + kind + "'");
    }

    TimeGrid grid(field(root, "horizon").get<double>(), field(root, "n_steps").get<int>());
    Scenario s{std::move(pop), std::move(dest), std::move(*initial), grid};
    s.fp_nodes = root.value("fp_nodes", 801);
    s.cell_samples = root.value("cell_samples", 4096);
    if (root.contains("ensemble")) {
      s.ensemble.n_agents = root["ensemble"].value("agents", s.ensemble.n_agents);
      s.ensemble.seed = root["ensemble"].value("seed", s.ensemble.seed);
    }
    if (s.fp_nodes < 3) throw ValidationError("fp_nodes must be at least 3");
    if (s.initial.dim() != s.destinations.dim()) {
      throw ValidationError("initial law dimension differs from state dimension");
    }
    return s;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
}

Scenario parse_scenario(const std::string& json_text) {
  Scenario s = parse_scenario_unchecked(json_text);
  require_valid(s.population, s.destinations, s.grid);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

Scenario reference_scenario(double Q, double sigma, double M, int n_steps) {
  AgentClassParams p;
  p.A = Matrix::Constant(1, 1, 0.1);
  p.B = Matrix::Constant(1, 1, 0.2);
  p.R = Matrix::Constant(1, 1, 5.0);
  p.M = Matrix::Constant(1, 1, M);
  p.Q = Matrix::Constant(1, 1, Q);
  p.sigma = Matrix::Constant(1, 1, sigma);
  Population pop{{p}, {1.0}};
  DestinationSet dest({Vector::Constant(1, -10.0), Vector::Constant(1, 10.0)}, p.M);
  InitialDistribution init(GaussianInitial{Vector::Constant(1, 0.3), Matrix::Constant(1, 1, 1.0)});
  Scenario s{std::move(pop), std::move(dest), std::move(init), TimeGrid(2.0, n_steps)};
  require_valid(s.population, s.destinations, s.grid);
  return s;
}

Scenario with_parameter(const Scenario& s, const std::string& name, double value) {
  Scenario out = s;
  for (auto& c : out.population.classes) {
    const auto n = c.A.rows();
    const auto m = c.B.cols();
    if (name == "Q") {
      c.Q = value * Matrix::Identity(n, n);
    } else if (name == "sigma") {
      c.sigma = value * Matrix::Identity(n, n);
    } else if (name == "M") {
      c.M = value * Matrix::Identity(n, n);
    } else if (name == "A") {
      c.A = value * Matrix::Identity(n, n);
    } else if (name == "B") {
      if (n != m) throw ValidationError("parameter B can only be swept when B is square");
      c.B = value * Matrix::Identity(n, m);
    } else if (name == "R") {
      c.R = value * Matrix::Identity(m, m);
    } else {
      throw ValidationError("unknown sweep parameter '" + name + "'");
    }
  }
  if (name == "M") {
    out.destinations = DestinationSet(s.destinations.points(), out.population.classes.front().M);
  }
  require_valid(out.population, out.destinations, out.grid);
  return out;
}

std::string scenario_to_json(const Scenario& s) {
  json root;
  json classes = json::array();
  for (const auto& c : s.population.classes) {
    classes.push_back({{"A", from_matrix(c.A)},
                       {"B", from_matrix(c.B)},
                       {"sigma", from_matrix(c.sigma)},
                       {"Q", from_matrix(c.Q)},
                       {"R", from_matrix(c.R)},
                       {"M", from_matrix(c.M)}});
  }
  root["classes"] = classes;
  root["weights"] = s.population.weights;
  json dest = json::array();
  for (const auto& p : s.destinations.points()) dest.push_back(from_vector(p));
  root["destinations"] = dest;
  if (s.initial.is_gaussian()) {
    root["initial"] = {{"kind", "gaussian"},
                       {"mean", from_vector(s.initial.gaussian().mean)},
                       {"cov", from_matrix(s.initial.gaussian().cov)}};
  } else {
    json samples = json::array();
    for (const auto& v : s.initial.empirical().samples) samples.push_back(from_vector(v));
    root["initial"] = {{"kind", "samples"}, {"samples", samples}};
  }
  root["horizon"] = s.grid.horizon();
  root["n_steps"] = s.grid.n_steps();
  root["fp_nodes"] = s.fp_nodes;
  root["cell_samples"] = s.cell_samples;
  root["ensemble"] = {{"agents", s.ensemble.n_agents}, {"seed", s.ensemble.seed}};
  return root.dump(2);
}

}  // namespace minlqg
