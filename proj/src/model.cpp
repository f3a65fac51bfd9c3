#include "minlqg/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace minlqg {

TimeGrid::TimeGrid(double horizon, int n_steps) : horizon_(horizon), n_steps_(n_steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ValidationError("time grid horizon must be positive and finite");
  }
  if (n_steps < 1) throw ValidationError("time grid needs at least one step");
}

double TimeGrid::time(std::size_t i) const {
  if (i >= n_nodes() - 1) return horizon_;
  return horizon_ * static_cast<double>(i) / n_steps_;
}

std::pair<std::size_t, double> TimeGrid::locate(double t) const {
  if (t <= 0.0) return {0, 0.0};
  if (t >= horizon_) return {static_cast<std::size_t>(n_steps_), 0.0};
  const double s = t / dt();
  auto i = static_cast<std::size_t>(std::floor(s));
  if (i >= static_cast<std::size_t>(n_steps_)) return {static_cast<std::size_t>(n_steps_), 0.0};
  double w = s - static_cast<double>(i);
  // snap to nodes within rounding of the grid arithmetic
  if (w < 1e-9) w = 0.0;
  if (w > 1.0 - 1e-9) return {i + 1, 0.0};
  return {i, w};
}

Matrix AgentClassParams::control_gain() const { return B * R.ldlt().solve(B.transpose()); }

Matrix AgentClassParams::feedback_gain() const { return R.ldlt().solve(B.transpose()); }

EtaFit fit_eta(const AgentClassParams& params) {
  const Matrix gain = params.control_gain();
  const Matrix ss = params.sigma * params.sigma.transpose();
  const double denom = ss.squaredNorm();
  EtaFit fit;
  if (denom == 0.0) {
    fit.relative_mismatch = std::numeric_limits<double>::infinity();
    return fit;
  }
  fit.eta = (gain.array() * ss.array()).sum() / denom;
  const double scale = std::abs(fit.eta) * std::sqrt(denom);
  fit.relative_mismatch = scale > 0.0 ? (gain - fit.eta * ss).norm() / scale
                                      : std::numeric_limits<double>::infinity();
  return fit;
}

DestinationSet::DestinationSet(std::vector<Vector> points, Matrix metric)
    : points_(std::move(points)), metric_(std::move(metric)) {
  if (points_.empty()) throw ValidationError("destination set is empty");
  if (metric_.rows() != metric_.cols()) throw ValidationError("destination metric must be square");
  for (const auto& p : points_) {
    if (p.size() != metric_.rows()) {
      throw ValidationError("destination dimension does not match metric");
    }
  }
  for (std::size_t a = 0; a < points_.size(); ++a) {
    for (std::size_t b = a + 1; b < points_.size(); ++b) {
      if (points_[a] == points_[b]) {
        throw ValidationError("destinations " + std::to_string(a + 1) + " and " +
                              std::to_string(b + 1) + " coincide");
      }
    }
  }
}

std::size_t DestinationSet::nearest(const Vector& x) const {
  if (x.size() != metric_.rows()) throw ValidationError("state dimension mismatch");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < points_.size(); ++j) {
    const Vector d = x - points_[j];
    const double v = d.dot(metric_ * d);
    if (v < best_d) {
      best_d = v;
      best = j;
    }
  }
  return best;
}

std::pair<double, double> DestinationSet::interval(std::size_t j) const {
  if (dim() != 1) throw ValidationError("cell intervals exist only for scalar states");
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double pj = points_[j](0);
  double lo = -inf;
  double hi = inf;
  for (std::size_t k = 0; k < points_.size(); ++k) {
    if (k == j) continue;
    const double mid = 0.5 * (pj + points_[k](0));
    if (points_[k](0) < pj) {
      lo = std::max(lo, mid);
    } else {
      hi = std::min(hi, mid);
    }
  }
  return {lo, hi};
}

double weighted_norm_sq(const Vector& x, const Matrix& W) {
  if (W.rows() != x.size() || W.cols() != x.size()) {
    throw ValidationError("weighted_norm_sq: dimension mismatch");
  }
  return 0.5 * x.dot(W * x);
}

std::size_t nearest_destination(const Vector& x, const DestinationSet& dest) {
  return dest.nearest(x);
}

InitialDistribution::InitialDistribution(GaussianInitial g) : law_(std::move(g)) {
  const auto& gi = std::get<GaussianInitial>(law_);
  if (gi.cov.rows() != gi.mean.size() || gi.cov.cols() != gi.mean.size()) {
    throw ValidationError("initial covariance dimension mismatch");
  }
  if ((gi.cov - gi.cov.transpose()).norm() > 1e-12 * (1.0 + gi.cov.norm())) {
    throw ValidationError("initial covariance not symmetric");
  }
  Eigen::LLT<Matrix> llt(gi.cov);
  if (llt.info() != Eigen::Success) {
    throw ValidationError("initial covariance not positive definite");
  }
}

InitialDistribution::InitialDistribution(EmpiricalInitial e) : law_(std::move(e)) {
  const auto& s = std::get<EmpiricalInitial>(law_).samples;
  if (s.empty()) throw ValidationError("empirical initial law has no samples");
  for (const auto& v : s) {
    if (v.size() != s.front().size()) throw ValidationError("initial samples differ in dimension");
    if (!v.allFinite()) throw ValidationError("initial samples must be finite");
  }
}

int InitialDistribution::dim() const {
  return is_gaussian() ? static_cast<int>(gaussian().mean.size())
                       : static_cast<int>(empirical().samples.front().size());
}

Vector InitialDistribution::mean() const {
  if (is_gaussian()) return gaussian().mean;
  const auto& s = empirical().samples;
  Vector m = Vector::Zero(s.front().size());
  for (const auto& v : s) m += v;
  return m / static_cast<double>(s.size());
}

Matrix InitialDistribution::covariance() const {
  if (is_gaussian()) return gaussian().cov;
  const auto& s = empirical().samples;
  const Vector m = mean();
  Matrix c = Matrix::Zero(m.size(), m.size());
  for (const auto& v : s) c += (v - m) * (v - m).transpose();
  return c / static_cast<double>(std::max<std::size_t>(1, s.size() - 1));
}

std::string ValidationReport::describe() const {
  std::ostringstream os;
  for (const auto& issue : issues) {
    if (issue.class_index) os << "class " << (*issue.class_index + 1) << ": ";
    os << issue.message << '\n';
  }
  return os.str();
}

namespace {

bool is_symmetric(const Matrix& m) {
  return m.rows() == m.cols() && (m - m.transpose()).norm() <= 1e-12 * (1.0 + m.norm());
}

double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void check_class(const AgentClassParams& c, std::size_t s, int n, ValidationReport& report) {
  auto fail = [&](std::string msg) { report.issues.push_back({s, std::move(msg)}); };
  const auto n_rows = static_cast<Eigen::Index>(n);
  bool shapes_ok = true;
  auto shape = [&](const Matrix& m, Eigen::Index r, Eigen::Index cols, const char* name) {
    if (m.rows() != r || m.cols() != cols) {
      fail(std::string(name) + " has shape " + std::to_string(m.rows()) + "x" +
           std::to_string(m.cols()) + ", expected " + std::to_string(r) + "x" +
           std::to_string(cols));
      shapes_ok = false;
    }
  };
  shape(c.A, n_rows, n_rows, "A");
  shape(c.sigma, n_rows, n_rows, "sigma");
  shape(c.Q, n_rows, n_rows, "Q");
  shape(c.M, n_rows, n_rows, "M");
  if (c.B.rows() != n_rows) shape(c.B, n_rows, c.B.cols(), "B");
  shape(c.R, c.B.cols(), c.B.cols(), "R");
  if (!shapes_ok) return;

  const Matrix* all[] = {&c.A, &c.B, &c.sigma, &c.Q, &c.R, &c.M};
  for (const Matrix* m : all) {
    if (!m->allFinite()) {
      fail("non-finite coefficient");
      return;
    }
  }

  if (!is_symmetric(c.R) || min_eigenvalue(c.R) <= 0.0) fail("R not symmetric positive definite");
  if (!is_symmetric(c.M) || min_eigenvalue(c.M) <= 0.0) fail("M not symmetric positive definite");
  if (!is_symmetric(c.Q)) {
    fail("Q not symmetric");
  } else if (min_eigenvalue(c.Q) < -1e-12 * (1.0 + c.Q.norm())) {
    fail("Q not psd");
  }

  Eigen::JacobiSVD<Matrix> svd(c.sigma);
  const auto sv = svd.singularValues();
  const double cond = sv.minCoeff() > 0.0 ? sv.maxCoeff() / sv.minCoeff()
                                          : std::numeric_limits<double>::infinity();
  if (!std::isfinite(cond) || cond > 1e12) {
    fail("sigma not invertible (condition number " + std::to_string(cond) + ")");
    return;
  }
  if (!report.issues.empty() && report.issues.back().class_index == s) return;

  const EtaFit fit = fit_eta(c);
  if (!(fit.eta > 0.0) || !(fit.relative_mismatch <= kNoiseAlignmentTolerance)) {
    std::ostringstream os;
    os << "noise not aligned with control: |B R^-1 B' - eta sigma sigma'|_F / |eta sigma sigma'|_F = "
       << fit.relative_mismatch << " (best eta " << fit.eta << ", tolerance "
       << kNoiseAlignmentTolerance << ")";
    fail(os.str());
    return;
  }
  report.eta[s] = fit.eta;
}

}  // namespace

ValidationReport validate_params(const Population& pop, const DestinationSet& dest,
                                 const TimeGrid& grid) {
  ValidationReport report;
  (void)grid;  // TimeGrid enforces its own invariants at construction
  if (pop.classes.empty()) {
    report.issues.push_back({std::nullopt, "population has no classes"});
    return report;
  }
  report.eta.assign(pop.classes.size(), 0.0);
  if (pop.weights.size() != pop.classes.size()) {
    report.issues.push_back({std::nullopt, "weights count differs from class count"});
  } else {
    double total = 0.0;
    for (std::size_t s = 0; s < pop.weights.size(); ++s) {
      if (!(pop.weights[s] > 0.0)) report.issues.push_back({s, "weight must be positive"});
      total += pop.weights[s];
    }
    if (std::abs(total - 1.0) > 1e-12) {
      report.issues.push_back({std::nullopt, "weights sum to " + std::to_string(total) + ", not 1"});
    }
  }
  const int n = dest.dim();
  for (std::size_t s = 0; s < pop.classes.size(); ++s) {
    if (pop.classes[s].state_dim() != n) {
      report.issues.push_back({s, "state dimension differs from destination dimension"});
      continue;
    }
    check_class(pop.classes[s], s, n, report);
    const Matrix& M = pop.classes[s].M;
    if (M.rows() == dest.metric().rows() && M.cols() == dest.metric().cols()) {
      // cells are shared, so each class metric must induce the same argmin
      const double c = (M.array() * dest.metric().array()).sum() / dest.metric().squaredNorm();
      if (!(c > 0.0) || (M - c * dest.metric()).norm() > 1e-12 * M.norm()) {
        report.issues.push_back({s, "M is not a positive multiple of the destination metric"});
      }
    }
  }
  return report;
}

void require_valid(Population& pop, const DestinationSet& dest, const TimeGrid& grid) {
  const ValidationReport report = validate_params(pop, dest, grid);
  if (!report.ok()) throw ValidationError(report.describe());
  for (std::size_t s = 0; s < pop.classes.size(); ++s) pop.classes[s].eta = report.eta[s];
}

}  // namespace minlqg
