#include "minlqg/policy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace minlqg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kStackDestinations = 16;

double log_sum_exp(std::span<const double> e, double mx) {
  double acc = 0.0;
  for (double v : e) {
    if (v != kNegInf) acc += std::exp(v - mx);
  }
  return mx + std::log(acc);
}

}  // namespace

double log_normal_cdf(double z) {
  if (z > 0.0) return std::log1p(-0.5 * std::erfc(z / std::numbers::sqrt2));
  if (z > -35.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  // Mills-ratio asymptotic series; relative error below 1e-10 here
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double log_normal_interval(double a, double b) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (!(a < b)) return kNegInf;
  if (a == -inf && b == inf) return 0.0;
  if (a == -inf) return log_normal_cdf(b);
  if (b == inf) return log_normal_cdf(-a);
  if (b <= 0.0) {
    const double lb = log_normal_cdf(b);
    return lb + std::log1p(-std::exp(log_normal_cdf(a) - lb));
  }
  if (a >= 0.0) return log_normal_interval(-b, -a);
  // a < 0 < b: one minus both tails
  return std::log1p(-(std::exp(log_normal_cdf(a)) + std::exp(log_normal_cdf(-b))));
}

MinLqgPolicy::MinLqgPolicy(std::shared_ptr<const Shared> shared, RiccatiSolution riccati,
                           TrackingOffsets offsets, TransitionKernel kernel, VectorSeries xbar,
                           std::vector<PolicyNode> nodes)
    : shared_(std::move(shared)),
      riccati_(std::move(riccati)),
      offsets_(std::move(offsets)),
      kernel_(std::move(kernel)),
      xbar_(std::move(xbar)),
      nodes_(std::move(nodes)) {}

MinLqgPolicy MinLqgPolicy::build(const AgentClassParams& params, const DestinationSet& dest,
                                 const VectorSeries& xbar, const PolicyOptions& opts) {
  if (!(params.eta > 0.0)) {
    throw ValidationError("eta not derived for this class; run validate_params first");
  }
  if (params.state_dim() != dest.dim()) throw ValidationError("state dimension mismatch");
  const TimeGrid& grid = xbar.grid();
  const int n = params.state_dim();

  auto shared = std::make_shared<Shared>(Shared{params, dest, params.control_gain(),
                                                params.feedback_gain(), {}, Matrix()});
  if (n == 1) {
    for (std::size_t j = 0; j < dest.size(); ++j) shared->intervals.push_back(dest.interval(j));
  } else {
    if (opts.cell_samples < 1) throw ValidationError("cell_samples must be positive");
    std::mt19937_64 rng(opts.cell_seed);
    std::normal_distribution<double> normal;
    shared->base_draws.resize(n, opts.cell_samples);
    for (Eigen::Index c = 0; c < shared->base_draws.cols(); ++c) {
      for (Eigen::Index r = 0; r < n; ++r) shared->base_draws(r, c) = normal(rng);
    }
  }

  RiccatiSolution riccati = solve_riccati(params, grid);
  TrackingOffsets offsets = solve_offsets(params, riccati, xbar, dest);
  TransitionKernel kernel = transition_and_covariance(params, riccati, grid);
  const auto shifts = terminal_mean_shift(params, kernel, offsets);

  MinLqgPolicy policy(std::move(shared), std::move(riccati), std::move(offsets),
                      std::move(kernel), xbar, {});
  const std::size_t l = dest.size();
  policy.nodes_.resize(grid.n_nodes());
  for (std::size_t i = 0; i < grid.n_nodes(); ++i) {
    PolicyNode& nd = policy.nodes_[i];
    nd.t = grid.time(i);
    nd.terminal = i + 1 == grid.n_nodes();
    nd.pi = policy.riccati_.pi[i];
    nd.alpha_T = policy.kernel_.to_terminal[i];
    nd.cov = policy.kernel_.covariance[i];
    nd.xbar = xbar[i];
    for (std::size_t j = 0; j < l; ++j) {
      nd.beta.push_back(policy.offsets_.beta[j][i]);
      nd.delta.push_back(policy.offsets_.delta[j][i]);
      nd.shift.push_back(shifts[j][i]);
    }
    policy.finish_node(nd);
  }
  return policy;
}

void MinLqgPolicy::finish_node(PolicyNode& nd) const {
  if (state_dim() == 1) {
    const double c = nd.cov(0, 0);
    nd.degenerate = c < kDegenerateCovariance;
    nd.sd = nd.degenerate ? 0.0 : std::sqrt(c);
    return;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(nd.cov);
  nd.degenerate = es.eigenvalues().minCoeff() < kDegenerateCovariance;
  if (!nd.degenerate) {
    Eigen::LLT<Matrix> llt(nd.cov);
    nd.cov_factor = llt.matrixL();
  }
}

PolicyNode MinLqgPolicy::node_at(double t) const {
  auto [i, w] = grid().locate(t);
  if (w == 0.0) return nodes_[i];
  const PolicyNode& a = nodes_[i];
  const PolicyNode& b = nodes_[i + 1];
  auto lerp = [w](const auto& u, const auto& v) { return ((1.0 - w) * u + w * v).eval(); };
  PolicyNode nd;
  nd.t = t;
  nd.terminal = false;
  nd.pi = lerp(a.pi, b.pi);
  nd.alpha_T = lerp(a.alpha_T, b.alpha_T);
  nd.cov = lerp(a.cov, b.cov);
  nd.xbar = lerp(a.xbar, b.xbar);
  for (std::size_t j = 0; j < a.beta.size(); ++j) {
    nd.beta.push_back(lerp(a.beta[j], b.beta[j]));
    nd.delta.push_back((1.0 - w) * a.delta[j] + w * b.delta[j]);
    nd.shift.push_back(lerp(a.shift[j], b.shift[j]));
  }
  finish_node(nd);
  return nd;
}

double MinLqgPolicy::scalar_log_weights(const PolicyNode& nd, double x,
                                        std::span<double> log_w) const {
  const Shared& sh = *shared_;
  const double eta = sh.params.eta;
  const double pi = nd.pi(0, 0);
  const double alpha = nd.alpha_T(0, 0);
  const std::size_t l = sh.intervals.size();
  double mx = kNegInf;
  for (std::size_t j = 0; j < l; ++j) {
    const double beta = nd.beta[j](0);
    const double vj = 0.5 * pi * x * x + x * beta + nd.delta[j];
    const double mean = alpha * x - nd.shift[j](0);
    double log_g;
    if (nd.degenerate) {
      log_g = sh.dest.nearest(Vector::Constant(1, mean)) == j ? 0.0 : kNegInf;
    } else {
      const auto [lo, hi] = sh.intervals[j];
      log_g = log_normal_interval((lo - mean) / nd.sd, (hi - mean) / nd.sd);
    }
    log_w[j] = log_g == kNegInf ? kNegInf : -eta * vj + log_g;
    mx = std::max(mx, log_w[j]);
  }
  return mx;
}

void MinLqgPolicy::log_cell_probabilities(const PolicyNode& nd, const Vector& x,
                                          std::span<double> out) const {
  const Shared& sh = *shared_;
  const std::size_t l = sh.dest.size();
  if (state_dim() == 1) {
    for (std::size_t j = 0; j < l; ++j) {
      const double mean = nd.alpha_T(0, 0) * x(0) - nd.shift[j](0);
      if (nd.degenerate) {
        out[j] = sh.dest.nearest(Vector::Constant(1, mean)) == j ? 0.0 : kNegInf;
      } else {
        const auto [lo, hi] = sh.intervals[j];
        out[j] = log_normal_interval((lo - mean) / nd.sd, (hi - mean) / nd.sd);
      }
    }
    return;
  }
  for (std::size_t j = 0; j < l; ++j) {
    const Vector mean = nd.alpha_T * x - nd.shift[j];
    if (nd.degenerate) {
      out[j] = sh.dest.nearest(mean) == j ? 0.0 : kNegInf;
      continue;
    }
    const Matrix samples = (nd.cov_factor * sh.base_draws).colwise() + mean;
    Eigen::Index hits = 0;
    for (Eigen::Index c = 0; c < samples.cols(); ++c) {
      if (sh.dest.nearest(samples.col(c)) == j) ++hits;
    }
    out[j] = hits == 0 ? kNegInf
                       : std::log(static_cast<double>(hits) / static_cast<double>(samples.cols()));
  }
}

std::vector<double> MinLqgPolicy::gibbs_exponents(const PolicyNode& nd, const Vector& x) const {
  const std::size_t l = n_destinations();
  std::vector<double> e(l);
  if (state_dim() == 1) {
    scalar_log_weights(nd, x(0), e);
    return e;
  }
  log_cell_probabilities(nd, x, e);
  for (std::size_t j = 0; j < l; ++j) {
    if (e[j] == kNegInf) continue;
    const double vj = 0.5 * x.dot(nd.pi * x) + x.dot(nd.beta[j]) + nd.delta[j];
    e[j] += -eta() * vj;
  }
  return e;
}

CellProbability MinLqgPolicy::cell_probability(const PolicyNode& nd, std::size_t j,
                                               const Vector& x) const {
  std::vector<double> lg(n_destinations());
  log_cell_probabilities(nd, x, lg);
  CellProbability out;
  out.value = lg[j] == kNegInf ? 0.0 : std::exp(lg[j]);
  if (state_dim() > 1 && !nd.degenerate) {
    const double k = static_cast<double>(shared_->base_draws.cols());
    out.std_error = std::sqrt(out.value * (1.0 - out.value) / k);
  }
  return out;
}

CellProbability MinLqgPolicy::cell_probability(std::size_t j, double t, const Vector& x) const {
  return cell_probability(node_at(t), j, x);
}

double MinLqgPolicy::lqg_value(std::size_t j, double t, const Vector& x) const {
  const PolicyNode nd = node_at(t);
  return 0.5 * x.dot(nd.pi * x) + x.dot(nd.beta[j]) + nd.delta[j];
}

Vector MinLqgPolicy::lqg_control(std::size_t j, double t, const Vector& x) const {
  const PolicyNode nd = node_at(t);
  return -shared_->feedback * (nd.pi * x + nd.beta[j]);
}

double MinLqgPolicy::value(const PolicyNode& nd, const Vector& x) const {
  if (nd.terminal) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : destinations().points()) {
      best = std::min(best, weighted_norm_sq(x - p, params().M));
    }
    return best;
  }
  const auto e = gibbs_exponents(nd, x);
  const double mx = *std::max_element(e.begin(), e.end());
  if (mx == kNegInf) {
    throw NumericalError("all cell probabilities vanish at t=" + std::to_string(nd.t));
  }
  return -log_sum_exp(e, mx) / eta();
}

double MinLqgPolicy::value(double t, const Vector& x) const { return value(node_at(t), x); }

Vector MinLqgPolicy::weights(const PolicyNode& nd, const Vector& x) const {
  const std::size_t l = n_destinations();
  Vector w = Vector::Zero(static_cast<Eigen::Index>(l));
  if (nd.terminal) {
    w(static_cast<Eigen::Index>(destinations().nearest(x))) = 1.0;
    return w;
  }
  const auto e = gibbs_exponents(nd, x);
  const double mx = *std::max_element(e.begin(), e.end());
  if (mx == kNegInf) {
    throw NumericalError("all cell probabilities vanish at t=" + std::to_string(nd.t));
  }
  for (std::size_t j = 0; j < l; ++j) {
    w(static_cast<Eigen::Index>(j)) = e[j] == kNegInf ? 0.0 : std::exp(e[j] - mx);
  }
  return w / w.sum();
}

Vector MinLqgPolicy::weights(double t, const Vector& x) const { return weights(node_at(t), x); }

Vector MinLqgPolicy::control(const PolicyNode& nd, const Vector& x) const {
  if (nd.terminal) return Vector::Zero(control_dim());
  const Vector w = weights(nd, x);
  Vector mixed = nd.pi * x;
  for (std::size_t j = 0; j < nd.beta.size(); ++j) mixed += w(static_cast<Eigen::Index>(j)) * nd.beta[j];
  return -shared_->feedback * mixed;
}

Vector MinLqgPolicy::control(double t, const Vector& x) const { return control(node_at(t), x); }

Vector MinLqgPolicy::drift(const PolicyNode& nd, const Vector& x) const {
  return params().A * x + params().B * control(nd, x);
}

double MinLqgPolicy::drift_1d(const PolicyNode& nd, double x) const {
  const Shared& sh = *shared_;
  const double a = sh.params.A(0, 0);
  if (nd.terminal) return a * x;
  const std::size_t l = sh.intervals.size();
  std::array<double, kStackDestinations> stack{};
  std::vector<double> heap;
  std::span<double> e;
  if (l <= kStackDestinations) {
    e = std::span<double>(stack.data(), l);
  } else {
    heap.resize(l);
    e = heap;
  }
  const double mx = scalar_log_weights(nd, x, e);
  if (mx == kNegInf) {
    throw NumericalError("all cell probabilities vanish at t=" + std::to_string(nd.t));
  }
  double total = 0.0;
  double mixed_beta = 0.0;
  for (std::size_t j = 0; j < l; ++j) {
    if (e[j] == kNegInf) continue;
    const double w = std::exp(e[j] - mx);
    total += w;
    mixed_beta += w * nd.beta[j](0);
  }
  return a * x - sh.gain(0, 0) * (nd.pi(0, 0) * x + mixed_beta / total);
}

double MinLqgPolicy::risk_adjusted_value(std::size_t j, double t, const Vector& x) const {
  const PolicyNode nd = node_at(t);
  std::vector<double> lg(n_destinations());
  log_cell_probabilities(nd, x, lg);
  if (lg[j] == kNegInf) return std::numeric_limits<double>::infinity();
  const double vj = 0.5 * x.dot(nd.pi * x) + x.dot(nd.beta[j]) + nd.delta[j];
  return vj - lg[j] / eta();
}

Vector MinLqgPolicy::choice_probabilities(double t, const Vector& x) const {
  const std::size_t l = n_destinations();
  std::vector<double> e(l);
  for (std::size_t j = 0; j < l; ++j) {
    const double v = risk_adjusted_value(j, t, x);
    e[j] = std::isinf(v) ? kNegInf : -eta() * v;
  }
  const double mx = *std::max_element(e.begin(), e.end());
  Vector pr(static_cast<Eigen::Index>(l));
  for (std::size_t j = 0; j < l; ++j) {
    pr(static_cast<Eigen::Index>(j)) = e[j] == kNegInf ? 0.0 : std::exp(e[j] - mx);
  }
  return pr / pr.sum();
}

namespace {

struct Derivatives {
  double value = 0.0;
  double dt = 0.0;
  Vector grad;
  Matrix hess;
};

/// Central differences of f(i, x) in time (over grid nodes) and space.
template <typename F>
Derivatives differentiate(F&& f, std::size_t i, const Vector& x, double dt, double h) {
  const auto n = x.size();
  Derivatives d;
  d.value = f(i, x);
  if (i >= 1) {
    d.dt = (f(i + 1, x) - f(i - 1, x)) / (2.0 * dt);
  } else {
    d.dt = (-3.0 * d.value + 4.0 * f(i + 1, x) - f(i + 2, x)) / (2.0 * dt);
  }
  d.grad.resize(n);
  d.hess.resize(n, n);
  auto shifted = [&](Eigen::Index a, double sa, Eigen::Index b, double sb) {
    Vector y = x;
    y(a) += sa;
    if (b >= 0) y(b) += sb;
    return f(i, y);
  };
  for (Eigen::Index a = 0; a < n; ++a) {
    const double fp = shifted(a, h, -1, 0.0);
    const double fm = shifted(a, -h, -1, 0.0);
    d.grad(a) = (fp - fm) / (2.0 * h);
    d.hess(a, a) = (fp - 2.0 * d.value + fm) / (h * h);
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double v = (shifted(a, h, b, h) - shifted(a, h, b, -h) - shifted(a, -h, b, h) +
                        shifted(a, -h, b, -h)) /
                       (4.0 * h * h);
      d.hess(a, b) = v;
      d.hess(b, a) = v;
    }
  }
  return d;
}

std::size_t snap_index(const TimeGrid& grid, double t, std::size_t lo, std::size_t hi) {
  const auto i = static_cast<std::size_t>(std::llround(std::clamp(t, 0.0, grid.horizon()) / grid.dt()));
  return std::clamp(i, lo, hi);
}

}  // namespace

HjbResidual hjb_residual(const MinLqgPolicy& policy, std::span<const SamplePoint> sample) {
  const TimeGrid& grid = policy.grid();
  const auto& p = policy.params();
  const Matrix S = p.control_gain();
  const Matrix ss = p.sigma * p.sigma.transpose();
  const double eta = policy.eta();
  const double dt = grid.dt();
  const double h = std::sqrt(dt);
  const std::size_t last = grid.n_nodes() - 3;

  HjbResidual out;
  for (const auto& pt : sample) {
    const std::size_t i = snap_index(grid, pt.t, 0, last);
    const Vector& x = pt.x;
    const Vector xb = policy.node(i).xbar;
    const double running = weighted_norm_sq(x - xb, p.Q);

    auto V = [&](std::size_t k, const Vector& y) { return policy.value(policy.node(k), y); };
    const Derivatives dv = differentiate(V, i, x, dt, h);
    const double t_adv = x.dot(p.A.transpose() * dv.grad);
    const double t_quad = 0.5 * dv.grad.dot(S * dv.grad);
    const double t_diff = 0.5 * (ss * dv.hess).trace();
    const double r = dv.dt + t_adv - t_quad + t_diff + running;
    const double scale = std::abs(dv.dt) + std::abs(t_adv) + std::abs(t_quad) +
                         std::abs(t_diff) + std::abs(running) + 1.0;
    out.hjb = std::max(out.hjb, std::abs(r) / scale);

    // psi normalized by its value at the sample point to stay representable
    const double v0 = dv.value;
    auto psi = [&](std::size_t k, const Vector& y) { return std::exp(-eta * (V(k, y) - v0)); };
    const Derivatives dp = differentiate(psi, i, x, dt, h);
    const double q_adv = x.dot(p.A.transpose() * dp.grad);
    const double q_diff = 0.5 * (ss * dp.hess).trace();
    const double q_pot = eta * running * dp.value;
    const double rp = dp.dt + q_adv + q_diff - q_pot;
    const double pscale = std::abs(dp.dt) + std::abs(q_adv) + std::abs(q_diff) +
                          std::abs(q_pot) + eta;
    out.parabolic = std::max(out.parabolic, std::abs(rp) / pscale);
  }
  return out;
}

double kolmogorov_residual(const MinLqgPolicy& policy, std::size_t j,
                           std::span<const SamplePoint> sample) {
  if (policy.state_dim() != 1) {
    throw ValidationError("kolmogorov_residual requires a scalar state");
  }
  const TimeGrid& grid = policy.grid();
  if (grid.n_steps() < 5) throw ValidationError("kolmogorov_residual needs at least 5 steps");
  const auto& p = policy.params();
  const double S = p.control_gain()(0, 0);
  const double a = p.A(0, 0);
  const double diff = 0.5 * p.sigma(0, 0) * p.sigma(0, 0);
  const double dt = grid.dt();
  const std::size_t hi = grid.n_nodes() - 3;

  double worst = 0.0;
  for (const auto& pt : sample) {
    const std::size_t i = snap_index(grid, pt.t, 2, hi);
    const double x = pt.x(0);
    const double h = 1e-3 * (1.0 + std::abs(x));
    auto g = [&](std::size_t k, double y) {
      return policy.cell_probability(policy.node(k), j, Vector::Constant(1, y)).value;
    };
    const double g_t = (-g(i + 2, x) + 8.0 * g(i + 1, x) - 8.0 * g(i - 1, x) + g(i - 2, x)) / (12.0 * dt);
    const double gp2 = g(i, x + 2 * h), gp1 = g(i, x + h), g0 = g(i, x);
    const double gm1 = g(i, x - h), gm2 = g(i, x - 2 * h);
    const double g_x = (-gp2 + 8.0 * gp1 - 8.0 * gm1 + gm2) / (12.0 * h);
    const double g_xx = (-gp2 + 16.0 * gp1 - 30.0 * g0 + 16.0 * gm1 - gm2) / (12.0 * h * h);
    const PolicyNode& nd = policy.node(i);
    const double drift = a * x - S * (nd.pi(0, 0) * x + nd.beta[j](0));
    worst = std::max(worst, std::abs(g_t + drift * g_x + diff * g_xx));
  }
  return worst;
}

}  // namespace minlqg
