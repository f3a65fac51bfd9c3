#include "minlqg/lqg.hpp"

#include "ode.hpp"

#include <sstream>

namespace minlqg {

using detail::Direction;

RiccatiSolution solve_riccati(const AgentClassParams& params, const TimeGrid& grid) {
  const Matrix S = params.control_gain();
  const Matrix& A = params.A;
  const Matrix& Q = params.Q;
  auto rhs = [&](double, const Matrix& P) -> Matrix {
    return P * S * P - A.transpose() * P - P * A - Q;
  };
  auto project = [](Matrix& P, double t) {
    P = 0.5 * (P + P.transpose()).eval();
    if (!P.allFinite() || P.norm() > kRiccatiBlowUp) {
      std::ostringstream os;
      os << "Riccati solution blew up at t=" << t << " (|Pi| > " << kRiccatiBlowUp << ")";
      throw NumericalError(os.str());
    }
  };
  auto values = detail::rk4<Matrix>(grid, params.M, Direction::Backward, rhs, project);
  return {MatrixSeries(grid, std::move(values))};
}

TrackingOffsets solve_offsets(const AgentClassParams& params, const RiccatiSolution& riccati,
                              const VectorSeries& xbar, const DestinationSet& dest) {
  const TimeGrid& grid = riccati.pi.grid();
  if (!(xbar.grid() == grid)) throw ValidationError("mean path and Riccati grids differ");
  const auto n = params.A.rows();
  const Matrix S = params.control_gain();
  const Matrix& A = params.A;
  const Matrix& Q = params.Q;
  const Matrix ss = params.sigma * params.sigma.transpose();

  TrackingOffsets out;
  for (const Vector& p : dest.points()) {
    // state (beta, delta) stacked so both share RK4 stages
    Vector terminal(n + 1);
    terminal.head(n) = -params.M * p;
    terminal(n) = weighted_norm_sq(p, params.M);
    auto rhs = [&](double t, const Vector& y) -> Vector {
      const Matrix P = riccati.pi.cubic(t);
      const Vector xb = xbar.cubic(t);
      const Vector beta = y.head(n);
      Vector d(n + 1);
      d.head(n) = -(A - S * P).transpose() * beta + Q * xb;
      d(n) = 0.5 * beta.dot(S * beta) - 0.5 * (ss * P).trace() - weighted_norm_sq(xb, Q);
      return d;
    };
    auto ys = detail::rk4<Vector>(grid, terminal, Direction::Backward, rhs);
    std::vector<Vector> beta(ys.size());
    std::vector<double> delta(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) {
      beta[i] = ys[i].head(n);
      delta[i] = ys[i](n);
    }
    out.beta.emplace_back(grid, std::move(beta));
    out.delta.emplace_back(grid, std::move(delta));
  }
  return out;
}

Matrix TransitionKernel::alpha(double t, double s) const {
  return forward.linear(t) * forward.linear(s).inverse();
}

TransitionKernel transition_and_covariance(const AgentClassParams& params,
                                           const RiccatiSolution& riccati, const TimeGrid& grid) {
  const Matrix S = params.control_gain();
  const auto n = params.A.rows();
  auto closed_loop = [&](double t) -> Matrix { return params.A - S * riccati.pi.cubic(t); };

  auto fwd = detail::rk4<Matrix>(grid, Matrix::Identity(n, n), Direction::Forward,
                                 [&](double t, const Matrix& F) -> Matrix {
                                   return closed_loop(t) * F;
                                 });
  // d/dt alpha(T,t) = -alpha(T,t) Acl(t)
  auto to_t = detail::rk4<Matrix>(grid, Matrix::Identity(n, n), Direction::Backward,
                                  [&](double t, const Matrix& G) -> Matrix {
                                    return -G * closed_loop(t);
                                  });
  MatrixSeries to_terminal(grid, std::move(to_t));
  const Matrix ss = params.sigma * params.sigma.transpose();
  auto integrand = [&](const Matrix& a) -> Matrix { return a * ss * a.transpose(); };
  auto cov = detail::tail_integral<Matrix>(
      grid, Matrix::Zero(n, n), [&](std::size_t i) { return integrand(to_terminal[i]); },
      [&](double t) { return integrand(to_terminal.cubic(t)); });
  for (auto& c : cov) c = 0.5 * (c + c.transpose()).eval();
  return {MatrixSeries(grid, std::move(fwd)), std::move(to_terminal),
          MatrixSeries(grid, std::move(cov))};
}

std::vector<VectorSeries> terminal_mean_shift(const AgentClassParams& params,
                                              const TransitionKernel& kernel,
                                              const TrackingOffsets& offsets) {
  const Matrix S = params.control_gain();
  const TimeGrid& grid = kernel.to_terminal.grid();
  const auto n = params.A.rows();
  std::vector<VectorSeries> out;
  for (const auto& beta : offsets.beta) {
    auto shift = detail::tail_integral<Vector>(
        grid, Vector::Zero(n),
        [&](std::size_t i) -> Vector { return kernel.to_terminal[i] * S * beta[i]; },
        [&](double t) -> Vector { return kernel.to_terminal.cubic(t) * S * beta.cubic(t); });
    out.emplace_back(grid, std::move(shift));
  }
  return out;
}

LqgSolution::LqgSolution(AgentClassParams params, RiccatiSolution riccati, TrackingOffsets offsets)
    : params_(std::move(params)),
      riccati_(std::move(riccati)),
      offsets_(std::move(offsets)),
      feedback_(params_.feedback_gain()) {}

double LqgSolution::value(std::size_t j, double t, const Vector& x) const {
  const Matrix P = riccati_.pi.linear(t);
  return 0.5 * x.dot(P * x) + x.dot(offsets_.beta[j].linear(t)) + offsets_.delta[j].linear(t);
}

Vector LqgSolution::control(std::size_t j, double t, const Vector& x) const {
  return -feedback_ * (riccati_.pi.linear(t) * x + offsets_.beta[j].linear(t));
}

}  // namespace minlqg
