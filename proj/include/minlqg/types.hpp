#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace minlqg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Input that violates a documented precondition or model invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure of a numerical procedure on valid input: Riccati blow-up,
/// Fokker-Planck mass drift, degenerate Gibbs weights.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform grid t_0 = 0 < ... < t_n = T.
class TimeGrid {
 public:
  TimeGrid(double horizon, int n_steps);

  double horizon() const { return horizon_; }
  int n_steps() const { return n_steps_; }
  std::size_t n_nodes() const { return static_cast<std::size_t>(n_steps_) + 1; }
  double dt() const { return horizon_ / n_steps_; }
  double time(std::size_t i) const;

  /// Index i and weight w with t = (1-w) t_i + w t_{i+1}; t is clamped to [0,T].
  std::pair<std::size_t, double> locate(double t) const;

  bool operator==(const TimeGrid& other) const {
    return horizon_ == other.horizon_ && n_steps_ == other.n_steps_;
  }

 private:
  double horizon_;
  int n_steps_;
};

/// Values of a trajectory at the nodes of a TimeGrid. Queries between nodes
/// use linear interpolation; `cubic` is a 4-point Lagrange interpolant used
/// for the intermediate stages of RK4 so that node-stored coefficients do
/// not degrade the integrator order.
template <typename T>
class NodeSeries {
 public:
  NodeSeries() = default;
  NodeSeries(TimeGrid grid, std::vector<T> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.n_nodes()) {
      throw ValidationError("node series length does not match time grid");
    }
  }

  const TimeGrid& grid() const { return grid_; }
  const std::vector<T>& values() const { return values_; }
  const T& operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  T linear(double t) const {
    auto [i, w] = grid_.locate(t);
    if (w == 0.0) return values_[i];
    return T((1.0 - w) * values_[i] + w * values_[i + 1]);
  }

  T cubic(double t) const {
    auto [i, w] = grid_.locate(t);
    if (w == 0.0) return values_[i];
    const std::size_t last = values_.size() - 1;
    if (last < 3) return linear(t);
    // stencil i0..i0+3 containing [i, i+1], shifted inward at the ends
    std::size_t i0 = i == 0 ? 0 : i - 1;
    if (i0 + 3 > last) i0 = last - 3;
    const double s = static_cast<double>(i - i0) + w;
    const double l0 = -(s - 1) * (s - 2) * (s - 3) / 6.0;
    const double l1 = s * (s - 2) * (s - 3) / 2.0;
    const double l2 = -s * (s - 1) * (s - 3) / 2.0;
    const double l3 = s * (s - 1) * (s - 2) / 6.0;
    return T(l0 * values_[i0] + l1 * values_[i0 + 1] + l2 * values_[i0 + 2] +
             l3 * values_[i0 + 3]);
  }

 private:
  TimeGrid grid_{1.0, 1};
  std::vector<T> values_;
};

using MatrixSeries = NodeSeries<Matrix>;
using VectorSeries = NodeSeries<Vector>;
using ScalarSeries = NodeSeries<double>;

}  // namespace minlqg
