#pragma once

#include "minlqg/types.hpp"

#include <vector>

namespace minlqg::detail {

enum class Direction { Forward, Backward };

/// Classical RK4 on the nodes of `grid`. Forward runs start at t_0 from
/// `init`; backward runs start at t_N. `after_step(y, t)` may project the
/// state (e.g. symmetrize) or throw on blow-up.
template <typename State, typename Rhs, typename AfterStep>
std::vector<State> rk4(const TimeGrid& grid, State init, Direction dir, Rhs&& rhs,
                       AfterStep&& after_step) {
  const std::size_t n = grid.n_nodes();
  std::vector<State> out(n);
  const double h = dir == Direction::Forward ? grid.dt() : -grid.dt();
  std::size_t i = dir == Direction::Forward ? 0 : n - 1;
  out[i] = std::move(init);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    const std::size_t next = dir == Direction::Forward ? i + 1 : i - 1;
    const double t = grid.time(i);
    const State& y = out[i];
    const State k1 = rhs(t, y);
    const State k2 = rhs(t + 0.5 * h, State(y + (0.5 * h) * k1));
    const State k3 = rhs(t + 0.5 * h, State(y + (0.5 * h) * k2));
    const State k4 = rhs(grid.time(next), State(y + h * k3));
    State y_next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    after_step(y_next, grid.time(next));
    out[next] = std::move(y_next);
    i = next;
  }
  return out;
}

template <typename State, typename Rhs>
std::vector<State> rk4(const TimeGrid& grid, State init, Direction dir, Rhs&& rhs) {
  return rk4(grid, std::move(init), dir, std::forward<Rhs>(rhs), [](State&, double) {});
}

/// Backward Simpson accumulation of I(t_i) = int_{t_i}^T f(tau) dtau with
/// f known at nodes and midpoints.
template <typename T, typename NodeF, typename MidF>
std::vector<T> tail_integral(const TimeGrid& grid, T zero, NodeF&& at_node, MidF&& at_mid) {
  const std::size_t n = grid.n_nodes();
  std::vector<T> out(n, zero);
  T f_right = at_node(n - 1);
  for (std::size_t i = n - 1; i-- > 0;) {
    T f_left = at_node(i);
    const double t_mid = 0.5 * (grid.time(i) + grid.time(i + 1));
    out[i] = T(out[i + 1] + (grid.dt() / 6.0) * (f_left + 4.0 * at_mid(t_mid) + f_right));
    f_right = std::move(f_left);
  }
  return out;
}

}  // namespace minlqg::detail
