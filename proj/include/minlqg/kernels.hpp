#pragma once

#include "minlqg/policy.hpp"

#include <cstddef>
#include <exception>
#include <mutex>
#include <span>

namespace minlqg {

/// Execution mode of the data-parallel kernels. `Serial` is the reference
/// path the tests compare against; both modes produce bit-identical output
/// because every index writes only its own slot and reductions happen
/// afterwards in index order.
enum class Exec { Serial, Parallel };

void set_thread_count(int n);
int thread_count();

/// Runs body(i) for i in [0, n). The first exception thrown by any index is
/// rethrown after the loop.
template <typename Body>
void for_each_index(std::size_t n, Exec exec, Body&& body) {
  if (exec == Exec::Serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex guard;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

/// mu_i = A x_i + B u*(t, x_i) on a scalar spatial grid.
void drift_field(const MinLqgPolicy& policy, const PolicyNode& node, std::span<const double> x,
                 std::span<double> mu, Exec exec);

/// Solves a tridiagonal system in place (Thomas algorithm). `lower[0]` and
/// `upper[n-1]` are ignored. The system must be diagonally dominant.
void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<double> rhs);

}  // namespace minlqg
