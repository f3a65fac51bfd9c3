#include "minlqg/kernels.hpp"

#include <omp.h>

#include <vector>

namespace minlqg {

void set_thread_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int thread_count() { return omp_get_max_threads(); }

void drift_field(const MinLqgPolicy& policy, const PolicyNode& node, std::span<const double> x,
                 std::span<double> mu, Exec exec) {
  if (policy.state_dim() != 1) throw ValidationError("drift_field requires a scalar state");
  if (x.size() != mu.size()) throw ValidationError("drift_field: size mismatch");
  for_each_index(x.size(), exec, [&](std::size_t i) { mu[i] = policy.drift_1d(node, x[i]); });
}

void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<double> rhs) {
  const std::size_t n = diag.size();
  std::vector<double> c(n);
  double denom = diag[0];
  c[0] = n > 1 ? upper[0] / denom : 0.0;
  rhs[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag[i] - lower[i] * c[i - 1];
    c[i] = i + 1 < n ? upper[i] / denom : 0.0;
    rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

}  // namespace minlqg
