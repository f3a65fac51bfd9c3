#pragma once

#include "minlqg/config.hpp"

#include <random>

namespace minlqg::test {

inline AgentClassParams scalar_class(double A, double B, double R, double sigma, double Q,
                                     double M) {
  AgentClassParams p;
  p.A = Matrix::Constant(1, 1, A);
  p.B = Matrix::Constant(1, 1, B);
  p.R = Matrix::Constant(1, 1, R);
  p.sigma = Matrix::Constant(1, 1, sigma);
  p.Q = Matrix::Constant(1, 1, Q);
  p.M = Matrix::Constant(1, 1, M);
  p.eta = fit_eta(p).eta;
  return p;
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline Vector scalar(double v) { return Vector::Constant(1, v); }

/// Reference parameters on a smaller grid for fast unit tests.
inline Scenario small_reference(double Q = 0.1, double sigma = 1.5, int n_steps = 400,
                                int fp_nodes = 401) {
  Scenario s = reference_scenario(Q, sigma, 500.0, n_steps);
  s.fp_nodes = fp_nodes;
  return s;
}

/// A = 0, destinations -10 and 10, initial mean on the cell boundary:
/// invariant under x -> -x.
inline Scenario symmetric_scenario(double Q = 0.1, int n_steps = 400, int fp_nodes = 401) {
  Scenario s = reference_scenario(Q, 1.5, 500.0, n_steps);
  s.population.classes[0].A = Matrix::Zero(1, 1);
  s.initial = InitialDistribution(GaussianInitial{scalar(0.0), Matrix::Constant(1, 1, 1.0)});
  s.fp_nodes = fp_nodes;
  return s;
}

inline VectorSeries constant_path(const TimeGrid& g, const Vector& v) {
  return VectorSeries(g, std::vector<Vector>(g.n_nodes(), v));
}

}  // namespace minlqg::test
