#pragma once

#include <Eigen/Dense>

#include "lent/rng.hpp"

namespace lent {

// Discretized Brownian driver: n_steps x d matrix of increments, each entry
// N(0, dt) at generation time. Serves as the mark value on the Wiener space.
struct DriverPath {
  double dt = 0.0;
  Eigen::MatrixXd increments;  // n_steps x d

  int n_steps() const { return static_cast<int>(increments.rows()); }
  int dims() const { return static_cast<int>(increments.cols()); }
  double horizon() const { return dt * static_cast<double>(increments.rows()); }
};

inline DriverPath sample_driver_path(int n_steps, int d, double dt, Rng& rng) {
  DriverPath path;
  path.dt = dt;
  path.increments.resize(n_steps, d);
  const double scale = std::sqrt(dt);
  for (int i = 0; i < n_steps; ++i)
    for (int j = 0; j < d; ++j) path.increments(i, j) = scale * rng.normal();
  return path;
}

inline bool operator==(const DriverPath& a, const DriverPath& b) {
  return a.dt == b.dt && a.increments.rows() == b.increments.rows() &&
         a.increments.cols() == b.increments.cols() && a.increments == b.increments;
}

// Total order for canonical point sorting; the specific order carries no
// meaning beyond determinism.
inline bool path_less(const DriverPath& a, const DriverPath& b) {
  if (a.dt != b.dt) return a.dt < b.dt;
  if (a.increments.rows() != b.increments.rows()) return a.increments.rows() < b.increments.rows();
  if (a.increments.cols() != b.increments.cols()) return a.increments.cols() < b.increments.cols();
  for (Eigen::Index i = 0; i < a.increments.size(); ++i) {
    const double x = a.increments.data()[i];
    const double y = b.increments.data()[i];
    if (x != y) return x < y;
  }
  return false;
}

}  // namespace lent
