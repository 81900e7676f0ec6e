#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lent/marks.hpp"
#include "lent/rng.hpp"

namespace lent {

// One atom location of the base process: (s, x) with s the time coordinate
// and x the attribute (jump radius, or jump vector in R^m).
struct BasePoint {
  double time = 0.0;
  Eigen::VectorXd attribute;
};

bool base_equal(const BasePoint& a, const BasePoint& b);
// Canonical order: (time, attribute lexicographic).
bool base_less(const BasePoint& a, const BasePoint& b);

struct MarkedPoint {
  BasePoint base;
  Mark mark;
};

bool point_equal(const MarkedPoint& a, const MarkedPoint& b);
bool point_less(const MarkedPoint& a, const MarkedPoint& b);

// Finite simple configuration of marked points. Immutable value type; the
// point list is kept in canonical order so every operation is order-invariant
// and summation is bit-reproducible.
class Configuration {
 public:
  Configuration() = default;
  Configuration(std::string mark_space_id, double horizon)
      : mark_space_id_(std::move(mark_space_id)), horizon_(horizon) {}

  const std::vector<MarkedPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::string& mark_space_id() const { return mark_space_id_; }
  double horizon() const { return horizon_; }

  bool contains(const MarkedPoint& p) const;

  // Set union / set difference with a single point.
  Configuration with_point(const MarkedPoint& p) const;
  Configuration without_point(const MarkedPoint& p) const;

  // In-place mark replacement at a point index (product-construction view;
  // no epsilon operators involved). Preserves canonical order.
  Configuration with_replaced_mark(std::size_t index, Mark mark) const;

  // Appends assuming the caller provides points in arbitrary order; sorts once.
  static Configuration from_points(std::string mark_space_id, double horizon,
                                   std::vector<MarkedPoint> points);

 private:
  std::string mark_space_id_;
  double horizon_ = 0.0;
  std::vector<MarkedPoint> points_;
};

// The epsilon operators: add / remove one particle.
inline Configuration eps_plus(const Configuration& cfg, const MarkedPoint& p) {
  return cfg.with_point(p);
}
inline Configuration eps_minus(const Configuration& cfg, const MarkedPoint& p) {
  return cfg.without_point(p);
}

struct LevyAtom {
  double radius = 0.0;
  double weight = 0.0;
};

// Base process specification: Poisson points on [0, horizon] with jump sizes
// from the (truncated) Levy measure nu. nu is given either as a density on
// (truncation, density_upper] or as a finite list of weighted Dirac atoms;
// atoms below the truncation cutoff are dropped.
struct ProcessSpec {
  double horizon = 1.0;
  std::function<double(double)> levy_density;  // null => atomic measure
  double density_upper = 1.0;
  std::vector<LevyAtom> atoms;
  double truncation = 1e-3;  // epsilon_0 lower cutoff
  int attribute_dim = 1;
  // Builds the attribute from the sampled radius; default is the 1-d identity.
  std::function<Eigen::VectorXd(double radius, Rng& rng)> attribute_sampler;
};

// Total truncated mass nu([truncation, inf)).
double truncated_mass(const ProcessSpec& spec);

// Poisson(mass * horizon) many points, times i.i.d. uniform on [0, horizon],
// attributes i.i.d. from the normalized truncated nu composed with the
// attribute sampler. Never emits two points with equal (time, attribute).
// Throws TruncatedMassZero when nothing survives the cutoff.
std::vector<BasePoint> simulate_base(const ProcessSpec& spec, std::uint64_t seed);

class MarkSpace;  // mark_space.hpp

// Marks each base point with an independent draw from the mark space's
// measure; mark streams are derived per canonical point index, so they do not
// depend on the values of the base points.
Configuration mark_points(const std::vector<BasePoint>& points, const MarkSpace& space,
                          std::uint64_t seed, double horizon);
Configuration mark_points(const std::vector<BasePoint>& points, const MarkSpace& space,
                          std::uint64_t seed);

// simulate_base + mark_points with sub-seeds split from `seed`.
Configuration simulate_configuration(const ProcessSpec& spec, const MarkSpace& space,
                                     std::uint64_t seed);

// nu(dr) = r^exponent dr on (truncation, upper].
ProcessSpec power_law_spec(double horizon, double truncation, double exponent = -1.5,
                           double upper = 1.0);
// Finite measure: a single weighted Dirac atom.
ProcessSpec dirac_spec(double horizon, double radius, double weight);

}  // namespace lent
