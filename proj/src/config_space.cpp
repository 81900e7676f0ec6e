#include "lent/config_space.hpp"

#include <algorithm>
#include <cmath>

#include "lent/errors.hpp"
#include "lent/mark_space.hpp"

namespace lent {

bool base_equal(const BasePoint& a, const BasePoint& b) {
  return a.time == b.time && a.attribute.size() == b.attribute.size() &&
         a.attribute == b.attribute;
}

bool base_less(const BasePoint& a, const BasePoint& b) {
  if (a.time != b.time) return a.time < b.time;
  if (a.attribute.size() != b.attribute.size()) return a.attribute.size() < b.attribute.size();
  for (Eigen::Index i = 0; i < a.attribute.size(); ++i) {
    if (a.attribute[i] != b.attribute[i]) return a.attribute[i] < b.attribute[i];
  }
  return false;
}

bool point_equal(const MarkedPoint& a, const MarkedPoint& b) {
  return base_equal(a.base, b.base) && mark_equal(a.mark, b.mark);
}

bool point_less(const MarkedPoint& a, const MarkedPoint& b) {
  if (base_less(a.base, b.base)) return true;
  if (base_less(b.base, a.base)) return false;
  return mark_less(a.mark, b.mark);
}

bool Configuration::contains(const MarkedPoint& p) const {
  auto it = std::lower_bound(points_.begin(), points_.end(), p, point_less);
  return it != points_.end() && point_equal(*it, p);
}

Configuration Configuration::with_point(const MarkedPoint& p) const {
  Configuration out(*this);
  auto it = std::lower_bound(out.points_.begin(), out.points_.end(), p, point_less);
  if (it != out.points_.end() && point_equal(*it, p)) return out;  // set union idempotence
  out.points_.insert(it, p);
  return out;
}

Configuration Configuration::without_point(const MarkedPoint& p) const {
  Configuration out(*this);
  auto it = std::lower_bound(out.points_.begin(), out.points_.end(), p, point_less);
  if (it != out.points_.end() && point_equal(*it, p)) out.points_.erase(it);
  return out;
}

Configuration Configuration::with_replaced_mark(std::size_t index, Mark mark) const {
  Configuration out(*this);
  out.points_[index].mark = std::move(mark);
  // Mark only breaks ties between equal bases, which the simplicity invariant
  // rules out; a local re-sort keeps the general case correct anyway.
  std::sort(out.points_.begin(), out.points_.end(), point_less);
  return out;
}

Configuration Configuration::from_points(std::string mark_space_id, double horizon,
                                         std::vector<MarkedPoint> points) {
  Configuration out(std::move(mark_space_id), horizon);
  std::sort(points.begin(), points.end(), point_less);
  out.points_ = std::move(points);
  return out;
}

namespace {

// Inverse-CDF table sampler for a Levy density on (cutoff, upper].
// Geometric grid handles power-law singularities near the cutoff; cell masses
// by Simpson's rule.
class RadialSampler {
 public:
  RadialSampler(const ProcessSpec& spec) {
    if (spec.levy_density) {
      build_density_table(spec);
    } else {
      for (const LevyAtom& atom : spec.atoms) {
        if (atom.radius >= spec.truncation && atom.weight > 0.0) {
          atoms_.push_back(atom);
          mass_ += atom.weight;
        }
      }
    }
  }

  double mass() const { return mass_; }

  double sample(Rng& rng) const {
    const double u = rng.uniform() * mass_;
    if (!atoms_.empty()) {
      double acc = 0.0;
      for (const LevyAtom& atom : atoms_) {
        acc += atom.weight;
        if (u < acc) return atom.radius;
      }
      return atoms_.back().radius;
    }
    auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    const std::size_t cell = std::min<std::size_t>(
        it == cum_.begin() ? 0 : static_cast<std::size_t>(it - cum_.begin() - 1),
        grid_.size() - 2);
    const double lo = cum_[cell];
    const double hi = cum_[cell + 1];
    const double frac = hi > lo ? (u - lo) / (hi - lo) : 0.5;
    return grid_[cell] + frac * (grid_[cell + 1] - grid_[cell]);
  }

 private:
  void build_density_table(const ProcessSpec& spec) {
    const double lo = spec.truncation;
    const double hi = spec.density_upper;
    if (!(hi > lo)) return;  // empty support => mass 0
    const int n_cells = 4096;
    const double ratio = std::pow(hi / lo, 1.0 / n_cells);
    grid_.resize(n_cells + 1);
    grid_[0] = lo;
    for (int i = 1; i <= n_cells; ++i) grid_[i] = grid_[i - 1] * ratio;
    grid_[n_cells] = hi;
    cum_.resize(n_cells + 1);
    cum_[0] = 0.0;
    for (int i = 0; i < n_cells; ++i) {
      const double a = grid_[i];
      const double b = grid_[i + 1];
      const double mid = 0.5 * (a + b);
      const double cell =
          (b - a) / 6.0 *
          (spec.levy_density(a) + 4.0 * spec.levy_density(mid) + spec.levy_density(b));
      cum_[i + 1] = cum_[i] + std::max(cell, 0.0);
    }
    mass_ = cum_.back();
  }

  double mass_ = 0.0;
  std::vector<LevyAtom> atoms_;
  std::vector<double> grid_;
  std::vector<double> cum_;
};

}  // namespace

double truncated_mass(const ProcessSpec& spec) { return RadialSampler(spec).mass(); }

std::vector<BasePoint> simulate_base(const ProcessSpec& spec, std::uint64_t seed) {
  if (!(spec.horizon > 0.0)) throw Error("ProcessSpec: horizon must be positive");
  if (!(spec.truncation > 0.0)) throw Error("ProcessSpec: truncation must be positive");
  const RadialSampler radial(spec);
  if (radial.mass() <= 0.0)
    throw TruncatedMassZero("truncated Levy measure has zero mass above the cutoff");

  Rng rng(seed);
  const std::uint64_t count = rng.poisson(radial.mass() * spec.horizon);
  std::vector<BasePoint> points;
  points.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    BasePoint p;
    for (;;) {
      p.time = spec.horizon * rng.uniform();
      const double radius = radial.sample(rng);
      if (spec.attribute_sampler) {
        p.attribute = spec.attribute_sampler(radius, rng);
      } else {
        p.attribute = Eigen::VectorXd::Constant(1, radius);
      }
      // Simplicity guard: equal (time, attribute) pairs are a probability-zero
      // event; re-draw the whole point if one occurs.
      const bool duplicate = std::any_of(points.begin(), points.end(), [&](const BasePoint& q) {
        return base_equal(q, p);
      });
      if (!duplicate) break;
    }
    points.push_back(std::move(p));
  }
  std::sort(points.begin(), points.end(), base_less);
  return points;
}

Configuration mark_points(const std::vector<BasePoint>& points, const MarkSpace& space,
                          std::uint64_t seed, double horizon) {
  std::vector<BasePoint> sorted = points;
  std::sort(sorted.begin(), sorted.end(), base_less);
  std::vector<MarkedPoint> marked;
  marked.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    Rng stream(derive_seed(seed, i));
    marked.push_back(MarkedPoint{sorted[i], space.sample(stream)});
  }
  return Configuration::from_points(space.id(), horizon, std::move(marked));
}

Configuration mark_points(const std::vector<BasePoint>& points, const MarkSpace& space,
                          std::uint64_t seed) {
  double horizon = 0.0;
  for (const BasePoint& p : points) horizon = std::max(horizon, p.time);
  return mark_points(points, space, seed, horizon);
}

Configuration simulate_configuration(const ProcessSpec& spec, const MarkSpace& space,
                                     std::uint64_t seed) {
  const std::vector<BasePoint> base = simulate_base(spec, derive_seed(seed, 0));
  return mark_points(base, space, derive_seed(seed, 1), spec.horizon);
}

ProcessSpec power_law_spec(double horizon, double truncation, double exponent, double upper) {
  ProcessSpec spec;
  spec.horizon = horizon;
  spec.truncation = truncation;
  spec.levy_density = [exponent](double r) { return std::pow(r, exponent); };
  spec.density_upper = upper;
  return spec;
}

ProcessSpec dirac_spec(double horizon, double radius, double weight) {
  ProcessSpec spec;
  spec.horizon = horizon;
  spec.truncation = std::min(1e-3, radius);
  spec.atoms = {LevyAtom{radius, weight}};
  return spec;
}

}  // namespace lent
