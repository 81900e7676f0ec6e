#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "lent/config_space.hpp"
#include "lent/mark_space.hpp"

namespace lent {

// Per-point integrand f(base, mark) -> R^k with optional differentiable
// structure. dtheta, when registered, takes precedence over finite
// differences; sde_terminal declares that the mark is a driver path and
// f(base, path) is the SDE terminal value started at base.attribute.
struct PointMap {
  int output_dim = 1;
  std::function<Eigen::VectorXd(const BasePoint&, const Mark&)> eval;
  std::function<Eigen::VectorXd(const BasePoint&, double theta)> dtheta;
  bool sde_terminal = false;
};

// Functional of the configuration with per-mark differentiability access.
// eval must be order-invariant; the implementation guarantees this by keeping
// configurations canonically sorted.
class Functional {
 public:
  virtual ~Functional() = default;

  virtual int output_dim() const = 0;
  virtual Eigen::VectorXd eval(const Configuration& cfg) const = 0;

  // One-mark restriction u |-> F(eps_plus((base, u), rest)); `rest` must not
  // contain the lent particle. The default exposes evaluation only (finite
  // differences downstream); subclasses add analytic/SDE structure.
  virtual OneMarkMap one_mark_map(const Configuration& rest, const BasePoint& base) const;

  // Analytic derivative of u |-> F(cfg with mark i := u) at the current mark
  // (circle marks). Used by the product-construction oracle so that both
  // assembly routes share one derivative mechanism.
  virtual std::optional<Eigen::VectorXd> inplace_angle_deriv(const Configuration& cfg,
                                                             std::size_t i) const {
    (void)cfg;
    (void)i;
    return std::nullopt;
  }

  // Jacobian of the outer map when the restriction to point i factors through
  // an SDE terminal value (driver-path marks).
  virtual std::optional<Eigen::MatrixXd> inplace_outer_jacobian(const Configuration& cfg,
                                                                std::size_t i) const {
    (void)cfg;
    (void)i;
    return std::nullopt;
  }
};

using FunctionalPtr = std::shared_ptr<const Functional>;

// N(f): sum of f over the configuration's points.
FunctionalPtr make_linear(PointMap f);
// exp(-N(f)) for scalar f.
FunctionalPtr make_exp(PointMap f);
// Sum-of-transformed-jumps functional, F = sum transform(base, mark) in R^m.
FunctionalPtr make_jump_sum(PointMap transform);
// Component stacking: F = (F_1, ..., F_n) with block output.
FunctionalPtr make_stacked(std::vector<FunctionalPtr> components);

// Planar jump sum in polar form over points with time <= t:
// F = sum 1_{s <= t} (r cos theta, r sin theta), r = attribute[0].
// Registers the analytic angle derivative (-r sin theta, r cos theta).
FunctionalPtr polar_jump_sum(double t);

// f(base, mark) = r sin(theta) with analytic derivative r cos(theta); the
// canonical scalar integrand for the closed-form identities.
PointMap radial_sine_map();

// Wrapper exposing evaluation only: strips analytic derivative and SDE
// structure so every route falls back to finite differences.
FunctionalPtr make_opaque(FunctionalPtr inner);

// The lent particle formula: Gamma[F](cfg) assembled by lending each particle
// (remove it, differentiate the one-mark restriction in its mark, evaluate
// back at its own mark) and summing over the configuration.
Eigen::MatrixXd gamma_total(const Functional& F, const Configuration& cfg, const MarkSpace& space);

// Product-construction route: differentiates F in the mark of each point in
// place, no epsilon operators and no MarkSpace::gamma_one. Independent
// assembly of the same sum; must agree with gamma_total to float precision.
Eigen::MatrixXd gamma_total_oracle(const Functional& F, const Configuration& cfg,
                                   const MarkSpace& space);

// One draw of the configuration-level gradient F-sharp: per-point rho-streams
// derived from (seed, canonical point index). rho-mean 0, rho-covariance
// gamma_total(F, cfg).
Eigen::VectorXd sharp_sample(const Functional& F, const Configuration& cfg,
                             const MarkSpace& space, std::uint64_t seed);

// n_draws independent gradient draws (rows); row d equals
// sharp_sample(..., derive_seed(seed, d)). One-mark maps are built once.
Eigen::MatrixXd sharp_samples(const Functional& F, const Configuration& cfg,
                              const MarkSpace& space, std::uint64_t seed, int n_draws);

}  // namespace lent
