#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "lent/marks.hpp"
#include "lent/rng.hpp"

namespace lent {

// Restriction of a functional to a single mark: u |-> F(eps_plus_{(b,u)} rest).
// Carries whatever differentiable structure the functional can expose; the
// owning mark space picks the strongest one it understands.
struct OneMarkMap {
  int output_dim = 1;
  std::function<Eigen::VectorXd(const Mark&)> eval;

  // Analytic derivative in the circle angle. Takes precedence over finite
  // differences when present.
  std::function<Eigen::VectorXd(const Mark&)> angle_deriv;

  // Driver-path marks: the map factors through the SDE terminal value,
  // eval(u) = offset + outer(X_T^start(u)). outer_jacobian is the k x m
  // Jacobian of the outer map at the terminal value.
  struct SdeTerminal {
    Eigen::VectorXd start;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd& terminal)> outer_jacobian;
  };
  std::optional<SdeTerminal> sde;
};

// Dirichlet structure on the mark space (Y, mu, d, gamma) plus the gradient
// flat realized on an auxiliary probability space rho. Contract: flat_sample
// has rho-mean zero and rho-covariance equal to gamma_one for every map g and
// mark u.
class MarkSpace {
 public:
  virtual ~MarkSpace() = default;

  virtual std::string id() const = 0;
  virtual Mark sample(Rng& rng) const = 0;

  // One-mark carre du champ gamma[g](u): k x k PSD matrix.
  virtual Eigen::MatrixXd gamma_one(const OneMarkMap& g, const Mark& u) const = 0;

  // One draw of the gradient g-flat(u, .) under rho.
  virtual Eigen::VectorXd flat_sample(const OneMarkMap& g, const Mark& u, Rng& rng) const = 0;
};

// Classical structure on the unit circle (H^1 domain, uniform measure).
// gamma_one(g, theta) = g'(theta) g'(theta)^T with g' the periodic derivative;
// the gradient is realized by one standard Gaussian factor per mark.
class CircleMarkSpace final : public MarkSpace {
 public:
  explicit CircleMarkSpace(double fd_step = 1e-5) : fd_step_(fd_step) {}

  std::string id() const override { return "circle"; }
  double fd_step() const { return fd_step_; }

  Mark sample(Rng& rng) const override;
  Eigen::MatrixXd gamma_one(const OneMarkMap& g, const Mark& u) const override;
  Eigen::VectorXd flat_sample(const OneMarkMap& g, const Mark& u, Rng& rng) const override;

  // Periodic derivative of g at theta: analytic when registered, otherwise
  // central finite difference (g(theta+h) - g(theta-h)) / 2h wrapped mod 2pi.
  Eigen::VectorXd derivative(const OneMarkMap& g, double theta) const;

 private:
  double fd_step_;
};

// Spec-level operations on the circle structure.
Mark circle_sample(std::uint64_t seed);
Eigen::MatrixXd circle_gamma_one(const OneMarkMap& g, double theta, double fd_step = 1e-5);
Eigen::VectorXd circle_flat_sample(const OneMarkMap& g, double theta, std::uint64_t seed,
                                   double fd_step = 1e-5);

// Convenience for scalar/vector callables of the angle alone (no analytic
// derivative, no SDE structure).
OneMarkMap angle_map(int output_dim, std::function<Eigen::VectorXd(double)> f);
OneMarkMap angle_map_scalar(std::function<double(double)> f);

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline double wrap_angle(double theta) {
  double w = std::fmod(theta, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w;
}

}  // namespace lent
