#include "lent/mark_space.hpp"

#include <cmath>

#include "lent/errors.hpp"

namespace lent {

namespace {

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw NonFiniteValue(std::string(what) + " returned a non-finite value");
}

}  // namespace

Mark CircleMarkSpace::sample(Rng& rng) const { return Mark(kTwoPi * rng.uniform()); }

Eigen::VectorXd CircleMarkSpace::derivative(const OneMarkMap& g, double theta) const {
  if (g.angle_deriv) {
    Eigen::VectorXd d = g.angle_deriv(Mark(theta));
    require_finite(d, "analytic one-mark derivative");
    return d;
  }
  if (!g.eval) throw UnsupportedFunctional("one-mark map has no evaluator");
  const Eigen::VectorXd hi = g.eval(Mark(wrap_angle(theta + fd_step_)));
  const Eigen::VectorXd lo = g.eval(Mark(wrap_angle(theta - fd_step_)));
  require_finite(hi, "one-mark map");
  require_finite(lo, "one-mark map");
  return (hi - lo) / (2.0 * fd_step_);
}

Eigen::MatrixXd CircleMarkSpace::gamma_one(const OneMarkMap& g, const Mark& u) const {
  const Eigen::VectorXd d = derivative(g, mark_angle(u));
  return d * d.transpose();
}

Eigen::VectorXd CircleMarkSpace::flat_sample(const OneMarkMap& g, const Mark& u, Rng& rng) const {
  const Eigen::VectorXd d = derivative(g, mark_angle(u));
  return d * rng.normal();
}

Mark circle_sample(std::uint64_t seed) {
  Rng rng(seed);
  return CircleMarkSpace().sample(rng);
}

Eigen::MatrixXd circle_gamma_one(const OneMarkMap& g, double theta, double fd_step) {
  return CircleMarkSpace(fd_step).gamma_one(g, Mark(theta));
}

Eigen::VectorXd circle_flat_sample(const OneMarkMap& g, double theta, std::uint64_t seed,
                                   double fd_step) {
  Rng rng(seed);
  return CircleMarkSpace(fd_step).flat_sample(g, Mark(theta), rng);
}

OneMarkMap angle_map(int output_dim, std::function<Eigen::VectorXd(double)> f) {
  OneMarkMap g;
  g.output_dim = output_dim;
  g.eval = [f = std::move(f)](const Mark& u) { return f(mark_angle(u)); };
  return g;
}

OneMarkMap angle_map_scalar(std::function<double(double)> f) {
  OneMarkMap g;
  g.output_dim = 1;
  g.eval = [f = std::move(f)](const Mark& u) {
    return Eigen::VectorXd::Constant(1, f(mark_angle(u)));
  };
  return g;
}

}  // namespace lent
