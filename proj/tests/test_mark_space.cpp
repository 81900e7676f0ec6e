#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "helpers.hpp"
#include "lent/errors.hpp"
#include "lent/mark_space.hpp"
#include "lent/rng.hpp"

using namespace lent;

namespace {

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// Planar jump map of a fixed radius: g(theta) = r (cos, sin).
OneMarkMap polar_map(double r) {
  return angle_map(2, [r](double theta) {
    Eigen::VectorXd v(2);
    v << r * std::cos(theta), r * std::sin(theta);
    return v;
  });
}

}  // namespace

TEST_CASE("circle_sample is deterministic, seed-sensitive and uniform") {
  CHECK(mark_angle(circle_sample(5)) == mark_angle(circle_sample(5)));
  CHECK(mark_angle(circle_sample(5)) != mark_angle(circle_sample(6)));
  const int n = 30000;
  std::vector<double> vals(n);
  bool in_range = true;
  for (int i = 0; i < n; ++i) {
    vals[i] = mark_angle(circle_sample(derive_seed(21, i)));
    in_range = in_range && vals[i] >= 0.0 && vals[i] < kTwoPi;
  }
  CHECK(in_range);
  CHECK(test_util::ks_uniform(vals, 0.0, kTwoPi) < 0.01);
}

TEST_CASE("gamma of the polar map matches the closed form") {
  const double r = 1.7;
  const double theta = 0.9;
  Eigen::Matrix2d expected;
  const double s = std::sin(theta), c = std::cos(theta);
  expected << r * r * s * s, -r * r * s * c, -r * r * s * c, r * r * c * c;
  const Eigen::MatrixXd got = circle_gamma_one(polar_map(r), theta);
  CHECK(max_abs_diff(got, expected) < 1e-8);
}

TEST_CASE("gamma of a constant map is exactly zero") {
  OneMarkMap g = angle_map_scalar([](double) { return 3.25; });
  // Central differences of a constant cancel exactly.
  CHECK(circle_gamma_one(g, 1.2)(0, 0) == 0.0);
}

TEST_CASE("gamma of c sin(theta) is c^2 cos^2(theta)") {
  const double c = 2.5;
  OneMarkMap g = angle_map_scalar([c](double theta) { return c * std::sin(theta); });
  for (double theta : {0.0, 0.4, 2.0, 5.5}) {
    const double expected = c * c * std::cos(theta) * std::cos(theta);
    CHECK(circle_gamma_one(g, theta)(0, 0) == doctest::Approx(expected).epsilon(1e-8));
  }
}

TEST_CASE("a registered analytic derivative takes precedence over differences") {
  OneMarkMap g = angle_map_scalar([](double theta) { return std::sin(theta); });
  g.angle_deriv = [](const Mark& u) {
    return Eigen::VectorXd::Constant(1, std::cos(mark_angle(u)));
  };
  const double theta = 0.37;
  const double d = std::cos(theta);
  // Bitwise equality: only the analytic path can produce exactly d*d.
  CHECK(circle_gamma_one(g, theta)(0, 0) == d * d);
}

TEST_CASE("gamma obeys the chain rule for smooth postcompositions") {
  const double c = 1.3;
  OneMarkMap g = angle_map_scalar([c](double theta) { return c * std::sin(theta); });
  OneMarkMap phi_g = angle_map_scalar([c](double theta) {
    const double y = c * std::sin(theta);
    return y * y * y + 2.0 * y;
  });
  for (double theta : {0.3, 1.1, 4.2}) {
    const double y = c * std::sin(theta);
    const double dphi = 3.0 * y * y + 2.0;
    const double expected = dphi * dphi * circle_gamma_one(g, theta)(0, 0);
    const double got = circle_gamma_one(phi_g, theta)(0, 0);
    CHECK(got == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("one-mark gamma is PSD of rank at most one") {
  OneMarkMap g = angle_map(3, [](double theta) {
    Eigen::VectorXd v(3);
    v << std::sin(theta), std::cos(2.0 * theta), theta > 3.0 ? 1.0 : std::sin(3.0 * theta);
    return v;
  });
  for (double theta : {0.1, 1.9, 2.8, 6.1}) {
    const Eigen::MatrixXd m = circle_gamma_one(g, theta);
    CHECK(max_abs_diff(m, m.transpose()) == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    CHECK(svd.singularValues()(1) <= 1e-12 * (svd.singularValues()(0) + 1e-300));
  }
}

TEST_CASE("non-finite map values are rejected") {
  OneMarkMap bad = angle_map_scalar([](double) { return std::numeric_limits<double>::quiet_NaN(); });
  CHECK_THROWS_AS(circle_gamma_one(bad, 0.5), NonFiniteValue);

  OneMarkMap bad_deriv;
  bad_deriv.output_dim = 1;
  bad_deriv.angle_deriv = [](const Mark&) {
    return Eigen::VectorXd::Constant(1, std::numeric_limits<double>::infinity());
  };
  CHECK_THROWS_AS(circle_gamma_one(bad_deriv, 0.5), NonFiniteValue);

  OneMarkMap empty;
  CHECK_THROWS_AS(circle_gamma_one(empty, 0.5), UnsupportedFunctional);
}

TEST_CASE("flat of a constant map vanishes for every auxiliary draw") {
  OneMarkMap g = angle_map_scalar([](double) { return 4.0; });
  bool all_zero = true;
  for (int s = 0; s < 50; ++s) {
    all_zero = all_zero && circle_flat_sample(g, 2.2, derive_seed(31, s))(0) == 0.0;
  }
  CHECK(all_zero);
}

TEST_CASE("flat draws are centered with covariance gamma") {
  const double theta = 1.15;
  OneMarkMap g = polar_map(1.4);
  const Eigen::MatrixXd ref = circle_gamma_one(g, theta);
  const int n = 100000;
  Eigen::MatrixXd draws(n, 2);
  for (int i = 0; i < n; ++i) {
    draws.row(i) = circle_flat_sample(g, theta, derive_seed(32, i)).transpose();
  }
  const Eigen::VectorXd mean = draws.colwise().mean();
  // The draw is d * Z with Z standard normal, so SE of the mean is |d|/sqrt(n).
  const double scale = std::sqrt(ref.diagonal().maxCoeff());
  CHECK(mean.cwiseAbs().maxCoeff() < 3.0 * scale / std::sqrt(double(n)));
  CHECK(test_util::max_sigma_units(draws, ref) < 3.0);
}

TEST_CASE("wrap_angle maps into [0, 2pi) and differences respect periodicity") {
  CHECK(wrap_angle(-0.1) == doctest::Approx(kTwoPi - 0.1));
  CHECK(wrap_angle(kTwoPi + 0.3) == doctest::Approx(0.3));
  CHECK(wrap_angle(0.0) == 0.0);
  // Derivative of cos at 0 through the wrapped stencil: cos(h) - cos(2pi - h)
  // cancels exactly.
  OneMarkMap g = angle_map_scalar([](double theta) { return std::cos(theta); });
  CHECK(CircleMarkSpace().derivative(g, 0.0)(0) == 0.0);
}
