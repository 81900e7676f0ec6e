#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "helpers.hpp"
#include "lent/density.hpp"
#include "lent/errors.hpp"
#include "lent/sde_flow.hpp"

using namespace lent;

namespace {

DriverPath make_path(int n_steps, int d, double dt, std::uint64_t seed) {
  Rng rng(seed);
  return sample_driver_path(n_steps, d, dt, rng);
}

// Halves the time resolution by summing adjacent increments; the coarse path
// is the same Brownian trajectory observed on the doubled grid.
DriverPath coarsen(const DriverPath& fine) {
  DriverPath out;
  out.dt = 2.0 * fine.dt;
  out.increments.resize(fine.increments.rows() / 2, fine.increments.cols());
  for (Eigen::Index i = 0; i < out.increments.rows(); ++i) {
    out.increments.row(i) = fine.increments.row(2 * i) + fine.increments.row(2 * i + 1);
  }
  return out;
}

Eigen::VectorXd ones(int m) { return Eigen::VectorXd::Ones(m); }

}  // namespace

TEST_CASE("zero coefficients freeze the state and the Jacobian") {
  const SDECoefficients coeffs = sde_preset("zero", 2, 2);
  const DriverPath path = make_path(64, 2, 1.0 / 64, 1);
  const Eigen::VectorXd x0 = (Eigen::VectorXd(2) << 0.3, -1.2).finished();
  const FlowState flow = euler_solve(coeffs, x0, path);
  CHECK(flow.n_steps() == 64);
  CHECK((flow.terminal() - x0).norm() == 0.0);
  CHECK((flow.terminal_k() - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
  CHECK(gamma_sde(flow).norm() == 0.0);
}

TEST_CASE("additive coefficients integrate exactly and grid-independently") {
  const SDECoefficients coeffs = sde_preset("additive", 2, 2);
  const Eigen::VectorXd x0 = ones(2);
  const Eigen::MatrixXd sigma = eval_sigma(coeffs, x0, x0);  // constant in z

  const DriverPath path = make_path(64, 2, 1.0 / 64, 2);
  const FlowState flow = euler_solve(coeffs, x0, path);
  Eigen::VectorXd b_total = Eigen::VectorXd::Zero(2);
  for (Eigen::Index i = 0; i < path.increments.rows(); ++i) {
    b_total += path.increments.row(i).transpose();
  }
  CHECK((flow.terminal() - (x0 + sigma * b_total)).norm() <= 1e-14);
  CHECK((flow.terminal_k() - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);

  const Eigen::MatrixXd expected = sigma * sigma.transpose();  // horizon 1
  CHECK((gamma_sde(flow) - expected).cwiseAbs().maxCoeff() <= 1e-12);

  // gamma is a Riemann sum of a constant: the step count cancels.
  const FlowState fine = euler_solve(coeffs, x0, make_path(256, 2, 1.0 / 256, 3));
  CHECK((gamma_sde(fine) - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("scalar linear flow: Jacobian tracks X/x and gamma has a closed form") {
  const SDEPresetParams params;
  const SDECoefficients coeffs = sde_preset("linear", 1, 1, params);
  const double x0 = 0.7;
  const DriverPath path = make_path(128, 1, 1.0 / 128, 4);
  const FlowState flow = euler_solve(coeffs, Eigen::VectorXd::Constant(1, x0), path);
  for (int v = 0; v <= flow.n_steps(); ++v) {
    CHECK(flow.k[v](0, 0) * x0 == doctest::Approx(flow.x[v](0)).epsilon(1e-13));
  }
  // W_v = K_v^{-1} a X_v = a x0, so gamma = K_T^2 a^2 x0^2 T = a^2 X_T^2 T.
  const double xt = flow.terminal()(0);
  const double expected = params.a * params.a * xt * xt;  // T = 1
  CHECK(gamma_sde(flow)(0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gamma is symmetric PSD for the affine and rotation presets") {
  struct Case {
    const char* name;
    int m, d;
  };
  for (const Case& c : {Case{"affine", 2, 2}, Case{"rotation", 2, 1}, Case{"smooth", 1, 1}}) {
    const SDECoefficients coeffs = sde_preset(c.name, c.m, c.d);
    const DriverPath path = make_path(128, c.d, 1.0 / 128, 5);
    const Eigen::MatrixXd g = gamma_sde(coeffs, 0.5 * ones(c.m), path);
    CHECK((g - g.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, g.norm()));
  }
}

TEST_CASE("degenerate Jacobians and blow-ups are reported") {
  SDECoefficients stiff;
  stiff.m = 1;
  stiff.d = 1;
  stiff.sigma = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Zero(1, 1);
  };
  // One Euler step of B(z) = -z/dt sends K to exactly zero.
  stiff.drift = [](const Eigen::VectorXd& z, const Eigen::VectorXd&) { return -4.0 * z; };
  stiff.drift_jac = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Constant(1, 1, -4.0);
  };
  const DriverPath path = make_path(4, 1, 0.25, 6);
  CHECK_THROWS_AS(euler_solve(stiff, ones(1), path), SingularJacobian);

  SDECoefficients nan_drift = stiff;
  nan_drift.drift = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::VectorXd::Constant(1, std::numeric_limits<double>::quiet_NaN());
  };
  nan_drift.drift_jac = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Zero(1, 1);
  };
  CHECK_THROWS_AS(euler_solve(nan_drift, ones(1), path), NonFiniteState);
}

TEST_CASE("gradient draws: zero diffusion gives the zero gradient") {
  const SDECoefficients coeffs = sde_preset("zero", 2, 2);
  const FlowState flow = euler_solve(coeffs, ones(2), make_path(32, 2, 1.0 / 32, 7));
  Rng rng(8);
  CHECK(flat_sde_sample(flow, rng).norm() == 0.0);
}

TEST_CASE("gradient draws are centered with covariance gamma_sde") {
  const SDECoefficients coeffs = sde_preset("affine", 2, 2);
  const DriverPath path = make_path(128, 2, 1.0 / 128, 9);
  const FlowState flow = euler_solve(coeffs, 0.8 * ones(2), path);
  const Eigen::MatrixXd ref = gamma_sde(flow);
  const Eigen::MatrixXd draws = flat_sde_samples(flow, 10, 20000);
  CHECK(test_util::max_sigma_units(draws, ref) < 3.0);
  // Row determinism of the sample matrix.
  const Eigen::VectorXd row3 = flat_sde_sample(coeffs, 0.8 * ones(2), path, derive_seed(10, 3));
  CHECK((draws.row(3).transpose() - row3).norm() == 0.0);
}

TEST_CASE("additive scalar gradient is exactly Gaussian N(0, sigma^2 T)") {
  const SDEPresetParams params;
  const SDECoefficients coeffs = sde_preset("additive", 1, 1, params);
  const FlowState flow = euler_solve(coeffs, ones(1), make_path(64, 1, 1.0 / 64, 11));
  const Eigen::MatrixXd draws = flat_sde_samples(flow, 12, 100000);
  std::vector<double> vals(draws.rows());
  for (Eigen::Index i = 0; i < draws.rows(); ++i) vals[i] = draws(i, 0);
  CHECK(test_util::ks_normal(vals, 0.0, params.sigma0) < 0.01);
}

TEST_CASE("terminal Jacobian is consistent with a directional difference") {
  struct Case {
    const char* name;
    int m, d;
  };
  const double eps = 1e-6;
  for (const Case& c : {Case{"smooth", 1, 1}, Case{"affine", 2, 2}, Case{"rotation", 2, 1}}) {
    const SDECoefficients coeffs = sde_preset(c.name, c.m, c.d);
    const DriverPath path = make_path(1024, c.d, 1.0 / 1024, 13);
    Eigen::VectorXd x0 = 0.6 * ones(c.m);
    Eigen::VectorXd h = ones(c.m);
    if (c.m == 2) h << 0.6, -0.8;
    const FlowState flow = euler_solve(coeffs, x0, path);
    const Eigen::VectorXd lhs = flow.terminal_k() * h;
    const Eigen::VectorXd shifted = euler_solve(coeffs, x0 + eps * h, path).terminal();
    const Eigen::VectorXd fd = (shifted - flow.terminal()) / eps;
    CHECK((lhs - fd).norm() / std::max(lhs.norm(), 1e-300) < 1e-3);
  }
}

TEST_CASE("the discrete flow map converges under grid refinement") {
  const SDECoefficients coeffs = sde_preset("smooth", 1, 1);
  const Eigen::VectorXd x0 = ones(1);
  // RMS over realizations; a single path's level difference is too noisy to
  // carry a rate estimate.
  std::vector<double> diff_sq(3, 0.0);  // 128 vs 256, 256 vs 512, 512 vs 1024
  const int n_real = 200;
  for (int r = 0; r < n_real; ++r) {
    std::vector<DriverPath> paths(4);
    paths[3] = make_path(1024, 1, 1.0 / 1024, derive_seed(14, r));
    for (int k = 2; k >= 0; --k) paths[k] = coarsen(paths[k + 1]);
    std::vector<Eigen::VectorXd> terminals(4);
    for (int k = 0; k < 4; ++k) terminals[k] = euler_solve(coeffs, x0, paths[k]).terminal();
    for (int k = 0; k < 3; ++k) diff_sq[k] += (terminals[k] - terminals[k + 1]).squaredNorm();
  }
  std::vector<double> diff(3);
  for (int k = 0; k < 3; ++k) diff[k] = std::sqrt(diff_sq[k] / n_real);
  CHECK(diff[0] > diff[1]);
  CHECK(diff[1] > diff[2]);
  // Consecutive-level coupling of the Euler scheme loses the strong rate 1/2;
  // the window is 3 sigma around it for this sample size.
  for (int k = 0; k < 2; ++k) {
    const double order = std::log2(diff[k] / diff[k + 1]);
    CHECK(order > 0.2);
    CHECK(order < 1.2);
  }
}

TEST_CASE("spanning matrices reduce to sigma in the flat cases") {
  const SDECoefficients add = sde_preset("additive", 2, 2);
  const Eigen::VectorXd x0 = ones(2);
  const DriverPath path = make_path(64, 2, 1.0 / 64, 15);
  const Eigen::MatrixXd sigma = eval_sigma(add, x0, x0);
  for (const Eigen::MatrixXd& s : spanning_matrices(add, x0, path, {0, 17, 64})) {
    CHECK((s - sigma).cwiseAbs().maxCoeff() <= 1e-12);
  }

  // Scalar linear flow: K_T K_v^{-1} sigma(X_v) = a x0 K_T = a X_T for all v.
  const SDEPresetParams params;
  const SDECoefficients lin = sde_preset("linear", 1, 1, params);
  const DriverPath lp = make_path(64, 1, 1.0 / 64, 16);
  const FlowState flow = euler_solve(lin, ones(1), lp);
  const double target = params.a * flow.terminal()(0);
  for (const Eigen::MatrixXd& s : spanning_matrices(flow, {0, 31, 64})) {
    CHECK(s(0, 0) == doctest::Approx(target).epsilon(1e-12));
  }

  // The last index is always sigma evaluated at the terminal state.
  const SDECoefficients smooth = sde_preset("smooth", 1, 1);
  const FlowState sf = euler_solve(smooth, ones(1), make_path(64, 1, 1.0 / 64, 17));
  const Eigen::MatrixXd s_term = spanning_matrices(sf, {64})[0];
  CHECK((s_term - eval_sigma(smooth, sf.terminal(), ones(1))).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("moment check: scale-invariant, frozen and non-vanishing coefficients") {
  std::vector<Eigen::VectorXd> grid;
  for (double norm : {0.01, 0.1, 1.0, 10.0}) grid.push_back(Eigen::VectorXd::Constant(1, norm));

  const MomentCheckReport lin = lemma3_moment_check(sde_preset("linear", 1, 1), 1.0, grid, 400, 18);
  CHECK(lin.rows.size() == 4);
  // Shared driver paths make the p=2 ratio exactly scale invariant in 1-d.
  CHECK(lin.spread_p2 <= 1e-12);
  CHECK(lin.bounded);
  CHECK(lin.max_ratio_p2 == doctest::Approx(lin.rows[0].ratio_p2));
  CHECK(lin.fitted_k > 0.0);

  const MomentCheckReport frozen =
      lemma3_moment_check(sde_preset("zero", 1, 1), 1.0, grid, 50, 19);
  for (const auto& row : frozen.rows) {
    CHECK(std::abs(row.ratio_p1 - 1.0) <= 1e-12);
    CHECK(std::abs(row.ratio_p2 - 1.0) <= 1e-12);
  }
  CHECK(frozen.bounded);

  CHECK_THROWS_AS(lemma3_moment_check(sde_preset("additive", 1, 1), 1.0, grid, 10, 20),
                  CoefficientNotVanishing);
}

TEST_CASE("Wiener mark space hands out driver paths and flow gammas") {
  const SDECoefficients coeffs = sde_preset("affine", 2, 2);
  const WienerMarkSpace space(coeffs, 32, 1.0 / 32);
  CHECK(space.id() == "wiener");
  CHECK(space.horizon() == 1.0);

  Rng a(21), b(21);
  const Mark ma = space.sample(a);
  const Mark mb = space.sample(b);
  CHECK(is_path(ma));
  CHECK(mark_path(ma).increments.rows() == 32);
  CHECK(mark_path(ma).increments.cols() == 2);
  CHECK(mark_path(ma) == mark_path(mb));

  // Identity outer map: gamma_one is the flow gamma started at `start`.
  OneMarkMap g;
  g.output_dim = 2;
  const Eigen::VectorXd start = 0.5 * ones(2);
  g.eval = [&](const Mark& u) { return euler_solve(coeffs, start, mark_path(u)).terminal(); };
  g.sde = OneMarkMap::SdeTerminal{
      start, [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(2, 2); }};
  const Eigen::MatrixXd got = space.gamma_one(g, ma);
  const Eigen::MatrixXd expected = gamma_sde(coeffs, start, mark_path(ma));
  CHECK((got - expected).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, expected.norm()));

  OneMarkMap no_sde = angle_map_scalar([](double theta) { return theta; });
  CHECK_THROWS_AS(space.gamma_one(no_sde, ma), UnsupportedFunctional);
}

TEST_CASE("jump-sum of diffusion terminals accumulates per-jump flow gammas") {
  const SDECoefficients coeffs = sde_preset("affine", 2, 2);
  const WienerMarkSpace space(coeffs, 32, 1.0 / 32);
  const FunctionalPtr F = sde_jump_sum(space);

  Rng rng(22);
  std::vector<MarkedPoint> pts;
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(2, 2);
  for (int i = 0; i < 2; ++i) {
    BasePoint base;
    base.time = 0.2 + 0.3 * i;
    base.attribute = (Eigen::VectorXd(2) << 0.4 + 0.2 * i, -0.3).finished();
    const Mark mark = space.sample(rng);
    pts.push_back(MarkedPoint{base, mark});
    expected += gamma_sde(coeffs, base.attribute, mark_path(mark));
  }
  const Configuration cfg = Configuration::from_points("wiener", 1.0, pts);

  const Eigen::VectorXd sum = F->eval(cfg);
  Eigen::VectorXd direct = Eigen::VectorXd::Zero(2);
  for (const MarkedPoint& p : pts) {
    direct += euler_solve(coeffs, p.base.attribute, mark_path(p.mark)).terminal();
  }
  CHECK((sum - direct).norm() <= 1e-12 * std::max(1.0, direct.norm()));

  const Eigen::MatrixXd got = gamma_total(*F, cfg, space);
  CHECK((got - expected).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, expected.norm()));

  // The in-place route transports the same flow gammas.
  const Eigen::MatrixXd oracle = gamma_total_oracle(*F, cfg, space);
  CHECK(matrix_rel_dev(got, oracle) <= 1e-12);
}

TEST_CASE("preset catalogue rejects bad names and dimensions") {
  CHECK_THROWS_AS(sde_preset("no-such-preset", 1, 1), Error);
  CHECK_THROWS_AS(sde_preset("rotation", 3, 1), Error);
  CHECK_THROWS_AS(sde_preset("smooth", 2, 2), Error);
  CHECK(sde_preset_names().size() == 8);

  const auto cols = prop4_columns("additive", 2, 2);
  REQUIRE(cols.size() == 2);
  const SDECoefficients add = sde_preset("additive", 2, 2);
  const Eigen::VectorXd x = (Eigen::VectorXd(2) << 0.3, 0.9).finished();
  const Eigen::MatrixXd sigma = eval_sigma(add, x, x);
  for (int j = 0; j < 2; ++j) {
    CHECK((cols[j](x) - sigma.col(j)).norm() == 0.0);
  }
}
