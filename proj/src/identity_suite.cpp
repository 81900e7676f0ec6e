#include "lent/identity_suite.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "lent/config_space.hpp"
#include "lent/density.hpp"
#include "lent/lent_particle.hpp"

namespace lent {

namespace {

// Max entrywise |mean - reference| in standard-error units over columns of
// per-draw values.
double sigma_units(const Eigen::MatrixXd& draws, const Eigen::VectorXd& reference) {
  const Eigen::Index n = draws.rows();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < draws.cols(); ++j) {
    const double mean = draws.col(j).mean();
    const double var = (draws.col(j).array() - mean).square().sum() / (n - 1);
    const double se = std::sqrt(var / n);
    const double dev = std::abs(mean - reference[j]);
    if (se > 0.0) {
      worst = std::max(worst, dev / se);
    } else if (dev > 0.0) {
      worst = std::numeric_limits<double>::infinity();
    }
  }
  return worst;
}

Eigen::MatrixXd second_moment_products(const Eigen::MatrixXd& draws) {
  const Eigen::Index n = draws.rows();
  const Eigen::Index k = draws.cols();
  Eigen::MatrixXd products(n, k * k);
  for (Eigen::Index d = 0; d < n; ++d) {
    Eigen::Index at = 0;
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) products(d, at++) = draws(d, i) * draws(d, j);
  }
  return products;
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
  Eigen::VectorXd out(m.rows() * m.cols());
  Eigen::Index at = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[at++] = m(i, j);
  return out;
}

}  // namespace

SuiteReport run_identity_suite_checks(const MarkSpace& space, const SuiteParams& params) {
  SuiteReport report;
  auto add = [&report](std::string name, double dev, double tol) {
    SuiteRow row{std::move(name), dev, tol, dev <= tol};
    if (!row.pass) report.all_pass = false;
    report.rows.push_back(std::move(row));
  };

  const ProcessSpec spec = power_law_spec(params.horizon, params.truncation);
  std::vector<Configuration> cfgs;
  cfgs.reserve(params.n_configs);
  for (int i = 0; i < params.n_configs; ++i)
    cfgs.push_back(
        simulate_configuration(spec, space, derive_seed(params.seed, static_cast<std::uint64_t>(i))));

  const FunctionalPtr linear = make_linear(radial_sine_map());
  const FunctionalPtr expo = make_exp(radial_sine_map());
  const FunctionalPtr polar = polar_jump_sum(params.horizon);
  const FunctionalPtr opaque = make_opaque(linear);

  // Two assembly routes of the same sum, one lending particles through the
  // space and one differentiating in place.
  const std::vector<std::pair<std::string, FunctionalPtr>> families = {
      {"oracle-linear", linear},
      {"oracle-exp", expo},
      {"oracle-polar", polar},
      {"oracle-fd-fallback", opaque},
  };
  for (const auto& [name, F] : families) {
    double worst = 0.0;
    for (const Configuration& cfg : cfgs)
      worst = std::max(worst, matrix_rel_dev(gamma_total(*F, cfg, space), gamma_total_oracle(*F, cfg, space)));
    add(name, worst, 1e-12);
  }

  // Gamma[e^{-N(f)}] = e^{-2N(f)} Gamma[N(f)].
  {
    double worst = 0.0;
    for (const Configuration& cfg : cfgs) {
      const double scale = std::exp(-2.0 * linear->eval(cfg)[0]);
      worst = std::max(worst, matrix_rel_dev(gamma_total(*expo, cfg, space),
                                      scale * gamma_total(*linear, cfg, space)));
    }
    add("exp-closed-form", worst, 1e-10);
  }

  // Gamma[N(f)] = N(gamma[f]), the per-point derivative squares summed.
  {
    const PointMap f = radial_sine_map();
    double worst = 0.0;
    for (const Configuration& cfg : cfgs) {
      double direct = 0.0;
      for (const MarkedPoint& p : cfg.points()) {
        const double slope = f.dtheta(p.base, mark_angle(p.mark))[0];
        direct += slope * slope;
      }
      worst = std::max(worst, matrix_rel_dev(gamma_total(*linear, cfg, space),
                                      Eigen::MatrixXd::Constant(1, 1, direct)));
    }
    add("linear-closed-form", worst, 1e-10);
  }

  // gamma[phi o g] = phi'(g)^2 gamma[g] for smooth phi.
  {
    Rng rng(derive_seed(params.seed, 101));
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const double c = 0.5 + rng.uniform();
      const double theta = kTwoPi * rng.uniform();
      const OneMarkMap g = angle_map_scalar([c](double th) { return c * std::sin(th); });
      const OneMarkMap composed = angle_map_scalar([c](double th) {
        const double y = c * std::sin(th);
        return y * y * y + 2.0 * y;
      });
      const double y = c * std::sin(theta);
      const double phi_prime = 3.0 * y * y + 2.0;
      const Eigen::MatrixXd lhs = space.gamma_one(composed, Mark(theta));
      const Eigen::MatrixXd rhs = phi_prime * phi_prime * space.gamma_one(g, Mark(theta));
      worst = std::max(worst, matrix_rel_dev(lhs, rhs));
    }
    add("chain-rule", worst, 1e-6);
  }

  // Positive semidefiniteness and rank <= 1 of one-mark contributions.
  {
    double psd_dev = 0.0;
    double rank_dev = 0.0;
    const int n_psd = std::min<int>(20, static_cast<int>(cfgs.size()));
    for (int i = 0; i < n_psd; ++i) {
      const Configuration& cfg = cfgs[i];
      for (const FunctionalPtr& F : {linear, expo, polar}) {
        const Eigen::MatrixXd gamma = gamma_total(*F, cfg, space);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gamma, Eigen::EigenvaluesOnly);
        psd_dev = std::max(psd_dev, -eig.eigenvalues().minCoeff());
      }
      for (const MarkedPoint& p : cfg.points()) {
        const Configuration rest = eps_minus(cfg, p);
        const Eigen::MatrixXd one = space.gamma_one(polar->one_mark_map(rest, p.base), p.mark);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(one);
        const Eigen::VectorXd sv = svd.singularValues();
        if (sv[0] > 0.0) rank_dev = std::max(rank_dev, sv[1] / sv[0]);
      }
    }
    add("gamma-psd", std::max(psd_dev, 0.0), 1e-12);
    add("one-mark-rank", rank_dev, 1e-12);
  }

  // rho-mean zero and rho-covariance = gamma_one for the one-mark gradient.
  {
    const double r = 1.2;
    const double theta = 0.7;
    const OneMarkMap g = angle_map(2, [r](double th) {
      Eigen::VectorXd v(2);
      v[0] = r * std::cos(th);
      v[1] = r * std::sin(th);
      return v;
    });
    const Eigen::MatrixXd gamma = space.gamma_one(g, Mark(theta));
    Eigen::MatrixXd draws(params.mc_draws, 2);
    const std::uint64_t row_seed = derive_seed(params.seed, 102);
    for (int d = 0; d < params.mc_draws; ++d) {
      Rng rng(derive_seed(row_seed, static_cast<std::uint64_t>(d)));
      draws.row(d) = space.flat_sample(g, Mark(theta), rng).transpose();
    }
    add("flat-centering", sigma_units(draws, Eigen::VectorXd::Zero(2)), 3.0);
    add("flat-isometry", sigma_units(second_moment_products(draws), flatten(gamma)), 3.0);
  }

  // rho-covariance of the configuration gradient = gamma_total.
  {
    double worst = 0.0;
    int used = 0;
    const std::uint64_t row_seed = derive_seed(params.seed, 103);
    for (const Configuration& cfg : cfgs) {
      if (cfg.empty()) continue;
      const Eigen::MatrixXd gamma = gamma_total(*polar, cfg, space);
      const Eigen::MatrixXd draws =
          sharp_samples(*polar, cfg, space, derive_seed(row_seed, used), params.mc_draws);
      worst = std::max(worst, sigma_units(second_moment_products(draws), flatten(gamma)));
      if (++used >= params.isometry_configs) break;
    }
    add("sharp-isometry", worst, 3.0);
  }

  // Adding a point to a sum functional adds exactly one gamma_one term.
  {
    const Configuration& cfg = cfgs.empty() ? Configuration() : cfgs.front();
    MarkedPoint extra;
    extra.base.time = 0.42;
    extra.base.attribute = Eigen::VectorXd::Constant(1, 0.9);
    Rng rng(derive_seed(params.seed, 104));
    extra.mark = space.sample(rng);
    const Configuration grown = eps_plus(cfg, extra);
    const Eigen::MatrixXd before = gamma_total(*linear, cfg, space);
    const Eigen::MatrixXd after = gamma_total(*linear, grown, space);
    const Eigen::MatrixXd term =
        space.gamma_one(linear->one_mark_map(cfg, extra.base), extra.mark);
    add("localization", matrix_rel_dev(after - before, term), 1e-12);
  }

  // Diagonal blocks of a stacked functional equal the component gammas.
  {
    const FunctionalPtr stacked = make_stacked({polar, linear});
    double worst = 0.0;
    const int n_cfg = std::min<int>(10, static_cast<int>(cfgs.size()));
    for (int i = 0; i < n_cfg; ++i) {
      const Eigen::MatrixXd whole = gamma_total(*stacked, cfgs[i], space);
      worst = std::max(worst, matrix_rel_dev(whole.topLeftCorner(2, 2), gamma_total(*polar, cfgs[i], space)));
      worst = std::max(worst,
                       matrix_rel_dev(whole.bottomRightCorner(1, 1), gamma_total(*linear, cfgs[i], space)));
    }
    add("stacked-blocks", worst, 1e-12);
  }

  return report;
}

}  // namespace lent
