#include "lent/sde_flow.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>
#include <limits>

#include "lent/errors.hpp"

namespace lent {

Eigen::VectorXd eval_drift(const SDECoefficients& c, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& x) {
  if (!c.drift) return Eigen::VectorXd::Zero(c.m);
  return c.drift(z, x);
}

Eigen::MatrixXd eval_sigma(const SDECoefficients& c, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& x) {
  if (!c.sigma) return Eigen::MatrixXd::Zero(c.m, c.d);
  return c.sigma(z, x);
}

Eigen::MatrixXd eval_drift_jac(const SDECoefficients& c, const Eigen::VectorXd& z,
                               const Eigen::VectorXd& x) {
  if (c.drift_jac) return c.drift_jac(z, x);
  const double h = 1e-6 * (z.norm() + 1.0);
  Eigen::MatrixXd jac(c.m, c.m);
  for (int i = 0; i < c.m; ++i) {
    Eigen::VectorXd zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    jac.col(i) = (eval_drift(c, zp, x) - eval_drift(c, zm, x)) / (2.0 * h);
  }
  return jac;
}

std::vector<Eigen::MatrixXd> eval_sigma_jac(const SDECoefficients& c, const Eigen::VectorXd& z,
                                            const Eigen::VectorXd& x) {
  std::vector<Eigen::MatrixXd> jacs;
  jacs.reserve(c.d);
  if (c.sigma_jac) {
    jacs = c.sigma_jac(z, x);
    if (static_cast<int>(jacs.size()) != c.d)
      throw Error("sigma_jac must return one Jacobian per driving component");
    return jacs;
  }
  const double h = 1e-6 * (z.norm() + 1.0);
  for (int j = 0; j < c.d; ++j) jacs.emplace_back(Eigen::MatrixXd::Zero(c.m, c.m));
  for (int i = 0; i < c.m; ++i) {
    Eigen::VectorXd zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    const Eigen::MatrixXd ds = (eval_sigma(c, zp, x) - eval_sigma(c, zm, x)) / (2.0 * h);
    for (int j = 0; j < c.d; ++j) jacs[j].col(i) = ds.col(j);
  }
  return jacs;
}

namespace {

void check_finite(const Eigen::MatrixXd& mat, int step) {
  if (!mat.allFinite())
    throw NonFiniteState("SDE state blew up at step " + std::to_string(step));
}

}  // namespace

FlowState euler_solve(const SDECoefficients& coeffs, const Eigen::VectorXd& x,
                      const DriverPath& path) {
  if (path.dims() != coeffs.d) throw Error("driver path dimension does not match coefficients");
  if (x.size() != coeffs.m) throw Error("initial condition dimension does not match coefficients");
  const int n = path.n_steps();
  const int m = coeffs.m;

  FlowState flow;
  flow.dt = path.dt;
  flow.x.reserve(n + 1);
  flow.k.reserve(n + 1);
  flow.k_inv.reserve(n + 1);
  flow.w.reserve(n + 1);

  std::vector<Eigen::MatrixXd> sigmas;
  sigmas.reserve(n + 1);

  Eigen::VectorXd state = x;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(m, m);
  flow.x.push_back(state);
  flow.k.push_back(jac);
  sigmas.push_back(eval_sigma(coeffs, state, x));

  for (int v = 0; v < n; ++v) {
    const Eigen::MatrixXd& sig = sigmas.back();
    const Eigen::VectorXd b = eval_drift(coeffs, state, x);
    const std::vector<Eigen::MatrixXd> dsig = eval_sigma_jac(coeffs, state, x);
    const Eigen::MatrixXd db = eval_drift_jac(coeffs, state, x);
    const Eigen::VectorXd dw = path.increments.row(v).transpose();

    Eigen::MatrixXd jac_next = jac + db * jac * path.dt;
    for (int j = 0; j < coeffs.d; ++j) jac_next += dsig[j] * jac * dw[j];
    state = state + sig * dw + b * path.dt;
    jac = std::move(jac_next);

    check_finite(state, v + 1);
    check_finite(jac, v + 1);
    flow.x.push_back(state);
    flow.k.push_back(jac);
    sigmas.push_back(eval_sigma(coeffs, state, x));
  }

  for (int v = 0; v <= n; ++v) {
    const Eigen::MatrixXd& kv = flow.k[v];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(kv);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (!(smin > 0.0) || smax / smin > kJacobianConditionLimit)
      throw SingularJacobian("flow Jacobian condition number exceeds limit at step " +
                             std::to_string(v));
    flow.k_inv.push_back(Eigen::PartialPivLU<Eigen::MatrixXd>(kv).inverse());
    flow.w.push_back(flow.k_inv.back() * sigmas[v]);
  }
  return flow;
}

Eigen::MatrixXd gamma_sde(const FlowState& flow) {
  const int m = static_cast<int>(flow.x.front().size());
  Eigen::MatrixXd accum = Eigen::MatrixXd::Zero(m, m);
  for (int v = 0; v < flow.n_steps(); ++v) accum += flow.w[v] * flow.w[v].transpose();
  accum *= flow.dt;
  Eigen::MatrixXd gamma = flow.terminal_k() * accum * flow.terminal_k().transpose();
  return 0.5 * (gamma + gamma.transpose());
}

Eigen::MatrixXd gamma_sde(const SDECoefficients& coeffs, const Eigen::VectorXd& x,
                          const DriverPath& path) {
  return gamma_sde(euler_solve(coeffs, x, path));
}

Eigen::VectorXd flat_sde_sample(const FlowState& flow, Rng& rng) {
  const int m = static_cast<int>(flow.x.front().size());
  const double scale = std::sqrt(flow.dt);
  Eigen::VectorXd accum = Eigen::VectorXd::Zero(m);
  const int d = static_cast<int>(flow.w.front().cols());
  Eigen::VectorXd dw(d);
  for (int v = 0; v < flow.n_steps(); ++v) {
    for (int j = 0; j < d; ++j) dw[j] = scale * rng.normal();
    accum += flow.w[v] * dw;
  }
  return flow.terminal_k() * accum;
}

Eigen::VectorXd flat_sde_sample(const SDECoefficients& coeffs, const Eigen::VectorXd& x,
                                const DriverPath& path, std::uint64_t seed) {
  const FlowState flow = euler_solve(coeffs, x, path);
  Rng rng(seed);
  return flat_sde_sample(flow, rng);
}

Eigen::MatrixXd flat_sde_samples(const FlowState& flow, std::uint64_t seed, int n_draws) {
  const int m = static_cast<int>(flow.x.front().size());
  Eigen::MatrixXd out(n_draws, m);
  for (int i = 0; i < n_draws; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    out.row(i) = flat_sde_sample(flow, rng).transpose();
  }
  return out;
}

std::vector<Eigen::MatrixXd> spanning_matrices(const FlowState& flow,
                                               const std::vector<int>& v_indices) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(v_indices.size());
  for (int v : v_indices) {
    if (v < 0 || v > flow.n_steps()) throw Error("spanning_matrices: step index out of range");
    out.push_back(flow.terminal_k() * flow.w[v]);
  }
  return out;
}

std::vector<Eigen::MatrixXd> spanning_matrices(const SDECoefficients& coeffs,
                                               const Eigen::VectorXd& x, const DriverPath& path,
                                               const std::vector<int>& v_indices) {
  return spanning_matrices(euler_solve(coeffs, x, path), v_indices);
}

MomentCheckReport lemma3_moment_check(const SDECoefficients& coeffs, double t,
                                      const std::vector<Eigen::VectorXd>& x_grid, int n_paths,
                                      std::uint64_t seed, int n_steps) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(coeffs.m);
  const double drift_at_zero = eval_drift(coeffs, zero, zero).cwiseAbs().maxCoeff();
  const double sigma_at_zero = eval_sigma(coeffs, zero, zero).cwiseAbs().maxCoeff();
  if (drift_at_zero >= 1e-12 || sigma_at_zero >= 1e-12)
    throw CoefficientNotVanishing("coefficients do not vanish at zero");

  MomentCheckReport report;
  report.t = t;
  const double dt = t / n_steps;

  std::vector<DriverPath> paths;
  paths.reserve(n_paths);
  for (int r = 0; r < n_paths; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    paths.push_back(sample_driver_path(n_steps, coeffs.d, dt, rng));
  }

  for (const Eigen::VectorXd& x : x_grid) {
    const double norm = x.norm();
    if (!(norm > 0.0)) throw Error("lemma3_moment_check: grid points must be nonzero");
    double sum_p1 = 0.0;
    double sum_p2 = 0.0;
    for (const DriverPath& path : paths) {
      const double final_norm = euler_solve(coeffs, x, path).terminal().norm();
      sum_p1 += final_norm;
      sum_p2 += final_norm * final_norm;
    }
    MomentCheckReport::Row row;
    row.x_norm = norm;
    row.ratio_p1 = sum_p1 / n_paths / norm;
    row.ratio_p2 = sum_p2 / n_paths / (norm * norm);
    report.rows.push_back(row);
  }

  double min_p2 = std::numeric_limits<double>::infinity();
  for (const auto& row : report.rows) {
    report.max_ratio_p1 = std::max(report.max_ratio_p1, row.ratio_p1);
    report.max_ratio_p2 = std::max(report.max_ratio_p2, row.ratio_p2);
    min_p2 = std::min(min_p2, row.ratio_p2);
  }
  report.spread_p2 = min_p2 > 0.0 ? report.max_ratio_p2 / min_p2 - 1.0 : 0.0;

  // Smallest k with k e^{kt} >= max ratio (both moments); monotone, bisection.
  const double target = std::max({report.max_ratio_p1, report.max_ratio_p2, 1e-300});
  double lo = 0.0, hi = 1.0;
  while (hi * std::exp(hi * t) < target && hi < 1e6) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mid * std::exp(mid * t) < target ? lo : hi) = mid;
  }
  report.fitted_k = hi;
  report.bounded = std::isfinite(report.max_ratio_p1) && std::isfinite(report.max_ratio_p2) &&
                   hi < 1e6;
  return report;
}

Mark WienerMarkSpace::sample(Rng& rng) const {
  return Mark(sample_driver_path(n_steps_, coeffs_.d, dt_, rng));
}

Eigen::MatrixXd WienerMarkSpace::gamma_one(const OneMarkMap& g, const Mark& u) const {
  if (!g.sde)
    throw UnsupportedFunctional(
        "Wiener mark space needs SDE-terminal structure on the one-mark map");
  const FlowState flow = euler_solve(coeffs_, g.sde->start, mark_path(u));
  const Eigen::MatrixXd inner = gamma_sde(flow);
  if (!g.sde->outer_jacobian) return inner;
  const Eigen::MatrixXd jac = g.sde->outer_jacobian(flow.terminal());
  Eigen::MatrixXd gamma = jac * inner * jac.transpose();
  return 0.5 * (gamma + gamma.transpose());
}

Eigen::VectorXd WienerMarkSpace::flat_sample(const OneMarkMap& g, const Mark& u, Rng& rng) const {
  if (!g.sde)
    throw UnsupportedFunctional(
        "Wiener mark space needs SDE-terminal structure on the one-mark map");
  const FlowState flow = euler_solve(coeffs_, g.sde->start, mark_path(u));
  const Eigen::VectorXd inner = flat_sde_sample(flow, rng);
  if (!g.sde->outer_jacobian) return inner;
  return g.sde->outer_jacobian(flow.terminal()) * inner;
}

FunctionalPtr sde_jump_sum(const WienerMarkSpace& space) {
  PointMap transform;
  transform.output_dim = space.coefficients().m;
  transform.sde_terminal = true;
  transform.eval = [coeffs = space.coefficients()](const BasePoint& base, const Mark& mark) {
    return euler_solve(coeffs, base.attribute, mark_path(mark)).terminal();
  };
  return make_jump_sum(std::move(transform));
}

namespace {

Eigen::VectorXd spiral_field(const Eigen::VectorXd& x) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(2);
  const double r = x.norm();
  if (r > 0.0) {
    out[0] = r * std::cos(1.0 / r);
    out[1] = r * std::sin(1.0 / r);
  }
  return out;
}

void require_dims(const std::string& name, int m, int d, int want_m, int want_d) {
  if (m != want_m || d != want_d)
    throw Error("preset '" + name + "' requires m=" + std::to_string(want_m) +
                ", d=" + std::to_string(want_d));
}

}  // namespace

SDECoefficients sde_preset(const std::string& name, int m, int d, const SDEPresetParams& p) {
  SDECoefficients c;
  c.m = m;
  c.d = d;
  if (name == "zero") {
    return c;
  }
  if (name == "additive") {
    Eigen::MatrixXd sig0 = Eigen::MatrixXd::Zero(m, d);
    for (int i = 0; i < std::min(m, d); ++i) sig0(i, i) = p.sigma0;
    for (int i = 0; i + 1 < std::min(m, d); ++i) sig0(i, i + 1) = 0.3 * p.sigma0;
    c.sigma = [sig0](const Eigen::VectorXd&, const Eigen::VectorXd&) { return sig0; };
    c.sigma_jac = [m, d](const Eigen::VectorXd&, const Eigen::VectorXd&) {
      return std::vector<Eigen::MatrixXd>(d, Eigen::MatrixXd::Zero(m, m));
    };
    c.drift_jac = [m](const Eigen::VectorXd&, const Eigen::VectorXd&) {
      return Eigen::MatrixXd::Zero(m, m).eval();
    };
    return c;
  }
  if (name == "linear") {
    const double a = p.a;
    c.sigma = [m, d, a](const Eigen::VectorXd& z, const Eigen::VectorXd&) {
      Eigen::MatrixXd sig = Eigen::MatrixXd::Zero(m, d);
      for (int j = 0; j < std::min(m, d); ++j) sig(j, j) = a * z[j];
      return sig;
    };
    c.sigma_jac = [m, d, a](const Eigen::VectorXd&, const Eigen::VectorXd&) {
      std::vector<Eigen::MatrixXd> jacs(d, Eigen::MatrixXd::Zero(m, m));
      for (int j = 0; j < std::min(m, d); ++j) jacs[j](j, j) = a;
      return jacs;
    };
    c.drift_jac = [m](const Eigen::VectorXd&, const Eigen::VectorXd&) {
      return Eigen::MatrixXd::Zero(m, m).eval();
    };
    return c;
  }
  if (name == "rotation") {
    require_dims(name, m, d, 2, 1);
    const double omega = p.omega;
    const double lambda = p.lambda;
    c.sigma = [omega](const Eigen::VectorXd& z, const Eigen::VectorXd&) {
      Eigen::MatrixXd sig(2, 1);
      sig(0, 0) = -omega * z[1];
      sig(1, 0) = omega * z[0];
      return sig;
    };
    c.sigma_jac = [omega](const Eigen::VectorXd&, const Eigen::VectorXd&) {
      Eigen::MatrixXd jac(2, 2);
      jac << 0.0, -omega, omega, 0.0;
      return std::vector<Eigen::MatrixXd>{jac};
    };
    c.drift = [lambda](const Eigen::VectorXd& z, const Eigen::VectorXd&) {
      return (-lambda * z).eval();
    };
    c.drift_jac = [lambda](const Eigen::VectorXd&, const Eigen::VectorXd&) {
      return (-lambda * Eigen::MatrixXd::Identity(2, 2)).eval();
    };
    return c;
  }
  if (name == "affine") {
    require_dims(name, m, d, 2, 2);
    const double a = p.a;
    const double s0 = p.sigma0;
    c.sigma = [a, s0](const Eigen::VectorXd& z, const Eigen::VectorXd&) {
      Eigen::MatrixXd sig = Eigen::MatrixXd::Zero(2, 2);
      sig(0, 0) = s0 + 0.2 * a * z[0];
      sig(1, 1) = s0 + 0.2 * a * z[1];
      return sig;
    };
    c.sigma_jac = [a](const Eigen::VectorXd&, const Eigen::VectorXd&) {
      std::vector<Eigen::MatrixXd> jacs(2, Eigen::MatrixXd::Zero(2, 2));
      jacs[0](0, 0) = 0.2 * a;
      jacs[1](1, 1) = 0.2 * a;
      return jacs;
    };
    c.drift = [](const Eigen::VectorXd& z, const Eigen::VectorXd&) {
      Eigen::VectorXd b(2);
      b[0] = 0.1 * z[1];
      b[1] = -0.1 * z[0];
      return b;
    };
    c.drift_jac = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
      Eigen::MatrixXd jac(2, 2);
      jac << 0.0, 0.1, -0.1, 0.0;
      return jac;
    };
    return c;
  }
  if (name == "smooth") {
    require_dims(name, m, d, 1, 1);
    const double s0 = p.sigma0;
    c.sigma = [s0](const Eigen::VectorXd& z, const Eigen::VectorXd&) {
      return Eigen::MatrixXd::Constant(1, 1, s0 * (1.0 + 0.5 * std::sin(z[0])));
    };
    c.sigma_jac = [s0](const Eigen::VectorXd& z, const Eigen::VectorXd&) {
      return std::vector<Eigen::MatrixXd>{
          Eigen::MatrixXd::Constant(1, 1, 0.5 * s0 * std::cos(z[0]))};
    };
    c.drift = [](const Eigen::VectorXd& z, const Eigen::VectorXd&) {
      return Eigen::VectorXd::Constant(1, 0.25 * std::cos(z[0])).eval();
    };
    c.drift_jac = [](const Eigen::VectorXd& z, const Eigen::VectorXd&) {
      return Eigen::MatrixXd::Constant(1, 1, -0.25 * std::sin(z[0])).eval();
    };
    return c;
  }
  if (name == "constant-deficient") {
    require_dims(name, m, d, 2, 1);
    const double s0 = p.sigma0;
    c.sigma = [s0](const Eigen::VectorXd&, const Eigen::VectorXd&) {
      Eigen::MatrixXd sig = Eigen::MatrixXd::Zero(2, 1);
      sig(0, 0) = s0;
      return sig;
    };
    c.sigma_jac = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
      return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Zero(2, 2)};
    };
    c.drift_jac = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
      return Eigen::MatrixXd::Zero(2, 2).eval();
    };
    return c;
  }
  if (name == "xonly-spiral") {
    require_dims(name, m, d, 2, 1);
    c.sigma = [](const Eigen::VectorXd&, const Eigen::VectorXd& x) {
      Eigen::MatrixXd sig(2, 1);
      sig.col(0) = spiral_field(x);
      return sig;
    };
    c.sigma_jac = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
      return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Zero(2, 2)};
    };
    c.drift_jac = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
      return Eigen::MatrixXd::Zero(2, 2).eval();
    };
    return c;
  }
  throw Error("unknown SDE preset '" + name + "'");
}

std::vector<std::string> sde_preset_names() {
  return {"zero",   "additive", "linear",
          "rotation", "affine",   "smooth",
          "constant-deficient", "xonly-spiral"};
}

std::vector<std::function<Eigen::VectorXd(const Eigen::VectorXd&)>> prop4_columns(
    const std::string& name, int m, int d, const SDEPresetParams& params) {
  const SDECoefficients coeffs = sde_preset(name, m, d, params);
  std::vector<std::function<Eigen::VectorXd(const Eigen::VectorXd&)>> cols;
  // A_j as a map of the jump x: evaluated with the first argument frozen at x
  // (the "v close to t" reading, where the state sits at the jump itself).
  for (int j = 0; j < d; ++j) {
    cols.push_back([coeffs, j](const Eigen::VectorXd& x) {
      return eval_sigma(coeffs, x, x).col(j).eval();
    });
  }
  return cols;
}

}  // namespace lent
