#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lent/driver_path.hpp"
#include "lent/lent_particle.hpp"
#include "lent/mark_space.hpp"
#include "lent/rng.hpp"

namespace lent {

// Coefficients of dX = sigma(X, x) dB + B(X, x) dt, X_0 = x in R^m, with d
// driving Brownian components; sigma's columns are the diffusion fields A_j.
// Jacobians are taken with respect to the first argument; when absent they
// fall back to central differences with step 1e-6 * (|z| + 1).
struct SDECoefficients {
  int m = 1;
  int d = 1;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& z, const Eigen::VectorXd& x)> drift;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd& z, const Eigen::VectorXd& x)> sigma;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd& z, const Eigen::VectorXd& x)> drift_jac;
  std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd& z, const Eigen::VectorXd& x)>
      sigma_jac;
};

Eigen::VectorXd eval_drift(const SDECoefficients& c, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& x);
Eigen::MatrixXd eval_sigma(const SDECoefficients& c, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& x);
Eigen::MatrixXd eval_drift_jac(const SDECoefficients& c, const Eigen::VectorXd& z,
                               const Eigen::VectorXd& x);
std::vector<Eigen::MatrixXd> eval_sigma_jac(const SDECoefficients& c, const Eigen::VectorXd& z,
                                            const Eigen::VectorXd& x);

// Euler trajectory plus the flow Jacobian K_v advanced by the variational
// recursion; K_v^{-1} and W_v = K_v^{-1} sigma(X_v, x) are cached per step.
struct FlowState {
  double dt = 0.0;
  std::vector<Eigen::VectorXd> x;      // n+1 states
  std::vector<Eigen::MatrixXd> k;      // n+1 Jacobians, k[0] = I
  std::vector<Eigen::MatrixXd> k_inv;  // n+1 inverses
  std::vector<Eigen::MatrixXd> w;      // n+1 matrices K_v^{-1} sigma(X_v, x)

  int n_steps() const { return static_cast<int>(x.size()) - 1; }
  double horizon() const { return dt * n_steps(); }
  const Eigen::VectorXd& terminal() const { return x.back(); }
  const Eigen::MatrixXd& terminal_k() const { return k.back(); }
};

// Condition-number guard for K_v invertibility.
constexpr double kJacobianConditionLimit = 1e12;

FlowState euler_solve(const SDECoefficients& coeffs, const Eigen::VectorXd& x,
                      const DriverPath& path);

// Discrete carre du champ of the terminal value,
// K_T (sum_v W_v W_v^T dt) K_T^T; symmetric PSD.
Eigen::MatrixXd gamma_sde(const FlowState& flow);
Eigen::MatrixXd gamma_sde(const SDECoefficients& coeffs, const Eigen::VectorXd& x,
                          const DriverPath& path);

// Gradient draw via an independent driver copy: K_T sum_v W_v dB-hat_v.
// Conditionally on the path, mean 0 and covariance exactly gamma_sde.
Eigen::VectorXd flat_sde_sample(const FlowState& flow, Rng& rng);
Eigen::VectorXd flat_sde_sample(const SDECoefficients& coeffs, const Eigen::VectorXd& x,
                                const DriverPath& path, std::uint64_t seed);
// n_draws rows; row i uses the stream derive_seed(seed, i).
Eigen::MatrixXd flat_sde_samples(const FlowState& flow, std::uint64_t seed, int n_draws);

// K_T K_v^{-1} sigma(X_v, x) for each requested step index (0..n_steps).
std::vector<Eigen::MatrixXd> spanning_matrices(const FlowState& flow,
                                               const std::vector<int>& v_indices);
std::vector<Eigen::MatrixXd> spanning_matrices(const SDECoefficients& coeffs,
                                               const Eigen::VectorXd& x, const DriverPath& path,
                                               const std::vector<int>& v_indices);

// Scale-invariance / growth-bound report for coefficients vanishing at zero:
// estimates E|X_t^x|^p / |x|^p for p in {1,2} over the grid, with driver
// paths shared across grid points, and fits the smallest k with
// max ratio <= k e^{kt}.
struct MomentCheckReport {
  struct Row {
    double x_norm = 0.0;
    double ratio_p1 = 0.0;
    double ratio_p2 = 0.0;
  };
  std::vector<Row> rows;
  double t = 0.0;
  double max_ratio_p1 = 0.0;
  double max_ratio_p2 = 0.0;
  // max/min - 1 of the p=2 ratios across the grid (0 = exact scale invariance).
  double spread_p2 = 0.0;
  double fitted_k = 0.0;
  bool bounded = false;
};

MomentCheckReport lemma3_moment_check(const SDECoefficients& coeffs, double t,
                                      const std::vector<Eigen::VectorXd>& x_grid, int n_paths,
                                      std::uint64_t seed, int n_steps = 256);

// Wiener mark space: marks are discretized driver paths, the gradient is an
// independent driver copy, and gamma_one / flat_sample use the flow closed
// forms. One-mark maps must expose SDE-terminal structure.
class WienerMarkSpace final : public MarkSpace {
 public:
  WienerMarkSpace(SDECoefficients coeffs, int n_steps, double dt)
      : coeffs_(std::move(coeffs)), n_steps_(n_steps), dt_(dt) {}

  std::string id() const override { return "wiener"; }
  const SDECoefficients& coefficients() const { return coeffs_; }
  int n_steps() const { return n_steps_; }
  double dt() const { return dt_; }
  double horizon() const { return dt_ * n_steps_; }

  Mark sample(Rng& rng) const override;
  Eigen::MatrixXd gamma_one(const OneMarkMap& g, const Mark& u) const override;
  Eigen::VectorXd flat_sample(const OneMarkMap& g, const Mark& u, Rng& rng) const override;

 private:
  SDECoefficients coeffs_;
  int n_steps_;
  double dt_;
};

// F = sum over jumps of X_t^{attribute}(path): the jump-sum functional of the
// diffusion-transformed process.
FunctionalPtr sde_jump_sum(const WienerMarkSpace& space);

// Named coefficient presets for config files and tests.
//   zero                no diffusion, no drift
//   additive            constant full-rank sigma, zero drift (K = I)
//   linear              A_j(z, x) = a z_j e_j, zero drift; vanishes at zero
//   rotation            m=2, d=1: A_1 = omega (-z2, z1), B = -lambda z
//   affine              m=d=2: constant + linear diffusion, rotational drift
//   smooth              m=d=1: A = sigma0 (1 + 0.5 sin z), B = 0.25 cos z
//   constant-deficient  m=2, d=1: A_1 = sigma0 (1, 0), rank-deficient
//   xonly-spiral        m=2, d=1: A_1 = |x| (cos 1/|x|, sin 1/|x|), z-free
struct SDEPresetParams {
  double a = 0.3;
  double sigma0 = 0.4;
  double omega = 0.8;
  double lambda = 0.2;
};

SDECoefficients sde_preset(const std::string& name, int m, int d,
                           const SDEPresetParams& params = {});
std::vector<std::string> sde_preset_names();

// The diffusion fields as maps of the jump x alone, for the span test.
std::vector<std::function<Eigen::VectorXd(const Eigen::VectorXd&)>> prop4_columns(
    const std::string& name, int m, int d, const SDEPresetParams& params = {});

}  // namespace lent
