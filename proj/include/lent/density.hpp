#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "lent/config_space.hpp"
#include "lent/lent_particle.hpp"

namespace lent {

// Max-entry deviation relative to the larger of the two max-entry scales;
// 0 for two zero matrices.
double matrix_rel_dev(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Closed form of the carre du champ of the planar jump sum over points with
// time <= t: sum of r^2 [[sin^2, -sin cos], [-sin cos, cos^2]] terms,
// assembled as d d^T with d = (-r sin theta, r cos theta) so it matches
// gamma_total(polar_jump_sum(t)) to the last bit. The off-diagonal sign
// follows the derivative convention; the determinant is sign-insensitive.
Eigen::Matrix2d isotropic_gamma(const Configuration& cfg, double t);

// (r1^2 ^ r2^2)^2 sin^2(theta1 - theta2): a lower bound for
// det isotropic_gamma of any configuration containing both points.
double det_lower_bound(const MarkedPoint& a, const MarkedPoint& b);

// Nondegeneracy statistics of det Gamma[F] over simulated configurations.
// The determinant criterion is the numerical stand-in for density existence;
// the fraction is reported as a function of the truncation cutoff.
struct NondegeneracyReport {
  int n_samples = 0;
  int n_above = 0;
  double fraction = 0.0;  // n_above / n_samples
  double threshold = 0.0;
  double truncation = 0.0;  // cutoff the samples were drawn with

  // Histogram of log10(min eigenvalue) in unit-decade bins on
  // [hist_lo, hist_hi); nonpositive eigenvalues land in the first bin.
  double hist_lo = -16.0;
  double hist_hi = 4.0;
  std::vector<int> min_eig_hist;
};

// det and min eigenvalue of gamma_total for one configuration.
struct GammaSample {
  double det = 0.0;
  double min_eig = 0.0;
};

GammaSample gamma_sample(const Functional& F, const Configuration& cfg, const MarkSpace& space);

NondegeneracyReport assemble_nondegeneracy(const std::vector<GammaSample>& stats,
                                           double threshold, double truncation);

NondegeneracyReport nondegeneracy_survey(const Functional& F, const ProcessSpec& spec,
                                         const MarkSpace& space, int n_samples, double threshold,
                                         std::uint64_t seed, int n_threads = 1);

// Same statistics over an explicit configuration sample (deterministic
// injection, degenerate cases).
NondegeneracyReport nondegeneracy_survey(const Functional& F,
                                         const std::vector<Configuration>& samples,
                                         const MarkSpace& space, double threshold,
                                         double truncation);

// Numerical rank of the matrix stacking A_j(x_n) over all maps j and jumps n
// (SVD, singular values above tol relative to the largest).
int prop4_span_test(
    const std::vector<std::function<Eigen::VectorXd(const Eigen::VectorXd&)>>& a_funcs,
    const std::vector<Eigen::VectorXd>& jumps, double tol = 1e-10);

// Gaussian product-kernel density estimate; immutable after construction.
struct DensityEstimate {
  Eigen::MatrixXd samples;    // n x k
  Eigen::VectorXd bandwidth;  // k positive entries

  double evaluate(const Eigen::VectorXd& q) const;
};

// Scott's rule: n^{-1/(k+4)} times the per-coordinate sample standard
// deviation. Throws BandwidthNonPositive for degenerate coordinates.
Eigen::VectorXd scott_bandwidth(const Eigen::MatrixXd& samples);

DensityEstimate kde_estimate(const Eigen::MatrixXd& samples);  // Scott bandwidth
DensityEstimate kde_estimate(const Eigen::MatrixXd& samples, double bandwidth);
DensityEstimate kde_estimate(const Eigen::MatrixXd& samples, Eigen::VectorXd bandwidth);

// Rotational symmetry of a planar estimate: evaluates on circles of the given
// radii at n_angles equispaced angles and reports the max relative deviation
// from the angular mean.
struct IsotropyReport {
  struct RadiusRow {
    double radius = 0.0;
    double mean_density = 0.0;
    double max_rel_dev = 0.0;
  };
  std::vector<RadiusRow> rows;
  int n_angles = 0;
  double tol = 0.0;
  double max_rel_dev = 0.0;
  bool pass = false;
};

IsotropyReport isotropy_check(const DensityEstimate& est, const std::vector<double>& radii,
                              int n_angles, double tol);

}  // namespace lent
