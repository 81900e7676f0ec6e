#include "lent/density.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "lent/errors.hpp"
#include "lent/mark_space.hpp"

namespace lent {

double matrix_rel_dev(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-300});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

Eigen::Matrix2d isotropic_gamma(const Configuration& cfg, double t) {
  Eigen::Matrix2d total = Eigen::Matrix2d::Zero();
  for (const MarkedPoint& p : cfg.points()) {
    if (p.base.time > t) continue;
    const double r = p.base.attribute[0];
    const double theta = mark_angle(p.mark);
    Eigen::Vector2d d;
    d[0] = -r * std::sin(theta);
    d[1] = r * std::cos(theta);
    total += d * d.transpose();
  }
  return total;
}

double det_lower_bound(const MarkedPoint& a, const MarkedPoint& b) {
  const double ra2 = a.base.attribute[0] * a.base.attribute[0];
  const double rb2 = b.base.attribute[0] * b.base.attribute[0];
  const double rmin = std::min(ra2, rb2);
  const double s = std::sin(mark_angle(a.mark) - mark_angle(b.mark));
  return rmin * rmin * s * s;
}

GammaSample gamma_sample(const Functional& F, const Configuration& cfg, const MarkSpace& space) {
  const Eigen::MatrixXd gamma = gamma_total(F, cfg, space);
  GammaSample out;
  out.det = gamma.determinant();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gamma, Eigen::EigenvaluesOnly);
  out.min_eig = eig.eigenvalues().minCoeff();
  return out;
}

NondegeneracyReport assemble_nondegeneracy(const std::vector<GammaSample>& stats,
                                           double threshold, double truncation) {
  NondegeneracyReport report;
  report.n_samples = static_cast<int>(stats.size());
  report.threshold = threshold;
  report.truncation = truncation;
  const int n_bins = static_cast<int>(report.hist_hi - report.hist_lo);
  report.min_eig_hist.assign(n_bins, 0);
  for (const GammaSample& s : stats) {
    if (s.det > threshold) ++report.n_above;
    int bin = 0;
    if (s.min_eig > 0.0) {
      const double l = std::log10(s.min_eig);
      bin = std::clamp(static_cast<int>(std::floor(l - report.hist_lo)), 0, n_bins - 1);
    }
    ++report.min_eig_hist[bin];
  }
  report.fraction =
      report.n_samples > 0 ? static_cast<double>(report.n_above) / report.n_samples : 0.0;
  return report;
}

NondegeneracyReport nondegeneracy_survey(const Functional& F, const ProcessSpec& spec,
                                         const MarkSpace& space, int n_samples, double threshold,
                                         std::uint64_t seed, int n_threads) {
  if (n_samples < 0) throw Error("nondegeneracy_survey: negative sample count");
  std::vector<GammaSample> stats(n_samples);
  n_threads = std::max(1, std::min(n_threads, n_samples > 0 ? n_samples : 1));

  auto worker = [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      const Configuration cfg =
          simulate_configuration(spec, space, derive_seed(seed, static_cast<std::uint64_t>(i)));
      stats[i] = gamma_sample(F, cfg, space);
    }
  };
  if (n_threads == 1) {
    worker(0, n_samples);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n_samples + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
      const int lo = t * chunk;
      const int hi = std::min(n_samples, lo + chunk);
      if (lo < hi) pool.emplace_back(worker, lo, hi);
    }
    for (std::thread& th : pool) th.join();
  }
  return assemble_nondegeneracy(stats, threshold, spec.truncation);
}

NondegeneracyReport nondegeneracy_survey(const Functional& F,
                                         const std::vector<Configuration>& samples,
                                         const MarkSpace& space, double threshold,
                                         double truncation) {
  std::vector<GammaSample> stats;
  stats.reserve(samples.size());
  for (const Configuration& cfg : samples) stats.push_back(gamma_sample(F, cfg, space));
  return assemble_nondegeneracy(stats, threshold, truncation);
}

int prop4_span_test(
    const std::vector<std::function<Eigen::VectorXd(const Eigen::VectorXd&)>>& a_funcs,
    const std::vector<Eigen::VectorXd>& jumps, double tol) {
  if (jumps.empty()) throw Error("span test needs a nonempty jump sequence");
  if (a_funcs.empty()) return 0;

  std::vector<Eigen::VectorXd> rows;
  rows.reserve(a_funcs.size() * jumps.size());
  for (const Eigen::VectorXd& x : jumps)
    for (const auto& a : a_funcs) rows.push_back(a(x));

  const Eigen::Index m = rows.front().size();
  Eigen::MatrixXd stacked(static_cast<Eigen::Index>(rows.size()), m);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m) throw Error("span test: inconsistent vector dimensions");
    stacked.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked);
  const Eigen::VectorXd sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv.maxCoeff() : 0.0;
  if (!(smax > 0.0)) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > tol * smax) ++rank;
  return rank;
}

double DensityEstimate::evaluate(const Eigen::VectorXd& q) const {
  const Eigen::Index n = samples.rows();
  const Eigen::Index k = samples.cols();
  if (q.size() != k) throw Error("density evaluation point has wrong dimension");
  const Eigen::VectorXd inv_h = bandwidth.cwiseInverse();
  double norm = 1.0 / static_cast<double>(n);
  for (Eigen::Index j = 0; j < k; ++j) norm *= inv_h[j] / std::sqrt(2.0 * M_PI);

  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double quad = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double z = (q[j] - samples(i, j)) * inv_h[j];
      quad += z * z;
    }
    acc += std::exp(-0.5 * quad);
  }
  return norm * acc;
}

Eigen::VectorXd scott_bandwidth(const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index k = samples.cols();
  if (n < 2) throw BandwidthNonPositive("Scott's rule needs at least two samples");
  const double factor = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(k) + 4.0));
  Eigen::VectorXd h(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double mean = samples.col(j).mean();
    const double var = (samples.col(j).array() - mean).square().sum() / (n - 1);
    h[j] = factor * std::sqrt(var);
  }
  for (Eigen::Index j = 0; j < k; ++j)
    if (!(h[j] > 0.0))
      throw BandwidthNonPositive("Scott bandwidth degenerate in coordinate " + std::to_string(j));
  return h;
}

DensityEstimate kde_estimate(const Eigen::MatrixXd& samples, Eigen::VectorXd bandwidth) {
  if (samples.rows() < 1) throw Error("kernel density estimate needs samples");
  if (bandwidth.size() != samples.cols())
    throw Error("bandwidth dimension does not match sample dimension");
  for (Eigen::Index j = 0; j < bandwidth.size(); ++j)
    if (!(bandwidth[j] > 0.0) || !std::isfinite(bandwidth[j]))
      throw BandwidthNonPositive("bandwidth must be positive in every coordinate");
  return DensityEstimate{samples, std::move(bandwidth)};
}

DensityEstimate kde_estimate(const Eigen::MatrixXd& samples, double bandwidth) {
  if (samples.rows() < 1) throw Error("kernel density estimate needs samples");
  return kde_estimate(samples, Eigen::VectorXd::Constant(samples.cols(), bandwidth).eval());
}

DensityEstimate kde_estimate(const Eigen::MatrixXd& samples) {
  return kde_estimate(samples, scott_bandwidth(samples));
}

IsotropyReport isotropy_check(const DensityEstimate& est, const std::vector<double>& radii,
                              int n_angles, double tol) {
  if (n_angles < 1) throw Error("isotropy check needs at least one angle");
  if (est.samples.cols() != 2) throw Error("isotropy check is defined for planar estimates");

  IsotropyReport report;
  report.n_angles = n_angles;
  report.tol = tol;
  for (double radius : radii) {
    std::vector<double> values(n_angles);
    for (int a = 0; a < n_angles; ++a) {
      const double phi = kTwoPi * a / n_angles;
      Eigen::Vector2d q(radius * std::cos(phi), radius * std::sin(phi));
      values[a] = est.evaluate(q);
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n_angles;

    IsotropyReport::RadiusRow row;
    row.radius = radius;
    row.mean_density = mean;
    if (mean > 0.0) {
      for (double v : values)
        row.max_rel_dev = std::max(row.max_rel_dev, std::abs(v - mean) / mean);
    } else {
      for (double v : values)
        if (v != 0.0) row.max_rel_dev = std::numeric_limits<double>::infinity();
    }
    report.max_rel_dev = std::max(report.max_rel_dev, row.max_rel_dev);
    report.rows.push_back(row);
  }
  report.pass = report.max_rel_dev < tol;
  return report;
}

}  // namespace lent
