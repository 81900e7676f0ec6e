#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lent/config_space.hpp"
#include "lent/mark_space.hpp"

namespace test_util {

// Kolmogorov-Smirnov statistic of a sample against a CDF callable.
template <typename Cdf>
double ks_statistic(std::vector<double> vals, Cdf cdf) {
  std::sort(vals.begin(), vals.end());
  const double n = static_cast<double>(vals.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double f = cdf(vals[i]);
    ks = std::max({ks, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return ks;
}

inline double ks_uniform(std::vector<double> vals, double lo, double hi) {
  return ks_statistic(std::move(vals), [=](double v) { return (v - lo) / (hi - lo); });
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double ks_normal(std::vector<double> vals, double mean, double sd) {
  return ks_statistic(std::move(vals), [=](double v) { return normal_cdf((v - mean) / sd); });
}

inline double sample_mean(const std::vector<double>& vals) {
  double s = 0.0;
  for (double v : vals) s += v;
  return s / static_cast<double>(vals.size());
}

inline double sample_sd(const std::vector<double>& vals) {
  const double m = sample_mean(vals);
  double s = 0.0;
  for (double v : vals) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(vals.size() - 1));
}

inline double pearson_corr(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = sample_mean(a);
  const double mb = sample_mean(b);
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  return num / std::sqrt(da * db);
}

// Max deviation of the empirical second-moment matrix of `draws` (rows are
// mean-zero samples) from `ref`, measured in per-entry standard errors.
inline double max_sigma_units(const Eigen::MatrixXd& draws, const Eigen::MatrixXd& ref) {
  const Eigen::Index n = draws.rows();
  const Eigen::Index k = draws.cols();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i; j < k; ++j) {
      const Eigen::ArrayXd prod = draws.col(i).array() * draws.col(j).array();
      const double mean = prod.mean();
      const double var = (prod - mean).square().sum() / static_cast<double>(n - 1);
      const double dev = std::abs(mean - ref(i, j));
      if (dev == 0.0) continue;
      const double se = std::max(std::sqrt(var / static_cast<double>(n)), 1e-300);
      worst = std::max(worst, dev / se);
    }
  }
  return worst;
}

inline const lent::CircleMarkSpace& circle_space() {
  static const lent::CircleMarkSpace space;
  return space;
}

inline lent::MarkedPoint circle_point(double time, double radius, double theta) {
  lent::BasePoint base;
  base.time = time;
  base.attribute = Eigen::VectorXd::Constant(1, radius);
  return lent::MarkedPoint{base, lent::Mark(theta)};
}

// Two jumps: (s=0.5, r=1, theta=0) and (s=0.7, r=2, theta=pi/2). Pinned
// values: N(r sin theta) = 2, gamma[r sin theta] per point = {1, 0}.
inline lent::Configuration frozen_two_point() {
  return lent::Configuration::from_points(
      "circle", 1.0,
      {circle_point(0.5, 1.0, 0.0), circle_point(0.7, 2.0, lent::kTwoPi / 4.0)});
}

inline lent::Configuration random_circle_config(std::uint64_t seed, double truncation = 1e-2,
                                                double horizon = 1.0) {
  return lent::simulate_configuration(lent::power_law_spec(horizon, truncation), circle_space(),
                                      seed);
}

// Scratch directory under the build tree; removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& name)
      : path(std::filesystem::current_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }

  std::string str() const { return path.string(); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace test_util
