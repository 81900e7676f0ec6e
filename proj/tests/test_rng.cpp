#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "helpers.hpp"
#include "lent/rng.hpp"

using lent::Rng;
using lent::derive_seed;

TEST_CASE("rng is a pure function of the seed") {
  Rng a(42), b(42), c(43);
  bool all_equal = true;
  bool any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    any_diff = any_diff || va != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("child streams differ from the parent and from each other") {
  Rng root(7);
  Rng c0 = root.child(0);
  Rng c1 = root.child(1);
  CHECK(c0.seed() != c1.seed());
  CHECK(c0.seed() == derive_seed(7, 0));
  int diff01 = 0;
  for (int i = 0; i < 64; ++i) {
    if (c0.next_u64() != c1.next_u64()) ++diff01;
  }
  CHECK(diff01 > 32);
}

TEST_CASE("derive_seed gives distinct streams per index") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(123, i));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(123, 0) != derive_seed(124, 0));
}

TEST_CASE("uniform lands in [0,1) and passes a KS test") {
  Rng rng(11);
  std::vector<double> vals(100000);
  bool in_range = true;
  for (double& v : vals) {
    v = rng.uniform();
    in_range = in_range && v >= 0.0 && v < 1.0;
  }
  CHECK(in_range);
  CHECK(test_util::ks_uniform(vals, 0.0, 1.0) < 0.01);
}

TEST_CASE("uniform_pos never returns zero") {
  Rng rng(12);
  bool positive = true;
  for (int i = 0; i < 100000; ++i) {
    const double v = rng.uniform_pos();
    positive = positive && v > 0.0 && v <= 1.0;
  }
  CHECK(positive);
}

TEST_CASE("normal moments and distribution") {
  Rng rng(13);
  std::vector<double> vals(100000);
  for (double& v : vals) v = rng.normal();
  const double n = static_cast<double>(vals.size());
  // mean: SE = 1/sqrt(n); variance of the sample variance ~ 2/n.
  CHECK(std::abs(test_util::sample_mean(vals)) < 3.0 / std::sqrt(n));
  CHECK(std::abs(test_util::sample_sd(vals) - 1.0) < 3.0 / std::sqrt(2.0 * n));
  CHECK(test_util::ks_normal(vals, 0.0, 1.0) < 0.01);
}

TEST_CASE("poisson mean matches at small and chunked-large intensity") {
  Rng rng(14);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += static_cast<double>(rng.poisson(2.0));
  CHECK(std::abs(sum / n - 2.0) < 3.0 * std::sqrt(2.0 / n));

  // Mean 700 exercises the chunked path (exp(-700) would underflow).
  const int m = 2000;
  double big = 0.0;
  for (int i = 0; i < m; ++i) big += static_cast<double>(rng.poisson(700.0));
  CHECK(std::abs(big / m - 700.0) < 3.0 * std::sqrt(700.0 / m));

  CHECK(rng.poisson(0.0) == 0);
  CHECK(rng.poisson(-1.0) == 0);
}
