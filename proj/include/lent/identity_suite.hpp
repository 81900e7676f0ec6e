#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lent/mark_space.hpp"

namespace lent {

// Closed-form and statistical identities of the gamma/gradient machinery,
// runnable against any circle-compatible mark space. Injecting a deliberately
// wrong space must fail the oracle-equivalence rows: gamma_total consults the
// space while the oracle differentiates in place, so the two routes only
// agree when the space's carre du champ is the real one.
struct SuiteParams {
  int n_configs = 100;
  int mc_draws = 20000;
  int isometry_configs = 3;
  double horizon = 1.0;
  double truncation = 1e-2;
  std::uint64_t seed = 1;
};

struct SuiteRow {
  std::string name;
  double max_dev = 0.0;
  double tol = 0.0;
  bool pass = false;
};

struct SuiteReport {
  std::vector<SuiteRow> rows;
  bool all_pass = true;
};

SuiteReport run_identity_suite_checks(const MarkSpace& space, const SuiteParams& params);

}  // namespace lent
