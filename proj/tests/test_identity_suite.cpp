#include <doctest.h>

#include <set>
#include <string>

#include "helpers.hpp"
#include "lent/identity_suite.hpp"

using namespace lent;

namespace {

// Delegates everything to a true circle structure except the carre du champ,
// whose off-diagonal entries get a flipped sign. gamma_total consults this
// space while the oracle differentiates in place, so only the oracle rows can
// expose the lie.
class SignFlippedSpace final : public MarkSpace {
 public:
  std::string id() const override { return inner_.id(); }
  Mark sample(Rng& rng) const override { return inner_.sample(rng); }

  Eigen::MatrixXd gamma_one(const OneMarkMap& g, const Mark& u) const override {
    Eigen::MatrixXd m = inner_.gamma_one(g, u);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (i != j) m(i, j) = -m(i, j);
      }
    }
    return m;
  }

  Eigen::VectorXd flat_sample(const OneMarkMap& g, const Mark& u, Rng& rng) const override {
    return inner_.flat_sample(g, u, rng);
  }

 private:
  CircleMarkSpace inner_;
};

const SuiteRow& find_row(const SuiteReport& report, const std::string& name) {
  for (const SuiteRow& row : report.rows) {
    if (row.name == name) return row;
  }
  REQUIRE_MESSAGE(false, "missing suite row: " << name);
  static SuiteRow dummy;
  return dummy;
}

}  // namespace

TEST_CASE("the identity suite passes on the true circle structure") {
  SuiteParams params;
  params.n_configs = 30;
  params.mc_draws = 6000;
  params.isometry_configs = 2;
  const SuiteReport report = run_identity_suite_checks(test_util::circle_space(), params);

  CHECK(report.all_pass);
  std::set<std::string> names;
  for (const SuiteRow& row : report.rows) {
    CHECK(row.pass);
    CHECK(row.tol > 0.0);
    CHECK(row.max_dev >= 0.0);
    CHECK(row.max_dev <= row.tol);
    names.insert(row.name);
  }
  CHECK(names.size() == report.rows.size());
  for (const char* expected :
       {"oracle-linear", "oracle-exp", "oracle-polar", "oracle-fd-fallback", "exp-closed-form",
        "linear-closed-form", "chain-rule", "gamma-psd", "one-mark-rank", "flat-centering",
        "flat-isometry", "sharp-isometry", "localization", "stacked-blocks"}) {
    CHECK(names.count(expected) == 1);
  }
}

TEST_CASE("a sign-flipped carre du champ is caught by the oracle rows") {
  SuiteParams params;
  params.n_configs = 10;
  params.mc_draws = 2000;
  params.isometry_configs = 1;
  const SignFlippedSpace wrong;
  const SuiteReport report = run_identity_suite_checks(wrong, params);

  CHECK(!report.all_pass);
  // The planar oracle row sees the off-diagonal sign; the scalar rows cannot.
  CHECK(!find_row(report, "oracle-polar").pass);
  CHECK(find_row(report, "oracle-linear").pass);
  CHECK(find_row(report, "oracle-exp").pass);
}
