#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lent/config_space.hpp"
#include "lent/identity_suite.hpp"

namespace lent {

enum class ExperimentKind { isotropic, sde_transform, identity_suite };

// "isotropic" | "sde-transform" | "identity-suite"
std::string kind_name(ExperimentKind kind);
ExperimentKind kind_from_name(const std::string& name);

// Base process of marked jumps. levy selects the radial measure: "power" is
// the density r^exponent on (truncation, upper], "dirac" a single atom.
struct ProcessParams {
  double horizon = 1.0;
  double truncation = 1e-3;
  std::string levy = "dirac";
  double exponent = -1.5;
  double upper = 1.0;
  double radius = 1.0;
  double weight = 5.0;
};

// Planar isotropic study: nondegeneracy survey of det Gamma[Z_t], KDE of the
// law of Z_t with a rotational-symmetry check, and the two-route gamma
// equivalence log.
struct IsotropicParams {
  double t = 1.0;
  int survey_samples = 2000;
  double threshold = 1e-10;
  bool inject_two_point = true;
  int oracle_configs = 100;
  int kde_samples = 50000;
  int kde_grid = 41;
  double kde_half_width = 6.0;
  std::vector<double> radii = {0.5, 1.0, 1.5};
  int n_angles = 64;
  double tol = 0.1;
};

// Diffusion-transform study. The jump law comes from [process]; the
// observation window is t, so the base spec is rebuilt with horizon = t and
// jump attributes drawn uniformly on the sphere of the sampled radius in R^m.
struct SdeParams {
  std::string preset = "affine";
  int m = 2;
  int d = 2;
  int n_steps = 128;
  double t = 1.0;
  int replicas = 50;
  std::string lemma3_preset = "linear";
  int lemma3_paths = 2000;
  int dt_levels = 4;
  int dt_realizations = 40;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::isotropic;
  std::uint64_t seed = 0;
  bool seed_set = false;  // seeds are mandatory; no wall-clock fallback
  int threads = 1;
  std::string out_dir = "out";
  ProcessParams process;
  IsotropicParams isotropic;
  SdeParams sde;
  SuiteParams suite;  // suite.seed is replaced by the top-level seed at run time
  std::vector<std::string> notes;
};

ExperimentConfig default_config(ExperimentKind kind);

// Strict-schema TOML: top-level kind/seed/threads/out plus the [process],
// [isotropic], [sde], [suite] tables. Unknown keys are rejected with line
// diagnostics. kind may come from the file or from the subcommand hint; a
// conflict between the two is an error.
ExperimentConfig config_from_toml(const std::string& text, const std::string& source,
                                  std::optional<ExperimentKind> kind_hint);

// Throws ConfigError on missing seed, non-positive parameters, unresolvable
// presets, or a truncated jump measure with zero mass. Runs before any
// simulation.
void validate_config(const ExperimentConfig& cfg);

ProcessSpec build_process_spec(const ProcessParams& p);
// horizon := sde.t, attribute_dim := sde.m, sphere attribute sampler.
ProcessSpec build_sde_base_spec(const ProcessParams& p, const SdeParams& sde);

// Runners validate, simulate, write artifacts under out_dir, print a summary
// table, and return 0 iff every enabled check passed. All outputs are
// byte-deterministic functions of (config, seed).
int run_isotropic(const ExperimentConfig& cfg);
int run_sde_transform(const ExperimentConfig& cfg);
int run_identity_suite(const ExperimentConfig& cfg);
int run_experiment(const ExperimentConfig& cfg);

}  // namespace lent
