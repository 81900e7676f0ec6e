#include "lent/experiment.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "lent/density.hpp"
#include "lent/errors.hpp"
#include "lent/lent_particle.hpp"
#include "lent/mark_space.hpp"
#include "lent/sde_flow.hpp"
#include "lent/serialize.hpp"
#include "lent/toml_lite.hpp"

namespace lent {

namespace {

// Runs body(0..n-1) on up to `threads` workers. Results must be written to
// per-index slots so output does not depend on scheduling; the first failing
// index wins when several replicas throw.
void parallel_replicas(int n, int threads, const std::function<void(int)>& body) {
  const int workers = std::max(1, std::min(threads, n));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::string> errors(n);
  std::vector<char> failed(n, 0);
  std::atomic<int> next{0};
  auto loop = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (const std::exception& e) {
        failed[i] = 1;
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(loop);
  for (auto& t : pool) t.join();
  for (int i = 0; i < n; ++i)
    if (failed[i]) throw Error(errors[i]);
}

int checked_int(std::int64_t v, const std::string& source, const std::string& key) {
  if (v < INT32_MIN || v > INT32_MAX)
    throw ConfigError(source + ": " + key + " is out of range");
  return static_cast<int>(v);
}

[[noreturn]] void invalid(const std::string& message) { throw ConfigError(message); }

void require(bool ok, const std::string& message) {
  if (!ok) invalid(message);
}

std::string pass_str(bool ok) { return ok ? "PASS" : "FAIL"; }

// Predicted span-test rank for a preset and jump count. Constant and
// diagonal-in-z presets never leave span{e_1..e_d}, so one jump already
// saturates them; direction-dependent fields gain a dimension per jump
// almost surely under the spherical jump law.
int expected_prop4_rank(const std::string& preset, int m, int d, int n_jumps) {
  if (preset == "zero" || n_jumps == 0) return 0;
  if (preset == "constant-deficient") return 1;
  if (preset == "additive" || preset == "linear" || preset == "affine" || preset == "smooth")
    return std::min(m, d);
  return std::min(m, n_jumps * d);
}

double scalar_rel_dev(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace

std::string kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::isotropic:
      return "isotropic";
    case ExperimentKind::sde_transform:
      return "sde-transform";
    case ExperimentKind::identity_suite:
      return "identity-suite";
  }
  throw Error("unreachable experiment kind");
}

ExperimentKind kind_from_name(const std::string& name) {
  if (name == "isotropic") return ExperimentKind::isotropic;
  if (name == "sde-transform") return ExperimentKind::sde_transform;
  if (name == "identity-suite") return ExperimentKind::identity_suite;
  throw ConfigError("unknown experiment kind '" + name +
                    "' (expected isotropic | sde-transform | identity-suite)");
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  return cfg;
}

ExperimentConfig config_from_toml(const std::string& text, const std::string& source,
                                  std::optional<ExperimentKind> kind_hint) {
  const TomlDoc doc = TomlDoc::parse(text, source);

  ExperimentKind kind;
  if (doc.has("", "kind")) {
    const std::string name = doc.get_str("", "kind", "");
    kind = kind_from_name(name);
    if (kind_hint && *kind_hint != kind)
      invalid(source + ": config kind '" + name + "' does not match the subcommand '" +
              kind_name(*kind_hint) + "'");
  } else if (kind_hint) {
    kind = *kind_hint;
  } else {
    invalid(source + ": kind is required (isotropic | sde-transform | identity-suite)");
  }

  ExperimentConfig cfg = default_config(kind);
  if (doc.has("", "seed")) {
    const std::int64_t s = doc.get_int("", "seed", 0);
    if (s < 0) invalid(source + ": seed must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(s);
    cfg.seed_set = true;
  }
  cfg.threads = checked_int(doc.get_int("", "threads", cfg.threads), source, "threads");
  cfg.out_dir = doc.get_str("", "out", cfg.out_dir);

  ProcessParams& p = cfg.process;
  p.horizon = doc.get_real("process", "horizon", p.horizon);
  p.truncation = doc.get_real("process", "truncation", p.truncation);
  p.levy = doc.get_str("process", "levy", p.levy);
  p.exponent = doc.get_real("process", "exponent", p.exponent);
  p.upper = doc.get_real("process", "upper", p.upper);
  p.radius = doc.get_real("process", "radius", p.radius);
  p.weight = doc.get_real("process", "weight", p.weight);

  IsotropicParams& iso = cfg.isotropic;
  iso.t = doc.get_real("isotropic", "t", iso.t);
  iso.survey_samples =
      checked_int(doc.get_int("isotropic", "survey_samples", iso.survey_samples), source,
                  "survey_samples");
  iso.threshold = doc.get_real("isotropic", "threshold", iso.threshold);
  iso.inject_two_point = doc.get_bool("isotropic", "inject_two_point", iso.inject_two_point);
  iso.oracle_configs = checked_int(doc.get_int("isotropic", "oracle_configs", iso.oracle_configs),
                                   source, "oracle_configs");
  iso.kde_samples =
      checked_int(doc.get_int("isotropic", "kde_samples", iso.kde_samples), source, "kde_samples");
  iso.kde_grid =
      checked_int(doc.get_int("isotropic", "kde_grid", iso.kde_grid), source, "kde_grid");
  iso.kde_half_width = doc.get_real("isotropic", "kde_half_width", iso.kde_half_width);
  iso.radii = doc.get_real_array("isotropic", "radii", iso.radii);
  iso.n_angles =
      checked_int(doc.get_int("isotropic", "n_angles", iso.n_angles), source, "n_angles");
  iso.tol = doc.get_real("isotropic", "tol", iso.tol);

  SdeParams& sde = cfg.sde;
  sde.preset = doc.get_str("sde", "preset", sde.preset);
  sde.m = checked_int(doc.get_int("sde", "m", sde.m), source, "m");
  sde.d = checked_int(doc.get_int("sde", "d", sde.d), source, "d");
  sde.n_steps = checked_int(doc.get_int("sde", "n_steps", sde.n_steps), source, "n_steps");
  sde.t = doc.get_real("sde", "t", sde.t);
  sde.replicas = checked_int(doc.get_int("sde", "replicas", sde.replicas), source, "replicas");
  sde.lemma3_preset = doc.get_str("sde", "lemma3_preset", sde.lemma3_preset);
  sde.lemma3_paths =
      checked_int(doc.get_int("sde", "lemma3_paths", sde.lemma3_paths), source, "lemma3_paths");
  sde.dt_levels = checked_int(doc.get_int("sde", "dt_levels", sde.dt_levels), source, "dt_levels");
  sde.dt_realizations = checked_int(doc.get_int("sde", "dt_realizations", sde.dt_realizations),
                                    source, "dt_realizations");

  SuiteParams& su = cfg.suite;
  su.n_configs = checked_int(doc.get_int("suite", "n_configs", su.n_configs), source, "n_configs");
  su.mc_draws = checked_int(doc.get_int("suite", "mc_draws", su.mc_draws), source, "mc_draws");
  su.isometry_configs = checked_int(
      doc.get_int("suite", "isometry_configs", su.isometry_configs), source, "isometry_configs");
  su.horizon = doc.get_real("suite", "horizon", su.horizon);
  su.truncation = doc.get_real("suite", "truncation", su.truncation);

  const auto note_if_absent = [&](const std::string& section) {
    if (!doc.has_section(section))
      cfg.notes.push_back("[" + section + "] section absent; defaults applied");
  };
  switch (kind) {
    case ExperimentKind::isotropic:
      note_if_absent("process");
      note_if_absent("isotropic");
      break;
    case ExperimentKind::sde_transform:
      note_if_absent("process");
      note_if_absent("sde");
      break;
    case ExperimentKind::identity_suite:
      note_if_absent("suite");
      break;
  }

  doc.reject_unconsumed();
  return cfg;
}

ProcessSpec build_process_spec(const ProcessParams& p) {
  if (p.levy == "power") return power_law_spec(p.horizon, p.truncation, p.exponent, p.upper);
  if (p.levy == "dirac") return dirac_spec(p.horizon, p.radius, p.weight);
  throw ConfigError("process levy must be 'power' or 'dirac'");
}

ProcessSpec build_sde_base_spec(const ProcessParams& p, const SdeParams& sde) {
  ProcessParams q = p;
  q.horizon = sde.t;
  ProcessSpec spec = build_process_spec(q);
  spec.attribute_dim = sde.m;
  const int m = sde.m;
  spec.attribute_sampler = [m](double radius, Rng& rng) {
    Eigen::VectorXd g(m);
    for (;;) {
      for (int i = 0; i < m; ++i) g[i] = rng.normal();
      const double norm = g.norm();
      if (norm * norm >= 1e-12) return Eigen::VectorXd((radius / norm) * g);
    }
  };
  return spec;
}

void validate_config(const ExperimentConfig& cfg) {
  require(cfg.seed_set,
          "seed is mandatory (set it in the config or with --seed); "
          "wall-clock seeding is not supported");
  require(cfg.threads >= 1, "threads must be >= 1");
  require(!cfg.out_dir.empty(), "out must be a non-empty path");

  const ProcessParams& p = cfg.process;
  require(p.horizon > 0.0, "process horizon must be positive");
  require(p.truncation > 0.0, "process truncation must be positive");
  require(p.levy == "power" || p.levy == "dirac", "process levy must be 'power' or 'dirac'");
  if (p.levy == "power") {
    require(p.upper > 0.0, "process upper must be positive");
  } else {
    require(p.radius > 0.0, "process radius must be positive");
    require(p.weight >= 0.0, "process weight must be nonnegative");
  }

  switch (cfg.kind) {
    case ExperimentKind::isotropic: {
      const IsotropicParams& iso = cfg.isotropic;
      require(iso.t > 0.0, "isotropic t must be positive");
      require(iso.survey_samples >= 1, "isotropic survey_samples must be >= 1");
      require(iso.threshold > 0.0, "isotropic threshold must be positive");
      require(iso.oracle_configs >= 1, "isotropic oracle_configs must be >= 1");
      require(iso.kde_samples >= 2, "isotropic kde_samples must be >= 2");
      require(iso.kde_grid >= 2, "isotropic kde_grid must be >= 2");
      require(iso.kde_half_width > 0.0, "isotropic kde_half_width must be positive");
      require(!iso.radii.empty(), "isotropic radii must be non-empty");
      for (double r : iso.radii) require(r > 0.0, "isotropic radii must be positive");
      require(iso.n_angles >= 2, "isotropic n_angles must be >= 2");
      require(iso.tol > 0.0, "isotropic tol must be positive");
      require(truncated_mass(build_process_spec(p)) > 0.0,
              "truncated jump measure has zero mass; nothing to simulate");
      break;
    }
    case ExperimentKind::sde_transform: {
      const SdeParams& s = cfg.sde;
      require(s.m >= 1 && s.d >= 1, "sde dimensions must be positive");
      require(s.n_steps >= 1, "sde n_steps must be >= 1");
      require(s.t > 0.0, "sde t must be positive");
      require(s.replicas >= 1, "sde replicas must be >= 1");
      require(s.lemma3_paths >= 2, "sde lemma3_paths must be >= 2");
      require(s.dt_levels >= 2, "sde dt_levels must be >= 2");
      require(s.dt_realizations >= 1, "sde dt_realizations must be >= 1");
      try {
        sde_preset(s.preset, s.m, s.d);
      } catch (const std::exception& e) {
        invalid(std::string("sde preset: ") + e.what());
      }
      try {
        sde_preset(s.lemma3_preset, s.m, s.d);
      } catch (const std::exception& e) {
        invalid(std::string("sde lemma3_preset: ") + e.what());
      }
      require(truncated_mass(build_sde_base_spec(p, s)) > 0.0,
              "truncated jump measure has zero mass; nothing to simulate");
      break;
    }
    case ExperimentKind::identity_suite: {
      const SuiteParams& su = cfg.suite;
      require(su.n_configs >= 1, "suite n_configs must be >= 1");
      require(su.mc_draws >= 2, "suite mc_draws must be >= 2");
      require(su.isometry_configs >= 1, "suite isometry_configs must be >= 1");
      require(su.horizon > 0.0, "suite horizon must be positive");
      require(su.truncation > 0.0 && su.truncation < 1.0, "suite truncation must lie in (0, 1)");
      break;
    }
  }
}

int run_isotropic(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const IsotropicParams& iso = cfg.isotropic;
  const ProcessSpec spec = build_process_spec(cfg.process);
  const CircleMarkSpace space;
  const FunctionalPtr polar = polar_jump_sum(iso.t);
  const std::uint64_t survey_seed = derive_seed(cfg.seed, 1);
  const std::uint64_t kde_seed = derive_seed(cfg.seed, 2);
  const std::uint64_t oracle_seed = derive_seed(cfg.seed, 3);

  std::filesystem::create_directories(cfg.out_dir);
  for (const auto& note : cfg.notes) std::cout << note << "\n";

  // Nondegeneracy survey with the pairwise determinant bound.
  struct SurveyRow {
    int n_points = 0;
    double det = 0.0;
    double min_eig = 0.0;
    bool violation = false;
  };
  std::vector<SurveyRow> rows(iso.survey_samples);
  parallel_replicas(iso.survey_samples, cfg.threads, [&](int i) {
    const Configuration c = simulate_configuration(spec, space, derive_seed(survey_seed, i));
    const GammaSample g = gamma_sample(*polar, c, space);
    SurveyRow row;
    row.n_points = static_cast<int>(c.size());
    row.det = g.det;
    row.min_eig = g.min_eig;
    const auto& pts = c.points();
    for (std::size_t a = 0; a < pts.size(); ++a) {
      if (pts[a].base.time > iso.t) continue;
      for (std::size_t b = a + 1; b < pts.size(); ++b) {
        if (pts[b].base.time > iso.t) continue;
        if (g.det < det_lower_bound(pts[a], pts[b]) - 1e-10) row.violation = true;
      }
    }
    rows[i] = row;
  });

  std::string survey_csv = csv_row({"replica", "n_points", "det", "min_eig", "above"});
  std::optional<double> injected_det;
  if (iso.inject_two_point) {
    // Two unit jumps a quarter turn apart: gamma is the identity, det 1, and
    // the pairwise bound is attained.
    BasePoint b1;
    b1.time = 0.25 * iso.t;
    b1.attribute = Eigen::VectorXd::Constant(1, 1.0);
    BasePoint b2;
    b2.time = 0.75 * iso.t;
    b2.attribute = Eigen::VectorXd::Constant(1, 1.0);
    const Configuration two = Configuration::from_points(
        space.id(), cfg.process.horizon,
        {MarkedPoint{b1, Mark(0.0)}, MarkedPoint{b2, Mark(kTwoPi / 4.0)}});
    const GammaSample g = gamma_sample(*polar, two, space);
    injected_det = g.det;
    survey_csv += csv_row({"-1", "2", format_double(g.det), format_double(g.min_eig),
                           g.det > iso.threshold ? "1" : "0"});
  }
  std::vector<GammaSample> samples;
  samples.reserve(rows.size());
  int violations = 0;
  for (int i = 0; i < iso.survey_samples; ++i) {
    const SurveyRow& r = rows[i];
    samples.push_back(GammaSample{r.det, r.min_eig});
    if (r.violation) ++violations;
    survey_csv += csv_row({std::to_string(i), std::to_string(r.n_points), format_double(r.det),
                           format_double(r.min_eig), r.det > iso.threshold ? "1" : "0"});
  }
  const NondegeneracyReport survey = assemble_nondegeneracy(samples, iso.threshold, spec.truncation);
  write_text_file(cfg.out_dir + "/survey.csv", survey_csv);

  // KDE of the law of Z_t on a square grid, plus the rotational-symmetry
  // check on circles.
  Eigen::MatrixXd zsamples(iso.kde_samples, 2);
  parallel_replicas(iso.kde_samples, cfg.threads, [&](int i) {
    const Configuration c = simulate_configuration(spec, space, derive_seed(kde_seed, i));
    zsamples.row(i) = polar->eval(c).transpose();
  });
  const DensityEstimate est = kde_estimate(zsamples);
  const int grid = iso.kde_grid;
  const double half = iso.kde_half_width;
  const double cell = 2.0 * half / (grid - 1);
  std::vector<double> density(static_cast<std::size_t>(grid) * grid);
  parallel_replicas(grid, cfg.threads, [&](int ix) {
    Eigen::Vector2d q;
    q[0] = -half + ix * cell;
    for (int iy = 0; iy < grid; ++iy) {
      q[1] = -half + iy * cell;
      density[static_cast<std::size_t>(ix) * grid + iy] = est.evaluate(q);
    }
  });
  std::string kde_csv = csv_row({"x", "y", "density"});
  double grid_mass = 0.0;
  for (int ix = 0; ix < grid; ++ix) {
    for (int iy = 0; iy < grid; ++iy) {
      const double d = density[static_cast<std::size_t>(ix) * grid + iy];
      kde_csv += csv_row(
          {format_double(-half + ix * cell), format_double(-half + iy * cell), format_double(d)});
      grid_mass += d;
    }
  }
  grid_mass *= cell * cell;
  write_text_file(cfg.out_dir + "/kde_grid.csv", kde_csv);

  const IsotropyReport iso_report = isotropy_check(est, iso.radii, iso.n_angles, iso.tol);
  const bool mass_ok = grid_mass >= 0.98 && grid_mass <= 1.02;
  Json iso_json = to_json(iso_report);
  iso_json["bandwidth"] = Json::array({est.bandwidth[0], est.bandwidth[1]});
  iso_json["grid_mass"] = grid_mass;
  iso_json["mass_ok"] = mass_ok;
  write_text_file(cfg.out_dir + "/isotropy.json", iso_json.dump(2) + "\n");

  // Two-route equivalence and the closed forms, one line per configuration.
  const FunctionalPtr lin = make_linear(radial_sine_map());
  const FunctionalPtr expo = make_exp(radial_sine_map());
  struct OracleRow {
    int n_points = 0;
    double oracle_dev = 0.0;
    double closed_dev = 0.0;
  };
  std::vector<OracleRow> oracle_rows(iso.oracle_configs);
  parallel_replicas(iso.oracle_configs, cfg.threads, [&](int i) {
    const Configuration c = simulate_configuration(spec, space, derive_seed(oracle_seed, i));
    double oracle_dev = 0.0;
    for (const Functional* F : {lin.get(), expo.get(), polar.get()})
      oracle_dev = std::max(
          oracle_dev, matrix_rel_dev(gamma_total(*F, c, space), gamma_total_oracle(*F, c, space)));
    const double nf = lin->eval(c)[0];
    const double g_lin = gamma_total(*lin, c, space)(0, 0);
    const double g_exp = gamma_total(*expo, c, space)(0, 0);
    double sum_sq = 0.0;
    for (const auto& pt : c.points()) {
      const double r = pt.base.attribute[0];
      const double slope = r * std::cos(mark_angle(pt.mark));
      sum_sq += slope * slope;
    }
    const double closed_dev = std::max(scalar_rel_dev(g_exp, std::exp(-2.0 * nf) * g_lin),
                                       scalar_rel_dev(g_lin, sum_sq));
    oracle_rows[i] = OracleRow{static_cast<int>(c.size()), oracle_dev, closed_dev};
  });
  std::string log;
  double max_oracle_dev = 0.0;
  double max_closed_dev = 0.0;
  for (int i = 0; i < iso.oracle_configs; ++i) {
    const OracleRow& r = oracle_rows[i];
    log += "config " + std::to_string(i) + ": n=" + std::to_string(r.n_points) +
           " oracle_dev=" + format_double(r.oracle_dev) +
           " closed_dev=" + format_double(r.closed_dev) + "\n";
    max_oracle_dev = std::max(max_oracle_dev, r.oracle_dev);
    max_closed_dev = std::max(max_closed_dev, r.closed_dev);
  }
  const bool oracle_ok = max_oracle_dev <= 1e-12;
  const bool closed_ok = max_closed_dev <= 1e-10;
  log += "max oracle deviation " + format_double(max_oracle_dev) + " (tol 1e-12): " +
         pass_str(oracle_ok) + "\n";
  log += "max closed-form deviation " + format_double(max_closed_dev) + " (tol 1e-10): " +
         pass_str(closed_ok) + "\n";
  write_text_file(cfg.out_dir + "/oracle_equivalence.log", log);

  const bool injected_ok = !injected_det || std::abs(*injected_det - 1.0) <= 1e-12;
  const bool bound_ok = violations == 0;
  const bool pass =
      oracle_ok && closed_ok && bound_ok && iso_report.pass && mass_ok && injected_ok;

  Json summary;
  summary["survey"] = to_json(survey);
  summary["det_bound_violations"] = violations;
  if (injected_det)
    summary["injected_det"] = *injected_det;
  else
    summary["injected_det"] = nullptr;
  summary["oracle_max_dev"] = max_oracle_dev;
  summary["closed_form_max_dev"] = max_closed_dev;
  summary["isotropy_pass"] = iso_report.pass;
  summary["grid_mass"] = grid_mass;
  summary["pass"] = pass;
  write_text_file(cfg.out_dir + "/survey_summary.json", summary.dump(2) + "\n");

  std::cout << "isotropic: survey " << iso.survey_samples << " configs, fraction above "
            << format_double(iso.threshold) << " = " << format_double(survey.fraction) << "\n";
  std::cout << "isotropic: det bound violations = " << violations << " " << pass_str(bound_ok)
            << "\n";
  if (injected_det)
    std::cout << "isotropic: injected two-point det = " << format_double(*injected_det) << " "
              << pass_str(injected_ok) << "\n";
  std::cout << "isotropic: oracle max dev = " << format_double(max_oracle_dev) << " (tol 1e-12) "
            << pass_str(oracle_ok) << "\n";
  std::cout << "isotropic: closed-form max dev = " << format_double(max_closed_dev)
            << " (tol 1e-10) " << pass_str(closed_ok) << "\n";
  std::cout << "isotropic: KDE grid mass = " << format_double(grid_mass) << " " << pass_str(mass_ok)
            << ", isotropy max rel dev = " << format_double(iso_report.max_rel_dev) << " (tol "
            << format_double(iso.tol) << ") " << pass_str(iso_report.pass) << "\n";
  std::cout << "isotropic: " << pass_str(pass) << "\n";
  return pass ? 0 : 1;
}

int run_sde_transform(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const SdeParams& s = cfg.sde;
  const SDECoefficients coeffs = sde_preset(s.preset, s.m, s.d);
  const WienerMarkSpace space(coeffs, s.n_steps, s.t / s.n_steps);
  const ProcessSpec spec = build_sde_base_spec(cfg.process, s);
  const FunctionalPtr F = sde_jump_sum(space);
  const auto a_funcs = prop4_columns(s.preset, s.m, s.d);
  const std::uint64_t replica_seed = derive_seed(cfg.seed, 1);
  const std::uint64_t lemma_seed = derive_seed(cfg.seed, 2);
  const std::uint64_t dt_seed = derive_seed(cfg.seed, 3);

  std::filesystem::create_directories(cfg.out_dir);
  for (const auto& note : cfg.notes) std::cout << note << "\n";

  struct ReplicaRow {
    int n_points = 0;
    double min_eig = 0.0;
    double max_eig = 0.0;
    double det = 0.0;
    int rank = 0;
  };
  std::vector<ReplicaRow> rows(s.replicas);
  parallel_replicas(s.replicas, cfg.threads, [&](int i) {
    try {
      const Configuration c = simulate_configuration(spec, space, derive_seed(replica_seed, i));
      const Eigen::MatrixXd gamma = gamma_total(*F, c, space);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma);
      std::vector<Eigen::VectorXd> jumps;
      jumps.reserve(c.size());
      for (const auto& pt : c.points()) jumps.push_back(pt.base.attribute);
      const int rank = jumps.empty() ? 0 : prop4_span_test(a_funcs, jumps);
      rows[i] = ReplicaRow{static_cast<int>(c.size()), es.eigenvalues().minCoeff(),
                           es.eigenvalues().maxCoeff(), gamma.determinant(), rank};
    } catch (const std::exception& e) {
      throw Error("replica " + std::to_string(i) + ": " + e.what());
    }
  });

  std::string spectra_csv = csv_row({"replica", "n_points", "min_eig", "max_eig", "det"});
  std::string rank_csv = csv_row({"replica", "n_jumps", "rank", "full"});
  bool psd_ok = true;
  bool prop4_ok = true;
  for (int i = 0; i < s.replicas; ++i) {
    const ReplicaRow& r = rows[i];
    spectra_csv += csv_row({std::to_string(i), std::to_string(r.n_points),
                            format_double(r.min_eig), format_double(r.max_eig),
                            format_double(r.det)});
    rank_csv += csv_row({std::to_string(i), std::to_string(r.n_points), std::to_string(r.rank),
                         r.rank == s.m ? "1" : "0"});
    if (r.min_eig < -1e-12) psd_ok = false;
    if (r.rank != expected_prop4_rank(s.preset, s.m, s.d, r.n_points)) prop4_ok = false;
  }
  write_text_file(cfg.out_dir + "/spectra.csv", spectra_csv);
  write_text_file(cfg.out_dir + "/prop4_rank.csv", rank_csv);

  // Moment growth on a norm grid spanning four decades.
  const SDECoefficients lemma_coeffs = sde_preset(s.lemma3_preset, s.m, s.d);
  std::vector<Eigen::VectorXd> x_grid;
  for (double norm : {1e-2, 1e-1, 1.0, 10.0}) {
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(s.m);
    e1[0] = norm;
    x_grid.push_back(e1);
    if (s.m >= 2)
      x_grid.push_back(Eigen::VectorXd::Constant(s.m, norm / std::sqrt(static_cast<double>(s.m))));
  }
  const MomentCheckReport lemma =
      lemma3_moment_check(lemma_coeffs, s.t, x_grid, s.lemma3_paths, lemma_seed);
  write_text_file(cfg.out_dir + "/lemma3.json", to_json(lemma).dump(2) + "\n");

  // Grid refinement under a shared driver: gamma at step counts 64 * 2^l,
  // coarse increments obtained by block-summing the finest path.
  const SDECoefficients dt_coeffs = sde_preset("linear", s.m, s.d);
  const int levels = s.dt_levels;
  const int base_steps = 64;
  const int finest_steps = base_steps << (levels - 1);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(s.m);
  std::vector<double> mean_frob(levels, 0.0);
  std::vector<double> mean_diff(levels - 1, 0.0);
  for (int r = 0; r < s.dt_realizations; ++r) {
    Rng rng(derive_seed(dt_seed, r));
    const DriverPath fine = sample_driver_path(finest_steps, s.d, s.t / finest_steps, rng);
    std::vector<Eigen::MatrixXd> gammas(levels);
    for (int l = 0; l < levels; ++l) {
      const int steps = base_steps << l;
      const int factor = finest_steps / steps;
      DriverPath path;
      path.dt = s.t / steps;
      path.increments = Eigen::MatrixXd::Zero(steps, s.d);
      for (int v = 0; v < steps; ++v)
        for (int u = 0; u < factor; ++u)
          path.increments.row(v) += fine.increments.row(v * factor + u);
      gammas[l] = gamma_sde(dt_coeffs, x0, path);
    }
    for (int l = 0; l < levels; ++l) mean_frob[l] += gammas[l].norm();
    for (int l = 0; l + 1 < levels; ++l) mean_diff[l] += (gammas[l] - gammas[l + 1]).norm();
  }
  for (double& v : mean_frob) v /= s.dt_realizations;
  for (double& v : mean_diff) v /= s.dt_realizations;
  std::string dt_csv = csv_row({"level", "n_steps", "dt", "mean_gamma_frobenius", "diff_to_next"});
  for (int l = 0; l < levels; ++l) {
    const int steps = base_steps << l;
    dt_csv += csv_row({std::to_string(l), std::to_string(steps), format_double(s.t / steps),
                       format_double(mean_frob[l]),
                       l + 1 < levels ? format_double(mean_diff[l]) : ""});
  }
  write_text_file(cfg.out_dir + "/dt_halving.csv", dt_csv);
  bool cauchy_ok = true;
  for (int l = 0; l + 2 < levels; ++l)
    if (mean_diff[l + 1] > mean_diff[l]) cauchy_ok = false;

  const bool pass = psd_ok && prop4_ok && lemma.bounded && cauchy_ok;
  std::cout << "sde-transform: preset " << s.preset << ", " << s.replicas
            << " replicas, spectra PSD " << pass_str(psd_ok) << "\n";
  std::cout << "sde-transform: span ranks match the preset prediction " << pass_str(prop4_ok)
            << "\n";
  std::cout << "sde-transform: moment growth bounded (fitted k = " << format_double(lemma.fitted_k)
            << ") " << pass_str(lemma.bounded) << "\n";
  std::cout << "sde-transform: dt-halving differences non-increasing " << pass_str(cauchy_ok)
            << "\n";
  std::cout << "sde-transform: " << pass_str(pass) << "\n";
  return pass ? 0 : 1;
}

int run_identity_suite(const ExperimentConfig& cfg) {
  validate_config(cfg);
  SuiteParams params = cfg.suite;
  params.seed = cfg.seed;

  std::filesystem::create_directories(cfg.out_dir);
  for (const auto& note : cfg.notes) std::cout << note << "\n";

  const CircleMarkSpace space;
  const SuiteReport report = run_identity_suite_checks(space, params);

  std::string csv = csv_row({"name", "max_dev", "tol", "pass"});
  std::size_t width = 0;
  for (const auto& row : report.rows) width = std::max(width, row.name.size());
  for (const auto& row : report.rows) {
    csv += csv_row(
        {row.name, format_double(row.max_dev), format_double(row.tol), row.pass ? "1" : "0"});
    std::cout << "suite: " << row.name << std::string(width - row.name.size() + 2, ' ')
              << "max_dev=" << format_double(row.max_dev) << " tol=" << format_double(row.tol)
              << " " << pass_str(row.pass) << "\n";
  }
  write_text_file(cfg.out_dir + "/suite.csv", csv);

  Json j = to_json(report);
  j["notes"] = cfg.notes;
  write_text_file(cfg.out_dir + "/suite.json", j.dump(2) + "\n");

  std::cout << "identity-suite: " << pass_str(report.all_pass) << "\n";
  return report.all_pass ? 0 : 1;
}

int run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::isotropic:
      return run_isotropic(cfg);
    case ExperimentKind::sde_transform:
      return run_sde_transform(cfg);
    case ExperimentKind::identity_suite:
      return run_identity_suite(cfg);
  }
  throw Error("unreachable experiment kind");
}

}  // namespace lent
