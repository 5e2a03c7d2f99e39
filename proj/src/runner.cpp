#include "magflow/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <omp.h>

#include "magflow/rng.hpp"

namespace magflow {

namespace {

constexpr double kNumberTol = 1e-12;

std::vector<double> to_vector(const Json& j) {
  return j.get<std::vector<double>>();
}

AlgebraVector to_algebra_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

double energy_drift_rel(const Trajectory& traj) {
  const double e0 = traj.diagnostics.front().energy;
  double worst = 0.0;
  for (const auto& d : traj.diagnostics)
    worst = std::max(worst, std::abs(d.energy - e0));
  return worst / std::max(std::abs(e0), 1e-8);
}

double worst_constraint(const Trajectory& traj) {
  double worst = 0.0;
  for (const auto& d : traj.diagnostics)
    worst = std::max(worst, std::max(d.res_orbit, d.res_cotangent));
  return worst;
}

double max_drift_rel(const std::vector<MemberDrift>& drifts) {
  double worst = 0.0;
  for (const auto& d : drifts) worst = std::max(worst, d.max_drift_rel);
  return worst;
}

/// Deterministic unit vector for default shift directions.
AlgebraVector unit_gaussian(const LieAlgebraSpec& spec, std::uint64_t seed) {
  GaussianStream g(seed);
  AlgebraVector v = g.vector(spec.dim());
  return v / spec.norm(v);
}

} // namespace

std::string experiment_kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Geodesic: return "geodesic";
    case ExperimentKind::Pendulum: return "pendulum";
    case ExperimentKind::Semidirect: return "semidirect";
    case ExperimentKind::RadiusScan: return "radius_scan";
    case ExperimentKind::Certify: return "certify";
    case ExperimentKind::Lax: return "lax";
  }
  return "unknown";
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
  std::vector<std::string> errors;
  ExperimentConfig cfg;

  if (!j.is_object()) throw ConfigError("config: expected a JSON object");

  if (!j.contains("kind")) {
    errors.push_back("kind: missing (one of geodesic, pendulum, semidirect, radius_scan, certify, lax)");
  } else {
    const std::string k = j.at("kind").get<std::string>();
    if (k == "geodesic") cfg.kind = ExperimentKind::Geodesic;
    else if (k == "pendulum") cfg.kind = ExperimentKind::Pendulum;
    else if (k == "semidirect") cfg.kind = ExperimentKind::Semidirect;
    else if (k == "radius_scan") cfg.kind = ExperimentKind::RadiusScan;
    else if (k == "certify") cfg.kind = ExperimentKind::Certify;
    else if (k == "lax") cfg.kind = ExperimentKind::Lax;
    else errors.push_back("kind: unknown value '" + k + "'");
  }

  if (!j.contains("algebra")) errors.push_back("algebra: missing");
  else cfg.algebra_json = j.at("algebra");

  if (!j.contains("seed_a")) errors.push_back("seed_a: missing coordinate array");
  else cfg.seed_a = to_vector(j.at("seed_a"));

  const bool needs_eps = cfg.kind != ExperimentKind::RadiusScan;
  if (needs_eps) {
    if (!j.contains("epsilon")) errors.push_back("epsilon: missing");
    else cfg.epsilon = j.at("epsilon").get<double>();
  }
  if (cfg.kind == ExperimentKind::RadiusScan) {
    if (!j.contains("epsilons") || j.at("epsilons").empty())
      errors.push_back("epsilons: missing or empty (radius_scan needs a list)");
    else cfg.epsilons = to_vector(j.at("epsilons"));
  }

  if (j.contains("b")) cfg.b = to_vector(j.at("b"));
  cfg.kappa = j.value("kappa", 1.0);

  if (j.contains("integrator")) {
    const Json& ji = j.at("integrator");
    cfg.h = ji.value("h", cfg.h);
    cfg.t_end = ji.value("t_end", cfg.t_end);
    cfg.project_every = ji.value("project_every", cfg.project_every);
  } else if (cfg.kind != ExperimentKind::Certify) {
    errors.push_back("integrator: missing {h, t_end, project_every}");
  }
  if (cfg.h <= 0) errors.push_back("integrator.h: must be positive");
  if (cfg.t_end <= 0) errors.push_back("integrator.t_end: must be positive");
  if (cfg.project_every < 0) errors.push_back("integrator.project_every: must be >= 0");

  if (j.contains("lambda_grid")) cfg.lambda_grid = to_vector(j.at("lambda_grid"));
  if (j.contains("lax_lambdas")) cfg.lax_lambdas = to_vector(j.at("lax_lambdas"));

  if (j.contains("rng")) {
    cfg.phase_seed = j.at("rng").value("phase_seed", cfg.phase_seed);
    cfg.sample_seed = j.at("rng").value("sample_seed", cfg.sample_seed);
  }
  cfg.samples = j.value("samples", cfg.samples);
  if (cfg.samples < 1) errors.push_back("samples: must be >= 1");

  if (j.contains("output")) cfg.output = j.at("output").get<std::string>();

  if (!errors.empty()) {
    std::ostringstream os;
    os << "invalid config (" << errors.size() << " problems):";
    for (const auto& e : errors) os << "\n  - " << e;
    throw ConfigError(os.str());
  }
  return cfg;
}

Json ExperimentConfig::canonical_json() const {
  Json j;
  j["kind"] = experiment_kind_name(kind);
  j["algebra"] = algebra_json;
  j["seed_a"] = seed_a;
  if (kind == ExperimentKind::RadiusScan) j["epsilons"] = epsilons;
  else j["epsilon"] = epsilon;
  j["b"] = b;
  j["kappa"] = kappa;
  j["integrator"] = {{"h", h}, {"t_end", t_end}, {"project_every", project_every}};
  j["lambda_grid"] = lambda_grid;
  j["lax_lambdas"] = lax_lambdas;
  j["rng"] = {{"phase_seed", phase_seed}, {"sample_seed", sample_seed}};
  j["samples"] = samples;
  return j;
}

namespace {

struct RunState {
  ExperimentConfig cfg;
  std::shared_ptr<const LieAlgebraSpec> spec;
  AlgebraVector a;
  AlgebraVector b;
  std::vector<double> lambda_grid;
  std::string hash;
  Exec exec = Exec::OpenMP;
  Json metrics;
  Json extra;              // kind-specific report sections
  std::vector<std::string> outputs;
};

void prepare(RunState& rs) {
  rs.spec = algebra_from_json(rs.cfg.algebra_json);
  if (static_cast<int>(rs.cfg.seed_a.size()) != rs.spec->dim())
    throw ConfigError("seed_a: expected " + std::to_string(rs.spec->dim()) +
                      " coordinates for " + rs.spec->name());
  rs.a = to_algebra_vector(rs.cfg.seed_a);
  if (rs.a.norm() == 0.0) throw ConfigError("seed_a: must be nonzero");

  if (rs.cfg.b.empty()) {
    rs.b = AlgebraVector::Zero(rs.spec->dim());
  } else {
    if (static_cast<int>(rs.cfg.b.size()) != rs.spec->dim())
      throw ConfigError("b: expected " + std::to_string(rs.spec->dim()) +
                        " coordinates");
    rs.b = to_algebra_vector(rs.cfg.b);
  }
  rs.lambda_grid = rs.cfg.lambda_grid.empty() ? default_lambda_grid(rs.spec->rank())
                                              : rs.cfg.lambda_grid;

  if (rs.cfg.kind == ExperimentKind::RadiusScan && rs.spec->name() != "so(3)")
    throw ConfigError("radius_scan: requires the so(3) algebra");
}

void run_geodesic(RunState& rs, const std::filesystem::path& dir) {
  const OrbitContext ctx(rs.spec, rs.a);
  const MagneticSetup setup = MagneticSetup::geodesic(rs.cfg.epsilon, rs.spec->dim());
  PhasePoint start = ctx.sample_phase_point(rs.cfg.phase_seed);
  start.p /= rs.spec->norm(start.p);  // geodesic runs are unit speed

  const Trajectory traj = integrate_pendulum(ctx, start, setup, rs.cfg.t_end,
                                             rs.cfg.h, rs.cfg.project_every);

  rs.metrics["energy_drift_rel"] = energy_drift_rel(traj);
  rs.metrics["worst_constraint_residual"] = worst_constraint(traj);

  const PhasePoint oracle =
      exact_magnetic_geodesic(ctx, start, rs.cfg.epsilon, rs.cfg.t_end);
  auto [xT, pT] = unpack_phase(traj.terminal());
  rs.metrics["oracle_terminal_error"] = std::sqrt(
      (xT - oracle.x).squaredNorm() + (pT - oracle.p).squaredNorm());

  const IntegralFamily fam = merge_families(
      family_shift(rs.spec, unit_gaussian(*rs.spec, rs.cfg.sample_seed + 7),
                   rs.lambda_grid, rs.cfg.epsilon),
      momentum_components(rs.spec, rs.cfg.epsilon));
  const auto drifts = family_drift(fam, traj, false);
  rs.metrics["max_family_drift_rel"] = max_drift_rel(drifts);
  write_json_file(dir / "drift_report.json",
                  Json{{"manifest_hash", rs.hash},
                       {"family", family_kind_name(fam.kind)},
                       {"entries", drift_report_to_json(drifts)}});
  rs.outputs.push_back("drift_report.json");

  if (rs.spec->name() == "so(3)" && std::abs(ctx.algebra().inner(rs.a, rs.a) - 1.0) < 1e-9) {
    try {
      const CircleFit fit = measure_circle_radius(traj);
      const double expected = rs.cfg.epsilon == 0.0
                                  ? M_PI / 2
                                  : std::atan(1.0 / std::abs(rs.cfg.epsilon));
      rs.metrics["measured_radius"] = fit.radius;
      rs.metrics["expected_radius"] = expected;
      rs.metrics["radius_abs_err"] = std::abs(fit.radius - expected);
    } catch (const NumericError&) {
      // non-circular start (e.g. non-unit speed); radius metrics are optional
    }
  }

  write_trajectory_csv(dir / "trajectory.csv", traj, rs.spec->dim(), rs.hash);
  rs.outputs.push_back("trajectory.csv");
}

void run_pendulum(RunState& rs, const std::filesystem::path& dir) {
  const OrbitContext ctx(rs.spec, rs.a);
  const MagneticSetup setup{rs.cfg.epsilon, rs.b, rs.cfg.kappa};
  const PhasePoint start = ctx.sample_phase_point(rs.cfg.phase_seed);

  const Trajectory traj = integrate_pendulum(ctx, start, setup, rs.cfg.t_end,
                                             rs.cfg.h, rs.cfg.project_every);

  rs.metrics["energy_drift_rel"] = energy_drift_rel(traj);
  rs.metrics["worst_constraint_residual"] = worst_constraint(traj);
  rs.metrics["momentum_law_residual"] = momentum_law_residual(ctx, traj, setup);
  rs.metrics["pushforward_residual"] = pushforward_field_residual(ctx, traj, setup);

  const IntegralFamily fam = merge_families(
      family_semidirect(rs.spec, setup.effective_b(), rs.lambda_grid, rs.cfg.epsilon),
      hamiltonian_family(rs.spec, setup));
  const auto drifts = family_drift(fam, traj, false);
  rs.metrics["max_family_drift_rel"] = max_drift_rel(drifts);
  write_json_file(dir / "drift_report.json",
                  Json{{"manifest_hash", rs.hash},
                       {"family", family_kind_name(FamilyKind::SemidirectB)},
                       {"entries", drift_report_to_json(drifts)}});
  rs.outputs.push_back("drift_report.json");

  for (double lam : rs.cfg.lax_lambdas) {
    const auto spectra = lax_spectra_over_trajectory(
        *rs.spec, traj, false, rs.cfg.epsilon, setup.effective_b(), lam, rs.exec);
    double worst = 0.0;
    for (const auto& sp : spectra)
      worst = std::max(worst, spectrum_distance(sp, spectra.front()));
    std::ostringstream key;
    key << "lax_drift[lambda=" << lam << "]";
    rs.metrics[key.str()] = worst;
  }

  write_trajectory_csv(dir / "trajectory.csv", traj, rs.spec->dim(), rs.hash);
  rs.outputs.push_back("trajectory.csv");
}

void run_semidirect(RunState& rs, const std::filesystem::path& dir) {
  const OrbitContext ctx(rs.spec, rs.a);
  const MagneticSetup setup{rs.cfg.epsilon, rs.b, rs.cfg.kappa};
  const PhasePoint start = ctx.sample_phase_point(rs.cfg.phase_seed);
  const ComplexAlgebraVector z0 = theta_map(*rs.spec, start, rs.cfg.epsilon);

  const Trajectory sd = integrate_semidirect(ctx, z0, setup, rs.cfg.t_end, rs.cfg.h,
                                             rs.cfg.project_every);
  rs.metrics["energy_drift_rel"] = energy_drift_rel(sd);
  rs.metrics["worst_constraint_residual"] = worst_constraint(sd);

  const IntegralFamily fam =
      family_semidirect(rs.spec, setup.effective_b(), rs.lambda_grid, rs.cfg.epsilon);
  const auto drifts = family_drift(fam, sd, true);
  rs.metrics["max_family_drift_rel"] = max_drift_rel(drifts);
  write_json_file(dir / "drift_report.json",
                  Json{{"manifest_hash", rs.hash},
                       {"family", family_kind_name(fam.kind)},
                       {"entries", drift_report_to_json(drifts)}});
  rs.outputs.push_back("drift_report.json");

  // export in embedded coordinates: x = eta, p recovered from the momentum
  Trajectory embedded;
  embedded.times = sd.times;
  embedded.diagnostics = sd.diagnostics;
  embedded.states.reserve(sd.size());
  for (const auto& s : sd.states) {
    const ComplexAlgebraVector z = ComplexAlgebraVector::from_flat(s);
    AlgebraVector m = z.re - rs.cfg.epsilon * z.im;
    const SubspaceBasis ann = ann_basis(*rs.spec, z.im, ctx.kernel_tol());
    m = project(*rs.spec, m, ann.vectors, /*onto_complement=*/true);
    const AlgebraVector p = ctx.recover_p(z.im, m);
    embedded.states.push_back(pack_phase(z.im, p));
  }
  write_trajectory_csv(dir / "trajectory.csv", embedded, rs.spec->dim(), rs.hash);
  rs.outputs.push_back("trajectory.csv");
}

void run_radius_scan(RunState& rs, const std::filesystem::path& dir) {
  AlgebraVector a = rs.a;
  const double anorm = rs.spec->norm(a);
  if (std::abs(anorm - 1.0) > 1e-12) a /= anorm;  // unit orbit
  const OrbitContext ctx(rs.spec, a);

  AlgebraVector p0 = ctx.cotangent_sample(a, rs.cfg.phase_seed);
  p0 /= rs.spec->norm(p0);  // unit speed
  PhasePoint start{a, p0, AlgebraVector::Zero(3)};

  const std::size_t n = rs.cfg.epsilons.size();
  std::vector<double> measured(n), expected(n), runtime(n);

  const auto body = [&](std::size_t k) {
    const double eps = rs.cfg.epsilons[k];
    const auto t0 = std::chrono::steady_clock::now();
    const MagneticSetup setup = MagneticSetup::geodesic(eps, 3);
    const Trajectory traj = integrate_pendulum(ctx, start, setup, rs.cfg.t_end,
                                               rs.cfg.h, rs.cfg.project_every);
    const CircleFit fit = measure_circle_radius(traj);
    measured[k] = fit.radius;
    expected[k] = eps == 0.0 ? M_PI / 2 : std::atan(1.0 / std::abs(eps));
    runtime[k] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                     .count();
  };
  if (rs.exec == Exec::OpenMP) {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t k = 0; k < static_cast<std::int64_t>(n); ++k)
      body(static_cast<std::size_t>(k));
  } else {
    for (std::size_t k = 0; k < n; ++k) body(k);
  }

  double worst = 0.0;
  Json rows = Json::array();
  std::ofstream csv(dir / "radii.csv");
  if (!csv) throw IoError("cannot open radii.csv");
  csv << "# manifest_hash " << rs.hash << "\n";
  csv << "epsilon,measured_radius,expected_radius,abs_err\n";
  char buf[128];
  for (std::size_t k = 0; k < n; ++k) {
    const double err = std::abs(measured[k] - expected[k]);
    worst = std::max(worst, err);
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n",
                  rs.cfg.epsilons[k], measured[k], expected[k], err);
    csv << buf;
    rows.push_back({{"epsilon", rs.cfg.epsilons[k]},
                    {"measured", measured[k]},
                    {"expected", expected[k]},
                    {"abs_err", err},
                    {"runtime_s", runtime[k]}});
    std::ostringstream key;
    key << "radius_abs_err[eps=" << rs.cfg.epsilons[k] << "]";
    rs.metrics[key.str()] = err;
    std::ostringstream mkey;
    mkey << "measured_radius[eps=" << rs.cfg.epsilons[k] << "]";
    rs.metrics[mkey.str()] = measured[k];
  }
  rs.metrics["max_radius_abs_err"] = worst;
  rs.extra["radius_scan"] = rows;
  rs.outputs.push_back("radii.csv");
}

void run_certify(RunState& rs, const std::filesystem::path& dir) {
  const OrbitContext ctx(rs.spec, rs.a);
  const double eps = rs.cfg.epsilon;
  if (rs.b.norm() == 0.0)
    throw ConfigError("certify: b must be a nonzero (regular) vector");

  Json cert;

  // completeness of the semidirect family, plus the truncated negative control
  const IntegralFamily fam = family_semidirect(rs.spec, rs.b, rs.lambda_grid, eps);
  const CompletenessReport rep =
      completeness_report(fam, ctx, rs.cfg.samples, rs.cfg.sample_seed);
  cert["completeness"] = completeness_to_json(rep);
  rs.metrics["ddim"] = rep.ddim;
  rs.metrics["dind"] = rep.dind;
  rs.metrics["phase_dim"] = rep.phase_dim;
  rs.metrics["completeness_verdict"] = rep.verdict ? 1.0 : 0.0;

  // one shift value: r * 2 members cannot reach a complete count
  const std::vector<double> truncated_grid = {rs.lambda_grid.front()};
  const IntegralFamily truncated = family_semidirect(rs.spec, rs.b, truncated_grid, eps);
  const CompletenessReport rep_neg = completeness_report(
      truncated, ctx, std::min(rs.cfg.samples, 8), rs.cfg.sample_seed);
  cert["negative_control"] = completeness_to_json(rep_neg);
  rs.metrics["negative_control_verdict"] = rep_neg.verdict ? 1.0 : 0.0;

  // pencil conditions at eps a + i a, with the proof's b in ann(a)
  AlgebraVector pb = project(*rs.spec, rs.b, ctx.seed_ann_basis().vectors);
  if (rs.spec->norm(pb) < 1e-10) {
    GaussianStream g(rs.cfg.sample_seed + 101);
    const AlgebraVector raw = g.vector(rs.spec->dim());
    pb = project(*rs.spec, raw, ctx.seed_ann_basis().vectors);
  }
  pb /= rs.spec->norm(pb);
  const bool pb_regular = ann_basis(*rs.spec, pb).dim() == rs.spec->rank();

  const A1Scan a1 = condition_A1(*rs.spec, rs.a, pb, eps, rs.lambda_grid);
  Json ja1;
  ja1["expected_rank"] = a1.expected_rank;
  ja1["ok"] = a1.ok;
  ja1["min_singular_gap"] = a1.min_gap;
  Json samples = Json::array();
  for (const auto& s : a1.samples)
    samples.push_back({{"lambda1", s[0]}, {"lambda2", s[1]}, {"rank", s[2]}});
  ja1["samples"] = samples;
  cert["condition_A1"] = ja1;
  rs.metrics["a1_ok"] = a1.ok ? 1.0 : 0.0;
  rs.metrics["a1_min_gap"] = a1.min_gap;

  const A2Result a2 = condition_A2(*rs.spec, rs.a, pb, eps);
  cert["condition_A2"] = {{"dim_kernel", a2.dim_kernel},
                          {"dim_K", a2.dim_K},
                          {"expected", a2.expected},
                          {"ok", a2.ok},
                          {"gap_kernel", a2.gap_kernel},
                          {"gap_restricted", a2.gap_restricted},
                          {"pencil_b_regular", pb_regular}};
  rs.metrics["a2_dim_K"] = a2.dim_K;
  rs.metrics["a2_ok"] = a2.ok ? 1.0 : 0.0;

  const ComplexAlgebraVector mu0{eps * rs.a, rs.a};
  write_matrix_csv(dir / "pencil_lambda10.csv",
                   pencil_form(*rs.spec, mu0, 1.0, 0.0, pb).matrix, rs.hash);
  write_matrix_csv(dir / "pencil_lambda01.csv",
                   pencil_form(*rs.spec, mu0, 0.0, 1.0, pb).matrix, rs.hash);
  rs.outputs.push_back("pencil_lambda10.csv");
  rs.outputs.push_back("pencil_lambda01.csv");

  // involutivity sweep at unit momentum scale
  std::vector<ComplexAlgebraVector> mus;
  for (int s = 0; s < rs.cfg.samples; ++s) {
    PhasePoint pt = ctx.sample_phase_point(rs.cfg.sample_seed + 31 * s);
    pt.p /= rs.spec->norm(pt.p);
    mus.push_back(theta_map(*rs.spec, pt, eps));
  }
  const double worst_bracket = max_pairwise_bracket(fam, mus, rs.exec);
  cert["involutivity"] = {{"max_abs_bracket", worst_bracket},
                          {"points", rs.cfg.samples},
                          {"members", fam.members.size()}};
  rs.metrics["max_abs_bracket"] = worst_bracket;

  // invariant tori and the dind cross-check of the momentum + invariants family
  const ToriReport tori = tori_dimension(ctx, rs.cfg.samples, rs.cfg.sample_seed);
  const IntegralFamily f1f2 =
      merge_families(momentum_components(rs.spec, eps),
                     invariant_catalog(rs.spec, {0.3, 0.9, 1.7}, eps));
  const CompletenessReport rep_nc = completeness_report(
      f1f2, ctx, std::min(rs.cfg.samples, 8), rs.cfg.sample_seed + 77);
  cert["tori"] = {{"dimension", tori.dimension},
                  {"samples", tori.samples},
                  {"outliers", tori.outlier_samples},
                  {"dind_momentum_plus_invariants", rep_nc.dind},
                  {"noncommutative_verdict", rep_nc.verdict},
                  {"matches", rep_nc.dind == tori.dimension}};
  rs.metrics["tori_dimension"] = tori.dimension;
  rs.metrics["noncommutative_verdict"] = rep_nc.verdict ? 1.0 : 0.0;

  // rank constancy of Lambda_{1, lambda} at sampled images
  {
    Json rows = Json::array();
    bool constant = true;
    for (int s = 0; s < 3; ++s) {
      const PhasePoint pt = ctx.sample_phase_point(rs.cfg.sample_seed + 997 * s);
      const ComplexAlgebraVector mu = theta_map(*rs.spec, pt, eps);
      int first = -1;
      for (int k = 0; k < 10; ++k) {
        const double lam = 0.1 + 0.35 * k;
        const int r = form_rank(pencil_form(*rs.spec, mu, 1.0, lam, rs.b)).rank;
        if (first < 0) first = r;
        if (r != first) constant = false;
      }
      rows.push_back({{"sample", s}, {"rank", first}});
    }
    cert["rank_constancy"] = {{"constant", constant}, {"per_sample", rows}};
    rs.metrics["rank_constancy"] = constant ? 1.0 : 0.0;
  }

  if (ctx.seed_ann_basis().dim() > rs.spec->rank()) {
    cert["note"] = "singular orbit: commutativity of the invariant-function "
                   "algebra here reflects the symmetric-space structure, which "
                   "this toolkit checks numerically but does not prove";
  }

  cert["manifest_hash"] = rs.hash;
  write_json_file(dir / "certification.json", cert);
  rs.outputs.push_back("certification.json");
  rs.extra["certification"] = cert;
}

void run_lax(RunState& rs, const std::filesystem::path& dir) {
  const OrbitContext ctx(rs.spec, rs.a);
  const MagneticSetup setup{rs.cfg.epsilon, rs.b, rs.cfg.kappa};
  const PhasePoint start = ctx.sample_phase_point(rs.cfg.phase_seed);
  const Trajectory traj = integrate_pendulum(ctx, start, setup, rs.cfg.t_end,
                                             rs.cfg.h, rs.cfg.project_every);

  Json rows = Json::array();
  double worst_drift = 0.0, worst_residual = 0.0;
  for (double lam : rs.cfg.lax_lambdas) {
    const auto spectra = lax_spectra_over_trajectory(
        *rs.spec, traj, false, rs.cfg.epsilon, setup.effective_b(), lam, rs.exec);
    double drift = 0.0;
    for (const auto& sp : spectra)
      drift = std::max(drift, spectrum_distance(sp, spectra.front()));
    const double res = lax_derivative_residual(*rs.spec, traj, false, rs.cfg.epsilon,
                                               setup.effective_b(), lam);
    rows.push_back({{"lambda", lam},
                    {"max_eigenvalue_drift", drift},
                    {"derivative_residual", res}});
    worst_drift = std::max(worst_drift, drift);
    worst_residual = std::max(worst_residual, res);
    std::ostringstream key;
    key << "lax_drift[lambda=" << lam << "]";
    rs.metrics[key.str()] = drift;
  }
  rs.metrics["max_lax_drift"] = worst_drift;
  rs.metrics["max_lax_derivative_residual"] = worst_residual;

  write_json_file(dir / "lax_report.json",
                  Json{{"manifest_hash", rs.hash}, {"entries", rows}});
  rs.outputs.push_back("lax_report.json");
  write_trajectory_csv(dir / "trajectory.csv", traj, rs.spec->dim(), rs.hash);
  rs.outputs.push_back("trajectory.csv");
}

} // namespace

RunResult run_experiment(const ExperimentConfig& config,
                         const std::filesystem::path& out_dir, bool quiet,
                         Exec exec) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::exists(out_dir)) {
    if (!fs::is_directory(out_dir))
      throw IoError("output path exists and is not a directory: " + out_dir.string());
    if (!fs::is_empty(out_dir, ec))
      throw IoError("output directory is not empty (runs are never overwritten): " +
                    out_dir.string());
  } else if (!fs::create_directories(out_dir, ec) || ec) {
    throw IoError("cannot create output directory: " + out_dir.string());
  }

  RunState rs;
  rs.cfg = config;
  rs.exec = exec;
  prepare(rs);
  rs.hash = fnv1a64_hex(rs.cfg.canonical_json().dump());

  const auto t0 = std::chrono::steady_clock::now();
  const auto dir = out_dir;
  switch (config.kind) {
    case ExperimentKind::Geodesic: run_geodesic(rs, dir); break;
    case ExperimentKind::Pendulum: run_pendulum(rs, dir); break;
    case ExperimentKind::Semidirect: run_semidirect(rs, dir); break;
    case ExperimentKind::RadiusScan: run_radius_scan(rs, dir); break;
    case ExperimentKind::Certify: run_certify(rs, dir); break;
    case ExperimentKind::Lax: run_lax(rs, dir); break;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunResult result;
  result.out_dir = out_dir;
  result.manifest_hash = rs.hash;
  Json& m = result.manifest;
  m["toolkit"] = "magflow";
  m["version"] = MAGFLOW_VERSION;
  m["kind"] = experiment_kind_name(config.kind);
  m["manifest_hash"] = rs.hash;
  m["config"] = rs.cfg.canonical_json();
  m["wall_time_s"] = wall;
  m["metrics"] = rs.metrics;
  if (!rs.extra.is_null()) m["reports"] = rs.extra;
  rs.outputs.push_back("manifest.json");
  m["outputs"] = rs.outputs;
  m["tolerances"] = {{"rank_tol", kRankTol},
                     {"kernel_tol", 1e-9},
                     {"divergence_gate", 1e-4},
                     {"compare_tol", kNumberTol}};
  write_json_file(out_dir / "manifest.json", m);

  if (!quiet) {
    std::printf("run %s: kind=%s wall=%.2fs -> %s\n", rs.hash.c_str(),
                experiment_kind_name(config.kind).c_str(), wall,
                out_dir.string().c_str());
    for (auto it = rs.metrics.begin(); it != rs.metrics.end(); ++it)
      std::printf("  %-40s %.6g\n", it.key().c_str(), it.value().get<double>());
  }
  return result;
}

CompareResult compare_manifests(const Json& manifest_a, const Json& manifest_b,
                                double tol) {
  const std::string kind_a = manifest_a.value("kind", std::string());
  const std::string kind_b = manifest_b.value("kind", std::string());
  if (kind_a.empty() || kind_b.empty())
    throw ConfigError("compare: manifests must carry a kind field");
  if (kind_a != kind_b)
    throw ConfigError("compare: incompatible kinds (" + kind_a + " vs " + kind_b + ")");

  const Json& ma = manifest_a.at("metrics");
  const Json& mb = manifest_b.at("metrics");

  Json diffs = Json::array();
  for (auto it = ma.begin(); it != ma.end(); ++it) {
    if (!mb.contains(it.key())) continue;
    const double va = it.value().get<double>();
    const double vb = mb.at(it.key()).get<double>();
    if (std::abs(va - vb) > tol) {
      diffs.push_back({{"metric", it.key()},
                       {"a", va},
                       {"b", vb},
                       {"abs_diff", std::abs(va - vb)}});
    }
  }

  CompareResult out;
  out.identical = diffs.empty();
  out.report["kind"] = kind_a;
  out.report["manifest_a"] = manifest_a.value("manifest_hash", std::string());
  out.report["manifest_b"] = manifest_b.value("manifest_hash", std::string());
  out.report["tolerance"] = tol;
  out.report["identical"] = out.identical;
  out.report["differences"] = diffs;

  // convergence-order reading for paired accuracy metrics
  for (const char* key : {"oracle_terminal_error", "max_family_drift_rel"}) {
    if (ma.contains(key) && mb.contains(key)) {
      const double va = ma.at(key).get<double>();
      const double vb = mb.at(key).get<double>();
      if (vb > 0.0) out.report[std::string("ratio_") + key] = va / vb;
    }
  }
  return out;
}

} // namespace magflow
