#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "magflow/io.hpp"
#include "magflow/kernels.hpp"

namespace magflow {

enum class ExperimentKind { Geodesic, Pendulum, Semidirect, RadiusScan, Certify, Lax };

std::string experiment_kind_name(ExperimentKind k);

/// One reproducible run. Parsed from a single JSON document; every field that
/// affects numbers lives here so the manifest can replay the run.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Geodesic;
  Json algebra_json;
  std::vector<double> seed_a;
  double epsilon = 0.0;
  std::vector<double> epsilons;        // radius_scan
  std::vector<double> b;               // optional, defaults to zero
  double kappa = 1.0;
  double h = 1e-3;
  double t_end = 10.0;
  int project_every = 10;
  std::vector<double> lambda_grid;     // optional, defaults per rank
  std::vector<double> lax_lambdas{0.3, 1.0, 2.5};
  std::uint64_t phase_seed = 1;        // initial-condition draw
  std::uint64_t sample_seed = 1000;    // certification batches
  int samples = 20;
  std::optional<std::string> output;

  /// Throws ConfigError listing every missing/invalid field at once.
  static ExperimentConfig from_json(const Json& j);

  /// Defaulted, key-sorted document; its hash identifies the run.
  Json canonical_json() const;
};

struct RunResult {
  std::filesystem::path out_dir;
  std::string manifest_hash;
  Json manifest;
};

/// Executes the experiment, writes outputs under out_dir (which must not
/// already contain files) and returns the manifest. Deterministic for a
/// fixed config; the manifest's wall_time_s field is the only exception.
RunResult run_experiment(const ExperimentConfig& config,
                         const std::filesystem::path& out_dir, bool quiet,
                         Exec exec = Exec::OpenMP);

struct CompareResult {
  Json report;
  bool identical = false;
};

/// Per-metric differences between two run manifests of the same kind.
CompareResult compare_manifests(const Json& manifest_a, const Json& manifest_b,
                                double tol = 1e-12);

} // namespace magflow
