#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "magflow/runner.hpp"
#include "test_helpers.hpp"

using namespace magflow;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("magflow_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Json so3_geodesic_config(double h = 2e-3, double eps = 1.0) {
  Json j;
  j["kind"] = "geodesic";
  j["algebra"] = {{"family", "so"}, {"n", 3}};
  j["seed_a"] = {0.0, 0.0, 1.0};
  j["epsilon"] = eps;
  j["integrator"] = {{"h", h}, {"t_end", 2.0}, {"project_every", 10}};
  j["rng"] = {{"phase_seed", 3}, {"sample_seed", 900}};
  return j;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(MAGFLOW_BIN) + " " + args + " 2>/dev/null >/dev/null";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

} // namespace

TEST_CASE("config validation lists every problem at once") {
  CHECK_THROWS_AS(ExperimentConfig::from_json(Json::object()), ConfigError);
  try {
    ExperimentConfig::from_json(Json::object());
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("kind") != std::string::npos);
    CHECK(msg.find("algebra") != std::string::npos);
    CHECK(msg.find("seed_a") != std::string::npos);
    CHECK(msg.find("epsilon") != std::string::npos);
    CHECK(msg.find("integrator") != std::string::npos);
  }

  Json bad = so3_geodesic_config();
  bad["kind"] = "frobnicate";
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);

  Json neg = so3_geodesic_config();
  neg["integrator"]["h"] = -1.0;
  CHECK_THROWS_AS(ExperimentConfig::from_json(neg), ConfigError);
}

TEST_CASE("algebra json loader") {
  auto so3 = algebra_from_json({{"family", "so"}, {"n", 3}});
  CHECK(so3->name() == "so(3)");
  auto su3 = algebra_from_json({{"family", "su"}, {"n", 3}});
  CHECK(su3->dim() == 8);

  // explicit basis round trip: encode so(3) matrices by hand
  Json basis = Json::array();
  for (const auto& m : so3->basis()) {
    Json jm = Json::array();
    for (int r = 0; r < 3; ++r) {
      Json row = Json::array();
      for (int c = 0; c < 3; ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
      jm.push_back(row);
    }
    basis.push_back(jm);
  }
  auto custom = algebra_from_json({{"name", "mine"}, {"rank", 1}, {"basis", basis}});
  CHECK(custom->dim() == 3);
  AlgebraVector e1 = AlgebraVector::Zero(3), e2 = AlgebraVector::Zero(3);
  e1[0] = 1;
  e2[1] = 1;
  CHECK((custom->bracket(e1, e2) - so3->bracket(e1, e2)).norm() < 1e-13);

  CHECK_THROWS_AS(algebra_from_json({{"family", "sp"}, {"n", 2}}), ConfigError);
  CHECK_THROWS_AS(algebra_from_json(Json::object()), ConfigError);
}

TEST_CASE("phase point serialization") {
  auto su3 = LieAlgebraSpec::su(3);
  const OrbitContext ctx(su3, magflow::testing::su3_diag(*su3, 1.0, 0.3));
  const PhasePoint pt = ctx.sample_phase_point(17);
  const Json j = phase_point_to_json(*su3, pt, "su(3)");
  CHECK(j.at("algebra") == "su(3)");
  CHECK(j.at("invariants").size() == 2);
  const PhasePoint back = phase_point_from_json(*su3, j);
  CHECK((back.x - pt.x).norm() == 0.0);
  CHECK((back.p - pt.p).norm() == 0.0);
  CHECK_FALSE(back.witness_log.has_value());
}

TEST_CASE("runs are reproducible and cross-referenced") {
  const ExperimentConfig cfg = ExperimentConfig::from_json(so3_geodesic_config());

  TempDir d1("run1"), d2("run2");
  const RunResult r1 = run_experiment(cfg, d1.path / "out", true, Exec::OpenMP);
  const RunResult r2 = run_experiment(cfg, d2.path / "out", true, Exec::Serial);

  // identical bytes for the scientific outputs, regardless of the exec path
  CHECK(read_file(d1.path / "out/trajectory.csv") ==
        read_file(d2.path / "out/trajectory.csv"));
  CHECK(read_file(d1.path / "out/drift_report.json") ==
        read_file(d2.path / "out/drift_report.json"));
  CHECK(r1.manifest_hash == r2.manifest_hash);

  // every output cross-references the manifest hash
  const std::string csv = read_file(d1.path / "out/trajectory.csv");
  CHECK(csv.find("# manifest_hash " + r1.manifest_hash) == 0);
  CHECK(csv.find("t,x_1,x_2,x_3,p_1,p_2,p_3,H,res_orbit,res_cotangent") !=
        std::string::npos);
  const Json drift = read_json_file(d1.path / "out/drift_report.json");
  CHECK(drift.at("manifest_hash") == r1.manifest_hash);

  // manifests agree except for wall time
  Json m1 = r1.manifest, m2 = r2.manifest;
  m1.erase("wall_time_s");
  m2.erase("wall_time_s");
  CHECK(m1 == m2);

  // refusal to overwrite an existing run directory
  CHECK_THROWS_AS(run_experiment(cfg, d1.path / "out", true), IoError);
}

TEST_CASE("compare: identical runs give an empty diff") {
  const ExperimentConfig cfg = ExperimentConfig::from_json(so3_geodesic_config());
  TempDir d("cmp");
  const RunResult r1 = run_experiment(cfg, d.path / "a", true);
  const RunResult r2 = run_experiment(cfg, d.path / "b", true);
  const CompareResult c = compare_manifests(r1.manifest, r2.manifest);
  CHECK(c.identical);
  CHECK(c.report.at("differences").empty());
}

TEST_CASE("compare: halving h shows fourth-order error decay") {
  TempDir d("conv");
  const ExperimentConfig coarse = ExperimentConfig::from_json(so3_geodesic_config(0.02));
  const ExperimentConfig fine = ExperimentConfig::from_json(so3_geodesic_config(0.01));
  const RunResult ra = run_experiment(coarse, d.path / "a", true);
  const RunResult rb = run_experiment(fine, d.path / "b", true);
  const CompareResult c = compare_manifests(ra.manifest, rb.manifest);
  CHECK_FALSE(c.identical);
  const double ratio = c.report.at("ratio_oracle_terminal_error").get<double>();
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("compare: magnetic strength moves the circle radius") {
  TempDir d("radius");
  Json j0 = so3_geodesic_config(1e-3, 0.0);
  j0["integrator"]["t_end"] = 7.0;
  Json j1 = so3_geodesic_config(1e-3, 1.0);
  j1["integrator"]["t_end"] = 7.0;
  const RunResult r0 =
      run_experiment(ExperimentConfig::from_json(j0), d.path / "a", true);
  const RunResult r1 =
      run_experiment(ExperimentConfig::from_json(j1), d.path / "b", true);
  const double rad0 = r0.manifest.at("metrics").at("measured_radius").get<double>();
  const double rad1 = r1.manifest.at("metrics").at("measured_radius").get<double>();
  CHECK(rad0 - rad1 == doctest::Approx(M_PI / 2 - M_PI / 4).epsilon(1e-5));

  // kind mismatch is a usage error
  Json certish = r1.manifest;
  certish["kind"] = "certify";
  CHECK_THROWS_AS(compare_manifests(r0.manifest, certish), ConfigError);
}

TEST_CASE("semidirect runner exports embedded states") {
  Json j;
  j["kind"] = "semidirect";
  j["algebra"] = {{"family", "so"}, {"n", 3}};
  j["seed_a"] = {0.0, 0.0, 1.0};
  j["epsilon"] = 0.8;
  j["b"] = {0.1, 0.2, 0.3};
  j["integrator"] = {{"h", 1e-3}, {"t_end", 1.0}, {"project_every", 0}};
  TempDir d("sd");
  const RunResult r =
      run_experiment(ExperimentConfig::from_json(j), d.path / "out", true);
  CHECK(r.manifest.at("metrics").at("energy_drift_rel").get<double>() < 1e-9);
  CHECK(r.manifest.at("metrics").at("max_family_drift_rel").get<double>() < 1e-8);
  CHECK(fs::exists(d.path / "out/trajectory.csv"));
}

TEST_CASE("cli binary exit codes") {
  TempDir d("cli");

  // config error -> 1
  {
    std::ofstream bad(d.path / "bad.json");
    bad << "{}";
  }
  CHECK(run_binary("run --config " + (d.path / "bad.json").string() + " --out " +
                   (d.path / "o1").string()) == 1);

  // clean run -> 0
  {
    std::ofstream good(d.path / "good.json");
    good << so3_geodesic_config().dump();
  }
  CHECK(run_binary("--quiet run --config " + (d.path / "good.json").string() +
                   " --out " + (d.path / "o2").string()) == 0);
  CHECK(fs::exists(d.path / "o2/manifest.json"));

  // refusing to reuse the run directory -> 3
  CHECK(run_binary("--quiet run --config " + (d.path / "good.json").string() +
                   " --out " + (d.path / "o2").string()) == 3);

  // compare of the manifest with itself -> 0
  CHECK(run_binary("compare " + (d.path / "o2/manifest.json").string() + " " +
                   (d.path / "o2/manifest.json").string()) == 0);

  // missing file -> 3
  CHECK(run_binary("compare missing_a.json missing_b.json") == 3);

  // numerical divergence -> 2
  {
    Json diverge = so3_geodesic_config(1.0);
    diverge["integrator"]["t_end"] = 50.0;
    diverge["integrator"]["project_every"] = 0;
    std::ofstream out(d.path / "diverge.json");
    out << diverge.dump();
  }
  CHECK(run_binary("--quiet run --config " + (d.path / "diverge.json").string() +
                   " --out " + (d.path / "o3").string()) == 2);
}
