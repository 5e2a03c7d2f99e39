#include <cstdio>
#include <functional>
#include <string>

#include <CLI11.hpp>

#include "magflow/runner.hpp"

using namespace magflow;

namespace {

int guarded(bool quiet, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 1;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    if (!quiet) std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"magflow: magnetic flows on adjoint orbits, with integrability certification"};
  app.require_subcommand(1);

  bool quiet = false;
  int threads = 0;
  app.add_flag("--quiet", quiet, "suppress progress output");
  app.add_option("--threads", threads, "OpenMP thread count (0 = library default)");

  std::string config_path, out_dir;
  auto* run = app.add_subcommand("run", "execute one experiment from a JSON config");
  run->add_option("--config", config_path, "path to the experiment config JSON")
      ->required();
  run->add_option("--out", out_dir, "output directory (never overwritten)");

  std::string manifest_a, manifest_b;
  auto* cmp = app.add_subcommand("compare", "diff the metrics of two run manifests");
  cmp->add_option("manifest_a", manifest_a, "first manifest.json")->required();
  cmp->add_option("manifest_b", manifest_b, "second manifest.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (threads > 0) set_thread_count(threads);
  const Exec exec = Exec::OpenMP;

  if (run->parsed()) {
    return guarded(quiet, [&] {
      const Json j = read_json_file(config_path);
      const ExperimentConfig cfg = ExperimentConfig::from_json(j);
      std::string dir = out_dir;
      if (dir.empty()) {
        if (!cfg.output) throw ConfigError("no output directory: pass --out or set config.output");
        dir = *cfg.output;
      }
      run_experiment(cfg, dir, quiet, exec);
      return 0;
    });
  }

  return guarded(quiet, [&] {
    const Json a = read_json_file(manifest_a);
    const Json b = read_json_file(manifest_b);
    const CompareResult r = compare_manifests(a, b);
    std::printf("%s\n", r.report.dump(2).c_str());
    return 0;
  });
}
