// lodcut: multiscale Poisson experiments on domains the coarse mesh cannot
// resolve. `run` executes a config file and writes CSV reports, `check`
// evaluates the built-in acceptance checks.
#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "lodcut/experiments.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_override, int workers,
            bool dump_matrices, bool dump_mesh) {
  lodcut::ExperimentConfig cfg = lodcut::parse_config_file(config_path);
  if (!out_override.empty()) cfg.out = out_override;
  if (workers > 0) cfg.workers = workers;
  cfg.dump_matrices = cfg.dump_matrices || dump_matrices;
  cfg.dump_mesh = cfg.dump_mesh || dump_mesh;

  const lodcut::ExperimentReport report = lodcut::run_experiment(cfg);
  lodcut::write_report(cfg.out, report);
  std::printf("wrote %s/%s.csv (%zu rows)\n", cfg.out.c_str(), report.name.c_str(),
              report.rows.size());
  for (const auto& [key, value] : report.scalars)
    std::printf("  %s = %s\n", key.c_str(), lodcut::fmt_g(value).c_str());
  return 0;
}

int cmd_check(const std::vector<std::string>& names, int workers) {
  std::vector<std::string> todo;
  for (const std::string& name : names) {
    if (name == "all") {
      const std::vector<std::string> all = lodcut::criterion_names();
      todo.insert(todo.end(), all.begin(), all.end());
    } else {
      todo.push_back(name);
    }
  }
  if (todo.empty()) todo = lodcut::criterion_names();

  bool all_pass = true;
  for (const std::string& name : todo) {
    const lodcut::CriterionResult res = lodcut::run_criterion(name, workers);
    std::printf("%s %s: %s\n", res.pass ? "PASS" : "FAIL", res.name.c_str(), res.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && res.pass;
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"localized orthogonal decomposition experiments for cut domains"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  int workers = 0;
  bool dump_matrices = false, dump_mesh = false;
  CLI::App* run = app.add_subcommand("run", "run an experiment config and write reports");
  run->add_option("config", config_path, "experiment config file")->required();
  run->add_option("--out", out_override, "output directory (overrides the config)");
  run->add_option("--workers", workers, "corrector solver threads");
  run->add_flag("--dump-matrices", dump_matrices, "write system matrices in Matrix Market form");
  run->add_flag("--dump-mesh", dump_mesh, "write mesh and solution exports");

  std::vector<std::string> names;
  int check_workers = 0;
  CLI::App* check = app.add_subcommand("check", "evaluate acceptance checks");
  check->add_option("names", names, "check names, or 'all' (default: all)");
  check->add_option("--workers", check_workers, "corrector solver threads");

  CLI::App* list = app.add_subcommand("list-checks", "print the available check names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_override, workers, dump_matrices, dump_mesh);
    if (check->parsed()) return cmd_check(names, check_workers);
    if (list->parsed()) {
      for (const std::string& name : lodcut::criterion_names()) std::printf("%s\n", name.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
