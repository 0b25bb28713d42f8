#pragma once

// Experiment drivers behind the CLI: each runner builds the problems it
// needs, solves them, and returns a report whose CSV body is byte-stable
// across reruns. Timings, residuals, and fitted slopes go into the meta
// text; fitted values the acceptance checks consume are also exposed in a
// scalar map so checks never parse CSV.

#include "lodcut/analysis.hpp"
#include "lodcut/clement.hpp"
#include "lodcut/config.hpp"
#include "lodcut/io.hpp"
#include "lodcut/solver.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lodcut {

BcTag parse_bc(const std::string& text);

// Localization layers: the configured value, or ceil(1.5 * m) when negative.
int localization_layers(int m, int configured);

// Named volume loads; an empty function means f == 1.
std::function<double(Vec2)> make_load(const std::string& name);

// A fully assembled problem: hierarchy, composite forms, interpolation
// matrix, and Clement operator.
struct Problem {
  MeshHierarchy hier;
  CompositeMatrices mats;
  SpMat Pi;
  ClementOperator clem;
  int violations = 0;  // interior-vertex violations tolerated in warn mode
};

struct ProblemSpec {
  ShapeKind kind = ShapeKind::UnitSquare;
  ShapeParams params;
  std::string bc_outer = "dirichlet";
  std::string bc_special;  // empty = same as outer
  int m = 3;
  int n = 5;
  int k = 2;
  std::optional<Box> extra_box;
  std::vector<int> extra_seed_cells;
  std::string assumption = "enforce";
  std::string f = "one";
};

Problem build_problem(const ProblemSpec& spec);

struct ExperimentReport {
  std::string name;  // CSV base name
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string meta;
  std::map<std::string, double> scalars;
};

ExperimentReport run_fractal(const ExperimentConfig& cfg);
ExperimentReport run_singularity(const ExperimentConfig& cfg);  // corner | slit
ExperimentReport run_sawtooth(const ExperimentConfig& cfg);
ExperimentReport run_cut_table(const ExperimentConfig& cfg);
ExperimentReport run_decay(const ExperimentConfig& cfg);
ExperimentReport run_pf(const ExperimentConfig& cfg);

ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Writes <out>/<name>.csv and <out>/<name>.meta.txt.
void write_report(const std::string& out_dir, const ExperimentReport& report);

struct CriterionResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// The named acceptance checks, in report order. "all" in the CLI expands to
// exactly this list; the full-scale cut table run is a separate opt-in name.
std::vector<std::string> criterion_names();

CriterionResult run_criterion(const std::string& name, int workers);

}  // namespace lodcut
