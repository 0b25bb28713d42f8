#pragma once

// Flat key = value experiment configuration. Parsing is strict: unknown
// keys, malformed values, and experiment names outside the known set are
// errors, so a typo cannot silently fall back to a default.

#include <string>
#include <vector>

namespace lodcut {

struct ExperimentConfig {
  std::string experiment;              // fractal|corner|slit|sawtooth|cut_table|decay|pf
  std::vector<int> m_list;             // coarse exponents (single value or sweep)
  int n = 7;                           // fine exponent, h = 2^-n
  int k = 2;                           // zone closure layers
  int L = -1;                          // localization layers; -1 = ceil(1.5*m)
  int L_max = 5;                       // decay series length
  std::string f = "one";               // one|xy|zero
  std::string bc_outer = "dirichlet";  // dirichlet|neumann|robin:<kappa>
  std::string bc_special;              // empty = same as outer
  int box_halfwidth_cells = 4;         // enrichment box around the singular point, in H units
  bool include_naive = true;           // also solve without correctors (corner/slit)
  std::string assumption = "enforce";  // enforce|warn interior-vertex violations
  std::string out = "out";
  int workers = 0;                     // 0 = LODCUT_WORKERS or hardware
  int fractal_levels = 5;
  int teeth_exponent = 5;
  double tooth_length = 0.25;
  double slit_width = 0;  // 0 = one fine cell
  int probe_i = -1;       // decay probe, coarse lattice coordinates
  int probe_j = -1;
  std::string pf_shapes = "simplex,square,fractal,sawtooth,dumbbell";
  bool dump_matrices = false;
  bool dump_mesh = false;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

}  // namespace lodcut
