#include "lodcut/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace lodcut {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
  size_t pos = 0;
  int out = 0;
  try {
    out = std::stoi(v, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != v.size()) throw std::runtime_error("config: bad integer for " + key + ": " + v);
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  size_t pos = 0;
  double out = 0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != v.size()) throw std::runtime_error("config: bad number for " + key + ": " + v);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config: bad boolean for " + key + ": " + v);
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_int(key, trim(item)));
  if (out.empty()) throw std::runtime_error("config: empty list for " + key);
  return out;
}

void check_bc(const std::string& key, const std::string& v) {
  if (v == "dirichlet" || v == "neumann") return;
  if (v.rfind("robin:", 0) == 0) {
    to_double(key, v.substr(6));
    return;
  }
  throw std::runtime_error("config: bad boundary condition for " + key + ": " + v);
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key or value");
    if (!seen.insert(key).second)
      throw std::runtime_error("config: duplicate key " + key);

    if (key == "experiment") {
      static const std::set<std::string> known = {"fractal", "corner",    "slit", "sawtooth",
                                                  "cut_table", "decay", "pf"};
      if (!known.count(val)) throw std::runtime_error("config: unknown experiment " + val);
      cfg.experiment = val;
    } else if (key == "m") {
      cfg.m_list = to_int_list(key, val);
    } else if (key == "n") {
      cfg.n = to_int(key, val);
    } else if (key == "k") {
      cfg.k = to_int(key, val);
    } else if (key == "L") {
      cfg.L = to_int(key, val);
    } else if (key == "L_max") {
      cfg.L_max = to_int(key, val);
    } else if (key == "f") {
      if (val != "one" && val != "xy" && val != "zero")
        throw std::runtime_error("config: unknown load " + val);
      cfg.f = val;
    } else if (key == "bc_outer") {
      check_bc(key, val);
      cfg.bc_outer = val;
    } else if (key == "bc_special") {
      check_bc(key, val);
      cfg.bc_special = val;
    } else if (key == "box_halfwidth_cells") {
      cfg.box_halfwidth_cells = to_int(key, val);
    } else if (key == "include_naive") {
      cfg.include_naive = to_bool(key, val);
    } else if (key == "assumption") {
      if (val != "enforce" && val != "warn")
        throw std::runtime_error("config: assumption must be enforce or warn");
      cfg.assumption = val;
    } else if (key == "out") {
      cfg.out = val;
    } else if (key == "workers") {
      cfg.workers = to_int(key, val);
    } else if (key == "fractal_levels") {
      cfg.fractal_levels = to_int(key, val);
    } else if (key == "teeth_exponent") {
      cfg.teeth_exponent = to_int(key, val);
    } else if (key == "tooth_length") {
      cfg.tooth_length = to_double(key, val);
    } else if (key == "slit_width") {
      cfg.slit_width = to_double(key, val);
    } else if (key == "probe_i") {
      cfg.probe_i = to_int(key, val);
    } else if (key == "probe_j") {
      cfg.probe_j = to_int(key, val);
    } else if (key == "pf_shapes") {
      cfg.pf_shapes = val;
    } else if (key == "dump_matrices") {
      cfg.dump_matrices = to_bool(key, val);
    } else if (key == "dump_mesh") {
      cfg.dump_mesh = to_bool(key, val);
    } else {
      throw std::runtime_error("config: unknown key " + key);
    }
  }
  if (cfg.experiment.empty()) throw std::runtime_error("config: missing experiment");
  if (cfg.m_list.empty() && cfg.experiment != "pf")
    throw std::runtime_error("config: missing m");
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace lodcut
