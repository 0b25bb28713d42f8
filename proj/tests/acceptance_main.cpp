// Acceptance harness: one PASS/FAIL line per check. With no arguments every
// built-in check runs; arguments select a subset by name.
#include <cstdio>
#include <string>
#include <vector>

#include "lodcut/experiments.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> names;
  for (int i = 1; i < argc; ++i) names.push_back(argv[i]);
  if (names.empty()) names = lodcut::criterion_names();

  bool all_pass = true;
  for (const std::string& name : names) {
    const lodcut::CriterionResult res = lodcut::run_criterion(name, 0);
    std::printf("%s %s: %s\n", res.pass ? "PASS" : "FAIL", res.name.c_str(), res.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && res.pass;
  }
  return all_pass ? 0 : 1;
}
