#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace avgsde::acceptance {

struct CriterionResult {
  int index = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct Options {
  std::string out_dir = "out/acceptance";
  std::uint64_t base_seed = 20240801ULL;
  int threads = 0;  // 0 = machine parallelism
};

// Runs the full certification suite (fixed coefficients, fixed seeds,
// pinned tolerances). Criteria that throw are reported as failures with
// the error message; the suite always runs to the end.
std::vector<CriterionResult> run_all(const Options& options);

bool all_passed(const std::vector<CriterionResult>& results);

// One line per criterion plus a summary; returns 0 when everything passed,
// 1 otherwise.
int print_report(const std::vector<CriterionResult>& results, std::ostream& out);

}  // namespace avgsde::acceptance
