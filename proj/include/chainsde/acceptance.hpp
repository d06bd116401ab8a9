#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace chainsde {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct AcceptanceOptions {
  std::filesystem::path out_dir;
  std::uint64_t seed = 20260823;
  // Progress/pass-fail lines are printed here when set.
  std::ostream* log = nullptr;
};

// Runs the full acceptance suite: criteria 1..10 produce CSV artifacts under
// out_dir/run1, a second pass writes out_dir/run2, and criterion 11 compares
// the two byte for byte.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options);

bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace chainsde
