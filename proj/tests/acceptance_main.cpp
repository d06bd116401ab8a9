// Acceptance suite driver: one pass/fail line per criterion, exit 0 iff all
// criteria pass.
#include <cstring>
#include <iostream>
#include <string>

#include "chainsde/acceptance.hpp"

int main(int argc, char** argv) {
  chainsde::AcceptanceOptions opt;
  opt.out_dir = "acceptance_out";
  opt.log = &std::cout;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) {
      opt.out_dir = argv[++i];
    } else if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc) {
      opt.seed = std::stoull(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--out dir] [--seed u64]\n";
      return 2;
    }
  }
  try {
    auto results = chainsde::run_acceptance(opt);
    bool ok = chainsde::all_passed(results);
    std::cout << (ok ? "acceptance suite: PASS" : "acceptance suite: FAIL") << "\n";
    return ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "acceptance aborted: " << e.what() << "\n";
    return 1;
  }
}
