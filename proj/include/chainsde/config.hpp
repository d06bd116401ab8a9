#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chainsde/measure.hpp"

namespace chainsde {

// Numeric knobs shared by the commands; each command validates the subset it
// actually reads.
struct NumericConfig {
  double t0 = 0.0;
  double dt = 1e-3;
  int n_steps = 1000;
  int n_paths = 1000;
  int depth = 1;
  int n_particles = 1000;
  int n_iters = 4;
  int replications = 0;
  int k = 0;
  std::vector<int> k_grid;
  Mesh1d mesh;
  double ess_threshold = 0.5;
  std::vector<double> times;
  std::string method = "all";     // filter: particle | spde | kalman | all
  std::string report = "scaling"; // analyze: scaling | mrf | joint

  TimeGrid grid() const { return TimeGrid{t0, dt, n_steps}; }
};

struct RunConfig {
  int schema_version = 1;
  std::string command;
  ChainModel model;
  NumericConfig numeric;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
};

// Strict parse: unknown keys are errors and messages carry the full key path.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace chainsde
