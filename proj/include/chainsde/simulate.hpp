#pragma once

#include <cstdint>
#include <vector>

#include "chainsde/model.hpp"

namespace chainsde {

// Euler-Maruyama paths of a depth-truncated chain. Level 0 is the observed
// bottom of the chain; level i is driven by level i+1; the top level runs the
// closure. values are laid out (path, level, step, component).
struct ChainEnsemble {
  TimeGrid grid;
  int depth = 1;
  int n_paths = 0;
  int dim = 1;
  std::uint64_t seed = 0;
  ClosureKind closure_used = ClosureKind::MeanField;
  std::vector<double> values;

  double& at(int path, int level, int step, int comp = 0) {
    return values[((static_cast<std::size_t>(path) * depth + level) * grid.n_points() + step) * dim + comp];
  }
  double at(int path, int level, int step, int comp = 0) const {
    return values[((static_cast<std::size_t>(path) * depth + level) * grid.n_points() + step) * dim + comp];
  }

  // Scalar path of one (path, level); dim must be 1.
  Vec scalar_path(int path, int level) const;
  // All scalar paths of one level.
  std::vector<Vec> level_paths(int level) const;
  // Cross-section of one level at a step: n_paths x dim.
  Mat level_at_step(int level, int step) const;
};

ChainEnsemble simulate_chain(const ChainModel& model, int depth, const LawFlow& law,
                             const TimeGrid& grid, int n_paths, std::uint64_t seed);

// Loop system of n particles, neighbor i+1 mod n; n_reps independent loops.
ChainEnsemble simulate_loop(const ChainModel& model, int n, const TimeGrid& grid,
                            const LawFlow& law, int n_reps, std::uint64_t seed);

struct PicardResult {
  std::vector<LawFlow> flows;  // empirical iterates (clouds thinned to <= 1000)
  Vec distances;               // distances[j] = D_T(iterate j+1, iterate j)
};

// Fixed-point iteration on laws: iterate j+1 simulates each particle against
// neighbor path j under common random numbers, so successive distances track
// the movement of the law, not the noise.
PicardResult picard_iterate(const ChainModel& model, const TimeGrid& grid,
                            int n_particles, int n_iters, std::uint64_t seed);

struct FlowCheckReport {
  double mean_direct = 0, var_direct = 0;
  double mean_restart = 0, var_restart = 0;
  double pooled_mean_stderr = 0, pooled_var_stderr = 0;
  double standardized_mean_diff = 0, standardized_var_diff = 0;
};

// Direct [t -> r] simulation vs. restart at s from the state reached at s,
// both under the same noise stream.
FlowCheckReport flow_check(const ChainModel& model, const LawFlow& law,
                           const TimeGrid& grid, double t, double s, double r,
                           double x, int n_paths, std::uint64_t seed);

struct SensitivityEnsemble {
  TimeGrid grid;
  int n_paths = 0;
  Mat jacobians;  // n_paths x n_points, J(0) = 1
  Mat paths;      // n_paths x n_points, the x-process itself
};

// x-process started at the deterministic point x against a neighbor drawn
// from the model; scalar paths (n_paths x n_points).
Mat simulate_x_process(const ChainModel& model, const LawFlow& law, double x,
                       const TimeGrid& grid, int n_paths, std::uint64_t seed);

// First-variation flow J' = d_x b(t, X, X~, mu) J along each path, J(0) = 1.
SensitivityEnsemble pathwise_sensitivity(const ChainModel& model, const LawFlow& law,
                                         double x, const TimeGrid& grid, int n_paths,
                                         std::uint64_t seed);

}  // namespace chainsde
