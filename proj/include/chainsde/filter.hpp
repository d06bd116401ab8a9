#pragma once

#include <cstdint>
#include <vector>

#include "chainsde/measure.hpp"

namespace chainsde {

enum class ObsProvenance { SimulatedUnderP, SimulatedUnderPTilde, External };

// Scalar observation path X_k on a grid.
struct ObservationPath {
  TimeGrid grid;
  Vec values;
  ObsProvenance provenance = ObsProvenance::External;

  void validate() const;
};

struct FilterReport {
  TimeGrid grid;
  Vec mean;  // conditional mean of X_{k+1}, per step
  Vec var;   // conditional variance, per step
  Vec rho1;  // unnormalized mass trajectory
  // pi_t(phi) for phi in {y, y^2, exp(-y^2/2)}, one column each.
  Mat test_functionals;
  // Effective sample size per step; particle filter only.
  Vec ess;
};

// Observation simulated jointly with its hidden neighbor tower from the
// depth-(d+1) truncated model; obs is the bottom level, hidden the level
// right above it.
struct ObservationBundle {
  ObservationPath obs;
  Vec hidden;
};

ObservationBundle simulate_observation(const ChainModel& model, int depth,
                                       const LawFlow& law, const TimeGrid& grid,
                                       std::uint64_t seed);

// Pure Brownian observation (the reference measure).
ObservationPath simulate_reference_observation(const ChainModel& model,
                                               const TimeGrid& grid,
                                               std::uint64_t seed);

enum class ResampleKind { Systematic, None };

// Girsanov-weighted particle filter for the hidden neighbor X_{k+1}: signal
// particles are depth-d extension chains closed by the mean field; weights
// carry log-increments b*dX - b^2/2 dt of the observation drift. Upstream
// observed paths (X_1..X_{k-1}), when supplied, contribute weight terms that
// are common to all particles and so change rho but not pi.
FilterReport particle_filter(const ChainModel& model, const ObservationPath& obs,
                             const LawFlow& law, int n_particles, int depth,
                             ResampleKind resample, double ess_threshold,
                             std::uint64_t seed,
                             const std::vector<ObservationPath>& upstream = {});

struct SpdeResult {
  FilterReport report;
  DensityCurve final_density;
  int negative_clamps = 0;
};

// Conditional-density equation on a mesh, operator-split per step: explicit
// Fokker-Planck transport with the depth-1 closed signal drift, then a
// multiplicative (log-space) gain update and renormalization.
SpdeResult spde_solve(const ChainModel& model, const ObservationPath& obs,
                      const LawFlow& law, const Mesh1d& mesh);

struct KalmanResult {
  FilterReport report;
  Mat means;              // n_points x depth, conditional mean of the tower
  std::vector<Mat> covs;  // conditional covariance per step
};

// Exact conditionally-Gaussian filter for the linear truncated chain;
// deterministic given the observation path.
KalmanResult kalman_bucy(const ChainModel& model, const ObservationPath& obs,
                         int depth);

struct CrossValidation {
  FilterReport particle;
  FilterReport spde;
  FilterReport kalman;
  double rms_mean_particle_kalman = 0;
  double rms_mean_spde_kalman = 0;
  double rms_var_particle_kalman = 0;
  double rms_var_spde_kalman = 0;
  double particle_mean_stderr = 0;  // average internal MC stderr of the PF mean
};

struct CrossValidateConfig {
  int n_particles = 10000;
  int depth = 1;
  Mesh1d mesh{-6.5, 6.5, 512};
  double ess_threshold = 0.5;
};

// The three filters on one shared observation path drawn from the truncated
// model.
CrossValidation cross_validate(const ChainModel& model, const TimeGrid& grid,
                               std::uint64_t seed, const CrossValidateConfig& cfg);

}  // namespace chainsde
