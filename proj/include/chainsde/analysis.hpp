#pragma once

#include <cstdint>
#include <vector>

#include "chainsde/simulate.hpp"

namespace chainsde {

// Scaled density suprema sup_z |d^beta/dz^beta p(t, x, z)| * t^((1+beta)/2),
// one row per (t, beta). For the heat kernel the beta=0 and beta=1 rows are
// (2*pi)^(-1/2) and (2*pi*e)^(-1/2) at every t.
struct ScalingRow {
  double t = 0.0;
  int order = 0;
  double sup_raw = 0.0;
  double scaled = 0.0;
};

struct ScalingReport {
  double x = 0.0;
  int n_samples = 0;
  std::vector<ScalingRow> rows;
  // R^2 of log-density against -(z-x)^2 on the two-sided 2..3 sigma band of
  // the last requested time (Gaussian tail shape check).
  double tail_fit_r2 = 0.0;
};

ScalingReport density_scaling_report(const ChainModel& model, double x,
                                     const std::vector<double>& times,
                                     int n_samples, std::uint64_t seed);

struct MrfReport {
  double t = 0.0;
  int i = 0, mid = 0, j = 0;  // levels; conditioning on mid
  double partial_corr = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;  // Fisher-z interval
  bool has_oracle = false;
  double oracle_partial_corr = 0.0;  // Linear models only; reported, not asserted
};

// Sample partial correlation of levels (i, j) given level mid at one step,
// with a Fisher-z confidence interval; for Linear models also the exact value
// from the Gaussian oracle covariance.
MrfReport mrf_partial_correlation(const ChainEnsemble& ensemble, const ChainModel& model,
                                  int step, int i, int mid, int j,
                                  double ci_level = 0.99);

// Largest cell mass of the 64x64 histogram of (level_a, level_b) at one step
// over the 4-sigma box; small values rule out atoms in the joint law.
double joint_max_cell_mass(const ChainEnsemble& ensemble, int step, int level_a,
                           int level_b);

}  // namespace chainsde
