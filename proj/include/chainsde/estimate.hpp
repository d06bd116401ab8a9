#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "chainsde/measure.hpp"

namespace chainsde {

// k observed adjacent chain paths on a shared grid, with the drift and the
// marginal law treated as known; only the dependence weight u is estimated.
struct MleInput {
  TimeGrid grid;
  std::vector<Vec> paths;  // X_1..X_k, scalar, one per level
  ChainModel model;
  LawFlow mu;
  std::optional<double> u_true;

  int k() const { return static_cast<int>(paths.size()); }
  void validate() const;
};

struct MleResult {
  double u_hat = 0.0;
  double sigma_k2 = 0.0;   // realized information, sum of bbar^2 dt
  double numerator = 0.0;
  // sqrt(sigma_k2) * (u_hat - u_true) when u_true was supplied, else NaN.
  double standardized = 0.0;
  int k = 0;
  double T = 0.0;
  double dt = 0.0;
};

// Centered pairwise drift along one adjacent pair:
// bbar_m = b~(t_m, X_i(m), X_{i+1}(m)) - integral of b~(t_m, X_i(m), .) d mu.
// Length n_points; the final entry is unused by the left-point sums.
Vec bbar_path(const Vec& path_i, const Vec& path_next, const ChainModel& model,
              const LawFlow& mu);

MleResult mle_u(const MleInput& input);

// Discretized conditional log-likelihood of u given the observed paths;
// quadratic in u and maximized at mle_u's estimate.
double mle_loglikelihood(const MleInput& input, double u);

struct CltReport {
  Vec u_hats;
  Vec sigma_k2s;
  double sigma_bar = 0.0;  // sqrt of the pooled mean of sigma_k2
  Vec standardized;        // sigma_bar * (u_hat - u_true), per replication
  Vec self_standardized;   // sqrt(sigma_k2) * (u_hat - u_true)
  double mean = 0.0;
  double variance = 0.0;
  double ks_distance = 0.0;  // one-sample KS against N(0,1)
};

// Repeated simulate-and-estimate runs; the chain data are depth-k truncated
// simulations, mu is the Gaussian oracle flow (Linear drift only).
CltReport clt_diagnostic(const ChainModel& model, double u_true, int k, double T,
                         double dt, int replications, std::uint64_t seed);

struct ConvergenceRow {
  int k = 0;
  double rms = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double loglog_slope = 0.0;  // least-squares slope of log rms vs log k
};

ConvergenceTable convergence_table(const ChainModel& model, double u_true,
                                   const std::vector<int>& k_grid, int replications,
                                   double T, double dt, std::uint64_t seed);

}  // namespace chainsde
