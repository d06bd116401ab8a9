#pragma once

#include <optional>
#include <vector>

#include "chainsde/model.hpp"

namespace chainsde {

// Empirical measure on R^N, rows of samples; optional weights summing to 1.
struct EmpiricalMeasure {
  Mat samples;  // n x dim
  std::optional<Vec> weights;

  static EmpiricalMeasure from_scalar(const Vec& values);
  void validate() const;
  int dim() const { return static_cast<int>(samples.cols()); }
  int size() const { return static_cast<int>(samples.rows()); }
};

// Exact 1-D 2-Wasserstein distance via quantile coupling.
double w2_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

// Truncated path-space distance between two synchronously coupled path
// ensembles: sqrt(mean over pairs of sup_{s<=t} |X_s - Y_s|^2 ^ 1).
// Reported value is the synchronous-coupling upper bound of the infimum.
double path_metric_Dt(const std::vector<Vec>& a_paths,
                      const std::vector<Vec>& b_paths, int step_t);

struct Mesh1d {
  double y_min = -6.0;
  double y_max = 6.0;
  int n_nodes = 512;

  double dy() const { return (y_max - y_min) / (n_nodes - 1); }
  double node(int i) const { return y_min + dy() * i; }
};

struct DensityCurve {
  Mesh1d mesh;
  Vec values;
  int derivative_order = 0;

  double at_node(int i) const { return values[i]; }
  // Trapezoid integral over the mesh.
  double integral() const;
  double sup_abs() const { return values.cwiseAbs().maxCoeff(); }
};

struct Bandwidth {
  bool silverman = true;
  double value = 0.0;

  static Bandwidth silverman_rule() { return {true, 0.0}; }
  static Bandwidth fixed(double h) { return {false, h}; }
};

// Gaussian-kernel density estimate of order 0, 1 or 2 (derivatives estimated
// by differentiating the kernel). Silverman bandwidth 1.06*sd*n^(-1/5) for
// order 0; derivative orders widen the exponent to n^(-1/(2*order+5)).
DensityCurve kde(const EmpiricalMeasure& samples, const Mesh1d& mesh,
                 Bandwidth bandwidth, int order);

// Exact Gaussian law of the depth-truncated linear chain (scalar levels).
// Levels follow mean m(t) with m' = a0 + (a1_self + a1_neighbor) m; the
// covariance solves the Lyapunov ODE S' = A S + S A^T + sigma^2 I with
// A upper-bidiagonal (A_ii = a1_self, A_{i,i+1} = u*a1_neighbor, top level
// closed by the mean-field term). RK4 at the grid step.
struct GaussianLawFlow {
  TimeGrid grid;
  Vec marginal_mean;        // m(t) per step
  Mat level_means;          // (n_steps+1) x depth
  std::vector<Mat> covs;    // depth x depth per step

  int depth() const { return static_cast<int>(level_means.cols()); }
  // Scalar Gaussian flow of one level (for use as the mu input elsewhere).
  LawFlow marginal_flow(int level = 0) const;
};

GaussianLawFlow gaussian_chain_oracle(const ChainModel& model, int depth,
                                      const TimeGrid& grid);

}  // namespace chainsde
