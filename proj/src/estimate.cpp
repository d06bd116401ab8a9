#include "chainsde/estimate.hpp"

#include <algorithm>
#include <cmath>

#include "chainsde/rng.hpp"
#include "chainsde/simulate.hpp"

namespace chainsde {
namespace {

constexpr std::uint64_t kMleRep = 0x51;

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_to_standard_normal(Vec sample) {
  std::sort(sample.begin(), sample.end());
  const int n = static_cast<int>(sample.size());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    double f = standard_normal_cdf(sample[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  return d;
}

// One simulate-and-estimate replication on depth-k truncated chain data.
MleResult replicate_once(const ChainModel& model, double u_true, int k,
                         const TimeGrid& grid, const LawFlow& mu,
                         std::uint64_t rep_seed) {
  ChainEnsemble ens = simulate_chain(model, k, mu, grid, 1, rep_seed);
  MleInput input;
  input.grid = grid;
  input.model = model;
  input.mu = mu;
  input.u_true = u_true;
  input.paths.reserve(k);
  for (int l = 0; l < k; ++l) input.paths.push_back(ens.scalar_path(0, l));
  return mle_u(input);
}

void require_estimable(const ChainModel& model) {
  model.validate();
  if (model.dim != 1)
    throw Error(ErrorCode::DimensionError, "estimation is one-dimensional");
  if (model.sigma != 1.0)
    throw Error(ErrorCode::SigmaError, "estimation requires sigma = 1");
}

}  // namespace

void MleInput::validate() const {
  require_estimable(model);
  if (k() < 2)
    throw Error(ErrorCode::TooFewSamples, "need at least 2 adjacent paths");
  for (const Vec& p : paths)
    if (p.size() != grid.n_points())
      throw Error(ErrorCode::GridMismatch, "path length does not match grid");
  mu.require_grid(grid);
}

Vec bbar_path(const Vec& path_i, const Vec& path_next, const ChainModel& model,
              const LawFlow& mu) {
  if (path_i.size() != path_next.size() || path_i.size() != mu.grid.n_points())
    throw Error(ErrorCode::GridMismatch, "paths and law flow on different grids");
  const int np = static_cast<int>(path_i.size());
  Vec out(np);
  for (int m = 0; m < np; ++m) {
    double t = mu.grid.time(m);
    LawSnapshot snap = mu.at_step(m);
    out[m] = pair_drift1(model, t, path_i[m], path_next[m]) -
             mean_field_drift1(model, t, path_i[m], snap);
  }
  return out;
}

MleResult mle_u(const MleInput& input) {
  input.validate();
  const TimeGrid& grid = input.grid;
  const double dt = grid.dt;
  double denom = 0.0, numer = 0.0;

  for (int i = 0; i + 1 < input.k(); ++i) {
    const Vec& xi = input.paths[i];
    const Vec& xn = input.paths[i + 1];
    Vec bbar = bbar_path(xi, xn, input.model, input.mu);
    for (int m = 0; m < grid.n_steps; ++m) {
      double t = grid.time(m);
      LawSnapshot snap = input.mu.at_step(m);
      double mf = mean_field_drift1(input.model, t, xi[m], snap);
      double dx = xi[m + 1] - xi[m];
      denom += bbar[m] * bbar[m] * dt;
      numer += bbar[m] * (dx - mf * dt);
    }
  }

  if (denom <= 0.0)
    throw Error(ErrorCode::NonIdentifiable,
                "centered pairwise drift vanishes; u is not identifiable");

  MleResult res;
  res.u_hat = numer / denom;
  res.sigma_k2 = denom;
  res.numerator = numer;
  res.k = input.k();
  res.T = grid.final_time();
  res.dt = dt;
  res.standardized = input.u_true
                         ? std::sqrt(denom) * (res.u_hat - *input.u_true)
                         : std::nan("");
  return res;
}

double mle_loglikelihood(const MleInput& input, double u) {
  input.validate();
  const TimeGrid& grid = input.grid;
  const double dt = grid.dt;
  double ll = 0.0;
  for (int i = 0; i + 1 < input.k(); ++i) {
    const Vec& xi = input.paths[i];
    Vec bbar = bbar_path(xi, input.paths[i + 1], input.model, input.mu);
    for (int m = 0; m < grid.n_steps; ++m) {
      double t = grid.time(m);
      LawSnapshot snap = input.mu.at_step(m);
      double b = u * bbar[m] + mean_field_drift1(input.model, t, xi[m], snap);
      ll += b * (xi[m + 1] - xi[m]) - 0.5 * b * b * dt;
    }
  }
  return ll;
}

CltReport clt_diagnostic(const ChainModel& model, double u_true, int k, double T,
                         double dt, int replications, std::uint64_t seed) {
  require_estimable(model);
  if (model.drift.kind != DriftKind::Linear)
    throw Error(ErrorCode::UnsupportedDrift,
                "replicated estimation uses the Gaussian oracle; Linear drift only");
  if (replications < 2)
    throw Error(ErrorCode::InvalidArgument, "need at least 2 replications");
  ChainModel m = model;
  m.u = u_true;
  int n_steps = static_cast<int>(std::lround(T / dt));
  TimeGrid grid{0.0, dt, n_steps};
  LawFlow mu = gaussian_chain_oracle(m, 1, grid).marginal_flow();

  CltReport rep;
  rep.u_hats = Vec::Zero(replications);
  rep.sigma_k2s = Vec::Zero(replications);
  for (int r = 0; r < replications; ++r) {
    MleResult res = replicate_once(m, u_true, k, grid, mu, stream_id(kMleRep, seed, r));
    rep.u_hats[r] = res.u_hat;
    rep.sigma_k2s[r] = res.sigma_k2;
  }
  rep.sigma_bar = std::sqrt(rep.sigma_k2s.mean());
  rep.standardized = rep.sigma_bar * (rep.u_hats.array() - u_true);
  rep.self_standardized =
      (rep.sigma_k2s.array().sqrt() * (rep.u_hats.array() - u_true)).matrix();
  rep.mean = rep.standardized.mean();
  rep.variance = (rep.standardized.array() - rep.mean).square().sum() /
                 (replications - 1);
  if (rep.variance <= 0.0)
    throw Error(ErrorCode::DegenerateSample, "standardized sample has zero variance");
  rep.ks_distance = ks_to_standard_normal(rep.standardized);
  return rep;
}

ConvergenceTable convergence_table(const ChainModel& model, double u_true,
                                   const std::vector<int>& k_grid, int replications,
                                   double T, double dt, std::uint64_t seed) {
  require_estimable(model);
  if (k_grid.empty())
    throw Error(ErrorCode::InvalidArgument, "k_grid is empty");
  for (std::size_t i = 1; i < k_grid.size(); ++i)
    if (k_grid[i] <= k_grid[i - 1])
      throw Error(ErrorCode::InvalidArgument, "k_grid must be increasing");
  ChainModel m = model;
  m.u = u_true;
  int n_steps = static_cast<int>(std::lround(T / dt));
  TimeGrid grid{0.0, dt, n_steps};
  LawFlow mu = gaussian_chain_oracle(m, 1, grid).marginal_flow();

  ConvergenceTable table;
  for (std::size_t j = 0; j < k_grid.size(); ++j) {
    int k = k_grid[j];
    double acc = 0.0;
    for (int r = 0; r < replications; ++r) {
      MleResult res =
          replicate_once(m, u_true, k, grid, mu, stream_id(kMleRep, seed, (j << 32) + r));
      acc += (res.u_hat - u_true) * (res.u_hat - u_true);
    }
    table.rows.push_back({k, std::sqrt(acc / replications)});
  }

  // Least-squares slope of log rms against log k.
  const int n = static_cast<int>(table.rows.size());
  if (n >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const ConvergenceRow& row : table.rows) {
      double x = std::log(static_cast<double>(row.k));
      double y = std::log(std::max(row.rms, 1e-300));
      sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    table.loglog_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return table;
}

}  // namespace chainsde
