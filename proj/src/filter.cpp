#include "chainsde/filter.hpp"

#include <cmath>

#include "chainsde/detail/scalar_kernels.hpp"
#include "chainsde/rng.hpp"
#include "chainsde/simulate.hpp"

namespace chainsde {
namespace {

using detail::MeanField1;
using detail::init_sample;

constexpr std::uint64_t kObsSeed = 0x41;
constexpr std::uint64_t kPfNoise = 0x42;
constexpr std::uint64_t kPfResample = 0x43;

void require_filter_model(const ChainModel& model) {
  model.validate();
  if (model.dim != 1)
    throw Error(ErrorCode::DimensionError, "filtering is one-dimensional");
  if (model.sigma != 1.0)
    throw Error(ErrorCode::SigmaError, "filtering requires sigma = 1");
}

void init_report(FilterReport& rep, const TimeGrid& grid) {
  rep.grid = grid;
  rep.mean = Vec::Zero(grid.n_points());
  rep.var = Vec::Zero(grid.n_points());
  rep.rho1 = Vec::Ones(grid.n_points());
  rep.test_functionals = Mat::Zero(grid.n_points(), 3);
}

}  // namespace

void ObservationPath::validate() const {
  if (values.size() != grid.n_points())
    throw Error(ErrorCode::GridMismatch, "observation length does not match grid");
  if (!values.allFinite())
    throw Error(ErrorCode::InvalidArgument, "observation has non-finite values");
}

ObservationBundle simulate_observation(const ChainModel& model, int depth,
                                       const LawFlow& law, const TimeGrid& grid,
                                       std::uint64_t seed) {
  require_filter_model(model);
  ChainModel m = model;
  m.closure = ClosureSpec::mean_field(depth);
  ChainEnsemble ens = simulate_chain(m, depth + 1, law, grid, 1, seed);
  ObservationBundle bundle;
  bundle.obs.grid = grid;
  bundle.obs.values = ens.scalar_path(0, 0);
  bundle.obs.provenance = ObsProvenance::SimulatedUnderP;
  bundle.hidden = ens.scalar_path(0, 1);
  return bundle;
}

ObservationPath simulate_reference_observation(const ChainModel& model,
                                               const TimeGrid& grid,
                                               std::uint64_t seed) {
  require_filter_model(model);
  NormalStream stream(seed, stream_id(kObsSeed));
  ObservationPath obs;
  obs.grid = grid;
  obs.provenance = ObsProvenance::SimulatedUnderPTilde;
  obs.values = Vec::Zero(grid.n_points());
  obs.values[0] = init_sample(model.init, stream);
  double sdt = std::sqrt(grid.dt);
  for (int m = 0; m < grid.n_steps; ++m)
    obs.values[m + 1] = obs.values[m] + sdt * stream.next();
  return obs;
}

FilterReport particle_filter(const ChainModel& model, const ObservationPath& obs,
                             const LawFlow& law, int n_particles, int depth,
                             ResampleKind resample, double ess_threshold,
                             std::uint64_t seed,
                             const std::vector<ObservationPath>& upstream) {
  require_filter_model(model);
  obs.validate();
  law.require_grid(obs.grid);
  if (depth < 1 || n_particles < 2)
    throw Error(ErrorCode::InvalidArgument, "need depth >= 1 and n_particles >= 2");
  for (const ObservationPath& up : upstream) {
    up.validate();
    if (!(up.grid == obs.grid))
      throw Error(ErrorCode::GridMismatch, "upstream observation grid differs");
  }
  const TimeGrid& grid = obs.grid;
  const int n = n_particles;
  const double dt = grid.dt;
  const double sdt = std::sqrt(dt);
  const double u = model.u;

  std::vector<NormalStream> streams;
  streams.reserve(static_cast<std::size_t>(n) * depth);
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < depth; ++l)
      streams.emplace_back(seed, stream_id(kPfNoise, i, l));
  NormalStream resample_stream(seed, stream_id(kPfResample));

  Mat P(n, depth);
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < depth; ++l)
      P(i, l) = init_sample(model.init, streams[i * depth + l]);
  Vec w = Vec::Constant(n, 1.0 / n);

  FilterReport rep;
  init_report(rep, grid);
  rep.ess = Vec::Constant(grid.n_points(), static_cast<double>(n));

  auto record = [&](int step) {
    double mean = w.dot(P.col(0));
    double var = 0.0, bump = 0.0, second = 0.0;
    for (int i = 0; i < n; ++i) {
      double y = P(i, 0);
      double d = y - mean;
      var += w[i] * d * d;
      second += w[i] * y * y;
      bump += w[i] * std::exp(-0.5 * y * y);
    }
    rep.mean[step] = mean;
    rep.var[step] = var;
    rep.test_functionals(step, 0) = mean;
    rep.test_functionals(step, 1) = second;
    rep.test_functionals(step, 2) = bump;
    rep.ess[step] = 1.0 / w.squaredNorm();
  };
  record(0);

  double log_rho = 0.0;
  std::vector<double> drifts(depth);
  Mat P_next(n, depth);
  for (int m = 0; m < grid.n_steps; ++m) {
    const double t = grid.time(m);
    LawSnapshot snap = law.at_step(m);
    MeanField1 mf(model, t, snap, n * depth);
    const double dx = obs.values[m + 1] - obs.values[m];
    const double xk = obs.values[m];
    const double mf_obs = mf(xk);

    // Weight increment from the bottom observation...
    double smax = -1e300;
    Vec logg(n);
    for (int i = 0; i < n; ++i) {
      double b = u * pair_drift1(model, t, xk, P(i, 0)) + (1.0 - u) * mf_obs;
      logg[i] = b * dx - 0.5 * b * b * dt;
      smax = std::max(smax, logg[i]);
    }
    // ...plus upstream terms, identical across particles.
    double common = 0.0;
    for (std::size_t j = 0; j < upstream.size(); ++j) {
      double xi = upstream[j].values[m];
      double xnext = j + 1 < upstream.size() ? upstream[j + 1].values[m] : xk;
      double dxi = upstream[j].values[m + 1] - xi;
      double b = u * pair_drift1(model, t, xi, xnext) + (1.0 - u) * mf(xi);
      common += b * dxi - 0.5 * b * b * dt;
    }

    double norm = 0.0;
    for (int i = 0; i < n; ++i) {
      double g = w[i] * std::exp(logg[i] - smax);
      w[i] = g;
      norm += g;
    }
    log_rho += std::log(norm) + smax + common;
    w /= norm;
    rep.rho1[m + 1] = std::exp(log_rho);

    // Propagate the signal tower.
    for (int i = 0; i < n; ++i) {
      for (int l = 0; l < depth; ++l) {
        double x = P(i, l);
        if (l + 1 < depth)
          drifts[l] = u * pair_drift1(model, t, x, P(i, l + 1)) + (1.0 - u) * mf(x);
        else
          drifts[l] = mf(x);
      }
      for (int l = 0; l < depth; ++l)
        P_next(i, l) = P(i, l) + drifts[l] * dt + sdt * streams[i * depth + l].next();
    }
    P.swap(P_next);

    record(m + 1);

    double ess = rep.ess[m + 1];
    if (resample == ResampleKind::Systematic && ess < ess_threshold * n) {
      Vec cum(n);
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += w[i];
        cum[i] = acc;
      }
      double u0 = resample_stream.next_uniform() / n;
      Mat resampled(n, depth);
      int idx = 0;
      for (int i = 0; i < n; ++i) {
        double target = u0 + static_cast<double>(i) / n;
        while (idx < n - 1 && cum[idx] < target) ++idx;
        resampled.row(i) = P.row(idx);
      }
      P = std::move(resampled);
      w.setConstant(1.0 / n);
      if (1.0 / w.squaredNorm() < 2.0)
        throw Error(ErrorCode::WeightCollapse, "filter degenerate after resampling");
    }
    if (!(rep.ess[m + 1] >= 1.0) || !std::isfinite(norm))
      throw Error(ErrorCode::WeightCollapse, "particle weights collapsed");
  }
  return rep;
}

KalmanResult kalman_bucy(const ChainModel& model, const ObservationPath& obs,
                         int depth) {
  require_filter_model(model);
  obs.validate();
  if (model.drift.kind != DriftKind::Linear)
    throw Error(ErrorCode::UnsupportedDrift, "Kalman-Bucy filter requires Linear drift");
  if (depth < 1) throw Error(ErrorCode::InvalidArgument, "depth must be >= 1");
  const TimeGrid& grid = obs.grid;
  const double a0 = model.drift.a0;
  const double a1s = model.drift.a1_self;
  const double a1n = model.drift.a1_neighbor;
  const double u = model.u;
  const double dt = grid.dt;

  // Signal tower drift matrix; top level closed by the mean field.
  Mat A = Mat::Zero(depth, depth);
  for (int i = 0; i < depth; ++i) {
    A(i, i) = a1s;
    if (i + 1 < depth) A(i, i + 1) = u * a1n;
  }
  Vec H = Vec::Zero(depth);
  H[0] = u * a1n;

  // Marginal mean of the chain law, same ODE as the Gaussian oracle.
  GaussianLawFlow oracle = gaussian_chain_oracle(model, 1, grid);
  const Vec& marginal_mean = oracle.marginal_mean;

  double v0 = model.init.kind == InitKind::Gaussian ? model.init.var : 0.0;
  Vec mhat = Vec::Constant(depth, model.init.mean);
  Mat S = v0 * Mat::Identity(depth, depth);

  KalmanResult result;
  init_report(result.report, grid);
  result.means = Mat::Zero(grid.n_points(), depth);
  result.covs.assign(grid.n_points(), Mat::Zero(depth, depth));
  result.means.row(0) = mhat.transpose();
  result.covs[0] = S;

  auto record = [&](int step) {
    double mu = mhat[0];
    double s2 = std::max(S(0, 0), 0.0);
    result.report.mean[step] = mu;
    result.report.var[step] = s2;
    result.report.test_functionals(step, 0) = mu;
    result.report.test_functionals(step, 1) = mu * mu + s2;
    // E exp(-Y^2/2) for Y ~ N(mu, s2), closed form.
    result.report.test_functionals(step, 2) =
        std::exp(-0.5 * mu * mu / (1.0 + s2)) / std::sqrt(1.0 + s2);
  };
  record(0);

  double log_rho = 0.0;
  for (int m = 0; m < grid.n_steps; ++m) {
    double t = grid.time(m);
    double mt = marginal_mean[m];
    Vec c = Vec::Constant(depth, a0 + (1.0 - u) * a1n * mt);
    c[depth - 1] = a0 + a1n * mt;
    double offset = a1s * obs.values[m] + (1.0 - u) * a1n * mt + a0;
    double dx = obs.values[m + 1] - obs.values[m];
    double predicted = H.dot(mhat) + offset;

    Vec gain = S * H;
    mhat += dt * (A * mhat + c) + gain * (dx - predicted * dt);
    S += dt * (A * S + S * A.transpose() + Mat::Identity(depth, depth) -
               gain * gain.transpose());
    S = 0.5 * (S + S.transpose());

    log_rho += predicted * dx - 0.5 * predicted * predicted * dt;
    result.report.rho1[m + 1] = std::exp(log_rho);
    result.means.row(m + 1) = mhat.transpose();
    result.covs[m + 1] = S;
    record(m + 1);
  }
  return result;
}

SpdeResult spde_solve(const ChainModel& model, const ObservationPath& obs,
                      const LawFlow& law, const Mesh1d& mesh) {
  require_filter_model(model);
  obs.validate();
  law.require_grid(obs.grid);
  if (model.drift.kind != DriftKind::Linear && model.drift.kind != DriftKind::Tanh &&
      model.drift.kind != DriftKind::Zero)
    throw Error(ErrorCode::UnsupportedDrift, "mesh solver supports Zero, Linear and Tanh drifts");
  const TimeGrid& grid = obs.grid;
  const int n = mesh.n_nodes;
  const double dy = mesh.dy();
  const double dt = grid.dt;
  if (dt > 0.4 * dy * dy + 1e-15)
    throw Error(ErrorCode::CFLViolation, "need dt <= 0.4*dy^2");

  // Initial density; a Dirac start is widened to a 2-node Gaussian bump.
  Vec p(n);
  double init_sd = model.init.kind == InitKind::Gaussian ? std::sqrt(model.init.var)
                                                         : 2.0 * dy;
  for (int i = 0; i < n; ++i) {
    double z = (mesh.node(i) - model.init.mean) / init_sd;
    p[i] = std::exp(-0.5 * z * z);
  }
  auto trapz = [&](const Vec& f) {
    double acc = 0.0;
    for (int i = 0; i + 1 < n; ++i) acc += 0.5 * (f[i] + f[i + 1]);
    return acc * dy;
  };
  p /= trapz(p);

  SpdeResult result;
  init_report(result.report, grid);

  auto record = [&](int step) {
    double mean = 0.0, second = 0.0, bump = 0.0;
    Vec fy(n), fy2(n), fb(n);
    for (int i = 0; i < n; ++i) {
      double y = mesh.node(i);
      fy[i] = y * p[i];
      fy2[i] = y * y * p[i];
      fb[i] = std::exp(-0.5 * y * y) * p[i];
    }
    mean = trapz(fy);
    second = trapz(fy2);
    bump = trapz(fb);
    result.report.mean[step] = mean;
    result.report.var[step] = std::max(second - mean * mean, 0.0);
    result.report.test_functionals(step, 0) = mean;
    result.report.test_functionals(step, 1) = second;
    result.report.test_functionals(step, 2) = bump;
  };
  record(0);

  Vec p_new(n), flux(n), gain(n);
  double log_rho = 0.0;
  for (int m = 0; m < grid.n_steps; ++m) {
    const double t = grid.time(m);
    LawSnapshot snap = law.at_step(m);
    MeanField1 mf(model, t, snap, n);
    const double xk = obs.values[m];
    const double dx = obs.values[m + 1] - obs.values[m];
    const double mf_obs = mf(xk);
    const double u = model.u;

    // Transport half: d_t p = -(p * bcheck)' + p''/2 with the depth-1 closed
    // signal drift bcheck(t, y) = integral of b~(t, y, .) against mu_t.
    for (int i = 0; i < n; ++i) flux[i] = p[i] * mf(mesh.node(i));
    p_new[0] = 0.0;
    p_new[n - 1] = 0.0;
    for (int i = 1; i + 1 < n; ++i) {
      double adv = -(flux[i + 1] - flux[i - 1]) / (2.0 * dy);
      double diff = 0.5 * (p[i + 1] - 2.0 * p[i] + p[i - 1]) / (dy * dy);
      p_new[i] = p[i] + dt * (adv + diff);
    }
    for (int i = 0; i < n; ++i) {
      if (p_new[i] < 0.0) {
        p_new[i] = 0.0;
        ++result.negative_clamps;
      }
    }
    p = p_new;

    // Gain half: multiplicative update in log space, then renormalize.
    for (int i = 0; i < n; ++i)
      gain[i] = u * pair_drift1(model, t, xk, mesh.node(i)) + (1.0 - u) * mf_obs;
    double pib = trapz((gain.array() * p.array()).matrix());
    double mass_before = trapz(p);
    Vec lik(n);
    for (int i = 0; i < n; ++i) {
      lik[i] = p[i] * std::exp(gain[i] * dx - 0.5 * gain[i] * gain[i] * dt);
      p[i] *= std::exp((gain[i] - pib) * (dx - pib * dt));
    }
    log_rho += std::log(std::max(trapz(lik) / std::max(mass_before, 1e-300), 1e-300));
    result.report.rho1[m + 1] = std::exp(log_rho);
    double mass = trapz(p);
    if (!(mass > 0.0))
      throw Error(ErrorCode::DegenerateLaw, "density mass vanished");
    p /= mass;
    if (p[1] > 1e-8 || p[n - 2] > 1e-8)
      throw Error(ErrorCode::BoundaryLeak, "density reached the mesh boundary; widen the mesh");
    record(m + 1);
  }

  result.final_density.mesh = mesh;
  result.final_density.values = p;
  result.final_density.derivative_order = 0;
  return result;
}

CrossValidation cross_validate(const ChainModel& model, const TimeGrid& grid,
                               std::uint64_t seed, const CrossValidateConfig& cfg) {
  require_filter_model(model);
  if (model.drift.kind != DriftKind::Linear)
    throw Error(ErrorCode::UnsupportedDrift, "cross validation requires Linear drift");
  GaussianLawFlow oracle = gaussian_chain_oracle(model, 1, grid);
  LawFlow mu = oracle.marginal_flow();
  ObservationBundle bundle = simulate_observation(model, cfg.depth, mu, grid, seed);

  CrossValidation cv;
  cv.particle = particle_filter(model, bundle.obs, mu, cfg.n_particles, cfg.depth,
                                ResampleKind::Systematic, cfg.ess_threshold, seed);
  cv.spde = spde_solve(model, bundle.obs, mu, cfg.mesh).report;
  cv.kalman = kalman_bucy(model, bundle.obs, cfg.depth).report;

  int np = grid.n_points();
  double acc_pm = 0, acc_sm = 0, acc_pv = 0, acc_sv = 0, acc_se = 0;
  for (int m = 0; m < np; ++m) {
    acc_pm += std::pow(cv.particle.mean[m] - cv.kalman.mean[m], 2);
    acc_sm += std::pow(cv.spde.mean[m] - cv.kalman.mean[m], 2);
    acc_pv += std::pow(cv.particle.var[m] - cv.kalman.var[m], 2);
    acc_sv += std::pow(cv.spde.var[m] - cv.kalman.var[m], 2);
    acc_se += std::sqrt(std::max(cv.particle.var[m], 0.0) /
                        std::max(cv.particle.ess[m], 1.0));
  }
  cv.rms_mean_particle_kalman = std::sqrt(acc_pm / np);
  cv.rms_mean_spde_kalman = std::sqrt(acc_sm / np);
  cv.rms_var_particle_kalman = std::sqrt(acc_pv / np);
  cv.rms_var_spde_kalman = std::sqrt(acc_sv / np);
  cv.particle_mean_stderr = acc_se / np;
  return cv;
}

}  // namespace chainsde
