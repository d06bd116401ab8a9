#include "chainsde/simulate.hpp"

#include <cmath>

#include "chainsde/detail/scalar_kernels.hpp"
#include "chainsde/measure.hpp"
#include "chainsde/rng.hpp"

namespace chainsde {
namespace {

using detail::MeanField1;
using detail::init_sample;
using detail::kBlowup;

constexpr std::uint64_t kChainNoise = 0x11;
constexpr std::uint64_t kPicardInit = 0x21;
constexpr std::uint64_t kPicardNoise = 0x22;
constexpr std::uint64_t kSensNoise = 0x31;

void check_stability(const ChainModel& model, const TimeGrid& grid) {
  if (grid.dt * model.drift.lipschitz() >= 0.5)
    throw Error(ErrorCode::UnstableStep, "dt * Lipschitz constant must be < 0.5");
}

ChainEnsemble make_ensemble(const TimeGrid& grid, int depth, int n_paths, int dim,
                            std::uint64_t seed, ClosureKind closure) {
  ChainEnsemble e;
  e.grid = grid;
  e.depth = depth;
  e.n_paths = n_paths;
  e.dim = dim;
  e.seed = seed;
  e.closure_used = closure;
  e.values.assign(static_cast<std::size_t>(n_paths) * depth * grid.n_points() * dim, 0.0);
  return e;
}

// Shared scalar stepper for chain and loop systems.
//   neighbor(p, l) -> level index of the neighbor, or -1 for closure-at-top
ChainEnsemble run_scalar_system(const ChainModel& model, int depth, const LawFlow& law,
                                const TimeGrid& grid, int n_paths, std::uint64_t seed,
                                bool loop) {
  const ClosureSpec& closure = model.closure;
  const bool frozen_top = !loop && closure.kind == ClosureKind::FrozenLaw;
  if (frozen_top) {
    if (closure.frozen.kind != LawKind::Empirical)
      throw Error(ErrorCode::UnsupportedDrift, "FrozenLaw closure needs an empirical flow");
    closure.frozen.require_grid(grid);
  }
  ChainEnsemble ens = make_ensemble(grid, depth, n_paths, 1, seed,
                                    loop ? ClosureKind::Loop : closure.kind);

  std::vector<NormalStream> streams;
  streams.reserve(static_cast<std::size_t>(n_paths) * depth);
  for (int p = 0; p < n_paths; ++p)
    for (int l = 0; l < depth; ++l)
      streams.emplace_back(seed, stream_id(kChainNoise, p, l));

  Mat state(n_paths, depth);
  for (int p = 0; p < n_paths; ++p)
    for (int l = 0; l < depth; ++l) {
      state(p, l) = init_sample(model.init, streams[p * depth + l]);
      ens.at(p, l, 0) = state(p, l);
    }

  const double dt = grid.dt;
  const double sdt = model.sigma * std::sqrt(dt);
  const double u = model.u;
  std::vector<double> drifts(depth);
  for (int m = 0; m < grid.n_steps; ++m) {
    const double t = grid.time(m);
    MeanField1 mf(model, t, law.at_step(m), n_paths * depth);
    for (int p = 0; p < n_paths; ++p) {
      for (int l = 0; l < depth; ++l) {
        double x = state(p, l);
        if (loop) {
          double y = state(p, (l + 1) % depth);
          drifts[l] = u * pair_drift1(model, t, x, y) + (1.0 - u) * mf(x);
        } else if (l + 1 < depth) {
          drifts[l] = u * pair_drift1(model, t, x, state(p, l + 1)) + (1.0 - u) * mf(x);
        } else if (frozen_top) {
          const Mat& cloud = closure.frozen.clouds[m];
          double y = cloud(p % cloud.rows(), 0);
          drifts[l] = u * pair_drift1(model, t, x, y) + (1.0 - u) * mf(x);
        } else {
          // Mean-field closure: the neighbor term collapses onto the law.
          drifts[l] = mf(x);
        }
      }
      for (int l = 0; l < depth; ++l) {
        double next = state(p, l) + drifts[l] * dt + sdt * streams[p * depth + l].next();
        if (!(std::abs(next) <= kBlowup))
          throw Error(ErrorCode::UnstableStep, "path exceeded 1e8, reduce dt");
        state(p, l) = next;
        ens.at(p, l, m + 1) = next;
      }
    }
  }
  return ens;
}

// Generic-dimension fallback, MeanField closure only.
ChainEnsemble run_vector_chain(const ChainModel& model, int depth, const LawFlow& law,
                               const TimeGrid& grid, int n_paths, std::uint64_t seed) {
  if (model.closure.kind != ClosureKind::MeanField)
    throw Error(ErrorCode::UnsupportedDrift, "dim > 1 supports MeanField closure only");
  const int N = model.dim;
  ChainEnsemble ens = make_ensemble(grid, depth, n_paths, N, seed, ClosureKind::MeanField);
  std::vector<NormalStream> streams;
  for (int p = 0; p < n_paths; ++p)
    for (int l = 0; l < depth; ++l)
      streams.emplace_back(seed, stream_id(kChainNoise, p, l));

  std::vector<std::vector<Vec>> state(n_paths, std::vector<Vec>(depth));
  for (int p = 0; p < n_paths; ++p)
    for (int l = 0; l < depth; ++l) {
      Vec x(N);
      for (int c = 0; c < N; ++c) x[c] = init_sample(model.init, streams[p * depth + l]);
      state[p][l] = x;
      for (int c = 0; c < N; ++c) ens.at(p, l, 0, c) = x[c];
    }

  const double dt = grid.dt;
  const double sdt = model.sigma * std::sqrt(dt);
  for (int m = 0; m < grid.n_steps; ++m) {
    const double t = grid.time(m);
    LawSnapshot snap = law.at_step(m);
    for (int p = 0; p < n_paths; ++p) {
      std::vector<Vec> drifts(depth);
      for (int l = 0; l < depth; ++l) {
        if (l + 1 < depth)
          drifts[l] = eval_mixture_drift(model, t, state[p][l], state[p][l + 1], snap);
        else
          drifts[l] = mean_field_drift(model, t, state[p][l], snap);
      }
      for (int l = 0; l < depth; ++l) {
        Vec& x = state[p][l];
        for (int c = 0; c < N; ++c) x[c] += drifts[l][c] * dt + sdt * streams[p * depth + l].next();
        if (!(x.cwiseAbs().maxCoeff() <= kBlowup))
          throw Error(ErrorCode::UnstableStep, "path exceeded 1e8, reduce dt");
        for (int c = 0; c < N; ++c) ens.at(p, l, m + 1, c) = x[c];
      }
    }
  }
  return ens;
}

}  // namespace

Vec ChainEnsemble::scalar_path(int path, int level) const {
  if (dim != 1) throw Error(ErrorCode::DimensionError, "scalar_path needs dim 1");
  Vec out(grid.n_points());
  for (int s = 0; s < grid.n_points(); ++s) out[s] = at(path, level, s);
  return out;
}

std::vector<Vec> ChainEnsemble::level_paths(int level) const {
  std::vector<Vec> out(n_paths);
  for (int p = 0; p < n_paths; ++p) out[p] = scalar_path(p, level);
  return out;
}

Mat ChainEnsemble::level_at_step(int level, int step) const {
  Mat out(n_paths, dim);
  for (int p = 0; p < n_paths; ++p)
    for (int c = 0; c < dim; ++c) out(p, c) = at(p, level, step, c);
  return out;
}

ChainEnsemble simulate_chain(const ChainModel& model, int depth, const LawFlow& law,
                             const TimeGrid& grid, int n_paths, std::uint64_t seed) {
  model.validate();
  if (depth < 1) throw Error(ErrorCode::InvalidArgument, "depth must be >= 1");
  if (n_paths < 1) throw Error(ErrorCode::InvalidArgument, "n_paths must be >= 1");
  law.require_grid(grid);
  check_stability(model, grid);
  if (model.dim == 1) return run_scalar_system(model, depth, law, grid, n_paths, seed, false);
  return run_vector_chain(model, depth, law, grid, n_paths, seed);
}

ChainEnsemble simulate_loop(const ChainModel& model, int n, const TimeGrid& grid,
                            const LawFlow& law, int n_reps, std::uint64_t seed) {
  model.validate();
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "loop size must be >= 2");
  if (model.dim != 1) throw Error(ErrorCode::DimensionError, "loop system is scalar");
  law.require_grid(grid);
  check_stability(model, grid);
  return run_scalar_system(model, n, law, grid, n_reps, seed, true);
}

PicardResult picard_iterate(const ChainModel& model, const TimeGrid& grid,
                            int n_particles, int n_iters, std::uint64_t seed) {
  model.validate();
  if (model.dim != 1) throw Error(ErrorCode::DimensionError, "picard iteration is scalar");
  if (n_iters < 2) throw Error(ErrorCode::InvalidArgument, "n_iters must be >= 2");
  if (n_particles < 2) throw Error(ErrorCode::InvalidArgument, "n_particles must be >= 2");
  check_stability(model, grid);

  const int np = grid.n_points();
  Vec inits(n_particles);
  for (int p = 0; p < n_particles; ++p) {
    NormalStream s(seed, stream_id(kPicardInit, p));
    inits[p] = init_sample(model.init, s);
  }

  // Iterate 0: the initial law held constant in time.
  Mat prev(n_particles, np);
  for (int p = 0; p < n_particles; ++p) prev.row(p).setConstant(inits[p]);

  auto thin_flow = [&](const Mat& paths) {
    int keep = std::min(n_particles, 1000);
    int stride = n_particles / keep;
    std::vector<Mat> clouds(np);
    for (int m = 0; m < np; ++m) {
      Mat c(keep, 1);
      for (int i = 0; i < keep; ++i) c(i, 0) = paths(i * stride, m);
      clouds[m] = std::move(c);
    }
    return LawFlow::empirical(grid, std::move(clouds));
  };

  PicardResult result;
  result.flows.push_back(thin_flow(prev));
  std::vector<double> dists;

  const double dt = grid.dt;
  const double sdt = model.sigma * std::sqrt(dt);
  const double u = model.u;
  for (int it = 0; it < n_iters; ++it) {
    Mat cur(n_particles, np);
    cur.col(0) = inits;
    std::vector<NormalStream> streams;
    streams.reserve(n_particles);
    for (int p = 0; p < n_particles; ++p)
      streams.emplace_back(seed, stream_id(kPicardNoise, p));  // CRN across iterations
    for (int m = 0; m < grid.n_steps; ++m) {
      const double t = grid.time(m);
      MeanField1 mf(model, t, LawSnapshot::empirical(prev.col(m)), n_particles);
      for (int p = 0; p < n_particles; ++p) {
        double x = cur(p, m);
        double b = u * pair_drift1(model, t, x, prev(p, m)) + (1.0 - u) * mf(x);
        double next = x + b * dt + sdt * streams[p].next();
        if (!(std::abs(next) <= kBlowup))
          throw Error(ErrorCode::UnstableStep, "path exceeded 1e8, reduce dt");
        cur(p, m + 1) = next;
      }
    }
    double final_spread = cur.col(np - 1).maxCoeff() - cur.col(np - 1).minCoeff();
    if (final_spread == 0.0)
      throw Error(ErrorCode::DegenerateLaw, "empirical flow collapsed to one particle");

    // Synchronous-coupling distance between successive iterates.
    double acc = 0.0;
    for (int p = 0; p < n_particles; ++p) {
      double sup2 = 0.0;
      for (int m = 0; m < np; ++m) {
        double d = cur(p, m) - prev(p, m);
        sup2 = std::max(sup2, d * d);
      }
      acc += std::min(sup2, 1.0);
    }
    dists.push_back(std::sqrt(acc / n_particles));
    prev = std::move(cur);
    result.flows.push_back(thin_flow(prev));
  }
  result.distances = Eigen::Map<Vec>(dists.data(), dists.size());
  return result;
}

namespace {

// Two-level x-process stepper used by flow_check and the sensitivity flow:
// level 0 starts at x, level 1 is the neighbor under mean-field closure.
struct XProcessStepper {
  const ChainModel& model;
  const LawFlow& law;
  const TimeGrid& grid;

  void step_range(Mat& lvl0, Mat& lvl1, std::vector<NormalStream>& streams,
                  int m_begin, int m_end) const {
    const double dt = grid.dt;
    const double sdt = model.sigma * std::sqrt(dt);
    const double u = model.u;
    const int n_paths = static_cast<int>(lvl0.rows());
    for (int m = m_begin; m < m_end; ++m) {
      const double t = grid.time(m);
      LawSnapshot snap = law.at_step(m);
      // Exact evaluation here: the sensitivity flow and its finite-difference
      // oracle must see the same drift, not an interpolated one.
      MeanField1 mf(model, t, snap, 0);
      for (int p = 0; p < n_paths; ++p) {
        double x0 = lvl0(p, m), x1 = lvl1(p, m);
        double b0 = u * pair_drift1(model, t, x0, x1) + (1.0 - u) * mf(x0);
        double b1 = mf(x1);
        lvl0(p, m + 1) = x0 + b0 * dt + sdt * streams[2 * p].next();
        lvl1(p, m + 1) = x1 + b1 * dt + sdt * streams[2 * p + 1].next();
        if (!(std::abs(lvl0(p, m + 1)) <= kBlowup && std::abs(lvl1(p, m + 1)) <= kBlowup))
          throw Error(ErrorCode::UnstableStep, "path exceeded 1e8, reduce dt");
      }
    }
  }

  std::vector<NormalStream> fresh_streams(int n_paths, std::uint64_t seed) const {
    std::vector<NormalStream> streams;
    streams.reserve(2 * n_paths);
    for (int p = 0; p < n_paths; ++p) {
      streams.emplace_back(seed, stream_id(kSensNoise, p, 0));
      streams.emplace_back(seed, stream_id(kSensNoise, p, 1));
    }
    return streams;
  }

  void init(Mat& lvl0, Mat& lvl1, std::vector<NormalStream>& streams, double x,
            int m0) const {
    const int n_paths = static_cast<int>(lvl0.rows());
    for (int p = 0; p < n_paths; ++p) {
      lvl0(p, m0) = x;
      lvl1(p, m0) = init_sample(model.init, streams[2 * p + 1]);
    }
  }
};

}  // namespace

FlowCheckReport flow_check(const ChainModel& model, const LawFlow& law,
                           const TimeGrid& grid, double t, double s, double r,
                           double x, int n_paths, std::uint64_t seed) {
  model.validate();
  if (model.dim != 1) throw Error(ErrorCode::DimensionError, "flow_check is scalar");
  law.require_grid(grid);
  check_stability(model, grid);
  int mt = grid.step_of(t), ms = grid.step_of(s), mr = grid.step_of(r);
  if (!(mt < ms && ms < mr))
    throw Error(ErrorCode::GridMismatch, "flow_check needs t < s < r on the grid");

  XProcessStepper stepper{model, law, grid};
  const int np = grid.n_points();

  // Direct route: one pass t -> r.
  Mat d0 = Mat::Zero(n_paths, np), d1 = Mat::Zero(n_paths, np);
  auto streams_a = stepper.fresh_streams(n_paths, seed);
  stepper.init(d0, d1, streams_a, x, mt);
  stepper.step_range(d0, d1, streams_a, mt, mr);

  // Restarted route: t -> s, stop, then continue s -> r from the reached state.
  Mat r0 = Mat::Zero(n_paths, np), r1 = Mat::Zero(n_paths, np);
  auto streams_b = stepper.fresh_streams(n_paths, seed);
  stepper.init(r0, r1, streams_b, x, mt);
  stepper.step_range(r0, r1, streams_b, mt, ms);
  Vec state0 = r0.col(ms), state1 = r1.col(ms);
  r0.col(ms) = state0;
  r1.col(ms) = state1;
  stepper.step_range(r0, r1, streams_b, ms, mr);

  auto moments = [&](const Mat& paths) {
    double mean = paths.col(mr).mean();
    double var = (paths.col(mr).array() - mean).square().sum() / (n_paths - 1);
    return std::make_pair(mean, var);
  };
  auto [mean_d, var_d] = moments(d0);
  auto [mean_r, var_r] = moments(r0);

  FlowCheckReport rep;
  rep.mean_direct = mean_d;
  rep.var_direct = var_d;
  rep.mean_restart = mean_r;
  rep.var_restart = var_r;
  rep.pooled_mean_stderr = std::sqrt((var_d + var_r) / n_paths);
  // Variance-of-variance via the fourth moment.
  auto var_se = [&](const Mat& paths, double mean, double var) {
    double m4 = (paths.col(mr).array() - mean).pow(4).sum() / n_paths;
    return std::sqrt(std::max(m4 - var * var, 0.0) / n_paths);
  };
  rep.pooled_var_stderr = std::sqrt(std::pow(var_se(d0, mean_d, var_d), 2) +
                                    std::pow(var_se(r0, mean_r, var_r), 2));
  rep.standardized_mean_diff =
      rep.pooled_mean_stderr > 0 ? (mean_d - mean_r) / rep.pooled_mean_stderr : 0.0;
  rep.standardized_var_diff =
      rep.pooled_var_stderr > 0 ? (var_d - var_r) / rep.pooled_var_stderr : 0.0;
  return rep;
}

Mat simulate_x_process(const ChainModel& model, const LawFlow& law, double x,
                       const TimeGrid& grid, int n_paths, std::uint64_t seed) {
  model.validate();
  if (model.dim != 1) throw Error(ErrorCode::DimensionError, "x-process is scalar");
  law.require_grid(grid);
  check_stability(model, grid);
  XProcessStepper stepper{model, law, grid};
  Mat lvl0 = Mat::Zero(n_paths, grid.n_points());
  Mat lvl1 = Mat::Zero(n_paths, grid.n_points());
  auto streams = stepper.fresh_streams(n_paths, seed);
  stepper.init(lvl0, lvl1, streams, x, 0);
  stepper.step_range(lvl0, lvl1, streams, 0, grid.n_steps);
  return lvl0;
}

SensitivityEnsemble pathwise_sensitivity(const ChainModel& model, const LawFlow& law,
                                         double x, const TimeGrid& grid, int n_paths,
                                         std::uint64_t seed) {
  model.validate();
  if (model.dim != 1) throw Error(ErrorCode::DimensionError, "sensitivity flow is scalar");
  if (!model.drift.has_dx())
    throw Error(ErrorCode::MissingDerivative, "drift has no x-derivative");
  law.require_grid(grid);
  check_stability(model, grid);

  XProcessStepper stepper{model, law, grid};
  const int np = grid.n_points();
  Mat lvl0 = Mat::Zero(n_paths, np), lvl1 = Mat::Zero(n_paths, np);
  auto streams = stepper.fresh_streams(n_paths, seed);
  stepper.init(lvl0, lvl1, streams, x, 0);
  stepper.step_range(lvl0, lvl1, streams, 0, grid.n_steps);

  SensitivityEnsemble out;
  out.grid = grid;
  out.n_paths = n_paths;
  out.paths = lvl0;
  out.jacobians = Mat::Ones(n_paths, np);
  const double dt = grid.dt;
  const double u = model.u;
  for (int m = 0; m < grid.n_steps; ++m) {
    const double t = grid.time(m);
    // Same MeanField1 as the stepper, so the derivative matches the drift
    // the paths actually saw.
    MeanField1 mf(model, t, law.at_step(m), 0);
    for (int p = 0; p < n_paths; ++p) {
      double db = u * pair_drift1_dx(model, t, lvl0(p, m), lvl1(p, m)) +
                  (1.0 - u) * mf.dx(lvl0(p, m));
      out.jacobians(p, m + 1) = out.jacobians(p, m) * (1.0 + db * dt);
    }
  }
  return out;
}

}  // namespace chainsde
