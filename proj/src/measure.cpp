#include "chainsde/measure.hpp"

#include <algorithm>
#include <cmath>

namespace chainsde {

EmpiricalMeasure EmpiricalMeasure::from_scalar(const Vec& values) {
  EmpiricalMeasure m;
  m.samples = values;
  m.validate();
  return m;
}

void EmpiricalMeasure::validate() const {
  if (samples.rows() < 1)
    throw Error(ErrorCode::DegenerateLaw, "empirical measure needs samples");
  if (weights) {
    if (weights->size() != samples.rows())
      throw Error(ErrorCode::DimensionError, "weight count mismatch");
    if (weights->minCoeff() < 0.0 || std::abs(weights->sum() - 1.0) > 1e-12)
      throw Error(ErrorCode::InvalidArgument, "weights must be nonnegative and sum to 1");
  }
}

namespace {

std::vector<std::pair<double, double>> sorted_with_weights(const EmpiricalMeasure& m) {
  std::vector<std::pair<double, double>> out(m.size());
  double w = 1.0 / m.size();
  for (int i = 0; i < m.size(); ++i)
    out[i] = {m.samples(i, 0), m.weights ? (*m.weights)[i] : w};
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

double w2_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  a.validate();
  b.validate();
  if (a.dim() != 1 || b.dim() != 1)
    throw Error(ErrorCode::DimensionError, "w2_1d is one-dimensional");
  if (!a.weights && !b.weights && a.size() == b.size()) {
    std::vector<double> xs(a.samples.col(0).data(), a.samples.col(0).data() + a.size());
    std::vector<double> ys(b.samples.col(0).data(), b.samples.col(0).data() + b.size());
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double acc = 0.0;
    for (int i = 0; i < a.size(); ++i) {
      double d = xs[i] - ys[i];
      acc += d * d;
    }
    return std::sqrt(acc / a.size());
  }
  // Weighted or unequal sizes: integrate the squared quantile difference over
  // the common refinement of the two cumulative-weight partitions.
  auto xa = sorted_with_weights(a);
  auto xb = sorted_with_weights(b);
  std::size_t ia = 0, ib = 0;
  double ca = xa[0].second, cb = xb[0].second, prev = 0.0, acc = 0.0;
  while (ia < xa.size() && ib < xb.size()) {
    double next = std::min(ca, cb);
    double d = xa[ia].first - xb[ib].first;
    acc += d * d * (next - prev);
    prev = next;
    if (ca <= cb + 1e-15) { ++ia; if (ia < xa.size()) ca += xa[ia].second; }
    else { ++ib; if (ib < xb.size()) cb += xb[ib].second; }
  }
  return std::sqrt(acc);
}

double path_metric_Dt(const std::vector<Vec>& a_paths,
                      const std::vector<Vec>& b_paths, int step_t) {
  if (a_paths.size() != b_paths.size() || a_paths.empty())
    throw Error(ErrorCode::PairingError, "path counts differ or empty");
  double acc = 0.0;
  for (std::size_t p = 0; p < a_paths.size(); ++p) {
    const Vec& a = a_paths[p];
    const Vec& b = b_paths[p];
    if (a.size() != b.size() || step_t >= a.size())
      throw Error(ErrorCode::GridMismatch, "path lengths differ or t outside grid");
    double sup2 = 0.0;
    for (int s = 0; s <= step_t; ++s) {
      double d = a[s] - b[s];
      sup2 = std::max(sup2, d * d);
    }
    acc += std::min(sup2, 1.0);
  }
  return std::sqrt(acc / a_paths.size());
}

double DensityCurve::integral() const {
  double acc = 0.0;
  for (int i = 0; i + 1 < values.size(); ++i) acc += 0.5 * (values[i] + values[i + 1]);
  return acc * mesh.dy();
}

DensityCurve kde(const EmpiricalMeasure& samples, const Mesh1d& mesh,
                 Bandwidth bandwidth, int order) {
  samples.validate();
  if (samples.dim() != 1)
    throw Error(ErrorCode::DimensionError, "kde is one-dimensional");
  if (order < 0 || order > 2)
    throw Error(ErrorCode::InvalidArgument, "kde order must be 0, 1 or 2");
  int n = samples.size();
  int min_n = order == 0 ? 100 : 1000;
  if (n < min_n)
    throw Error(ErrorCode::TooFewSamples, "kde needs at least " + std::to_string(min_n) +
                                              " samples at this order");
  double h;
  if (bandwidth.silverman) {
    double mean = samples.samples.col(0).mean();
    double sd = std::sqrt((samples.samples.col(0).array() - mean).square().sum() / (n - 1));
    h = 1.06 * sd * std::pow(static_cast<double>(n), -1.0 / (2.0 * order + 5.0));
  } else {
    h = bandwidth.value;
  }
  if (!(h > 0.0)) throw Error(ErrorCode::BandwidthError, "bandwidth must be > 0");

  DensityCurve curve;
  curve.mesh = mesh;
  curve.derivative_order = order;
  curve.values = Vec::Zero(mesh.n_nodes);
  const double inv_norm = 1.0 / (n * h * std::sqrt(2.0 * M_PI));
  const double trunc = 8.0 * h;  // kernel support cut at 8 bandwidths
  std::vector<double> xs(samples.samples.col(0).data(),
                         samples.samples.col(0).data() + n);
  std::sort(xs.begin(), xs.end());
  for (int i = 0; i < mesh.n_nodes; ++i) {
    double y = mesh.node(i);
    auto lo = std::lower_bound(xs.begin(), xs.end(), y - trunc);
    auto hi = std::upper_bound(xs.begin(), xs.end(), y + trunc);
    double acc = 0.0;
    for (auto it = lo; it != hi; ++it) {
      double z = (y - *it) / h;
      double phi = std::exp(-0.5 * z * z);
      switch (order) {
        case 0: acc += phi; break;
        case 1: acc += -z * phi; break;
        case 2: acc += (z * z - 1.0) * phi; break;
      }
    }
    curve.values[i] = acc * inv_norm / std::pow(h, order);
  }
  return curve;
}

namespace {

// Drift matrix and affine offset of the depth-truncated linear chain.
// Interior level i: a0 + a1s*X_i + u*a1n*X_{i+1} + (1-u)*a1n*m(t).
// Top level: mean-field closure, a0 + a1s*X_d + a1n*m(t).
struct LinearChainSystem {
  Mat A;
  double a0, a1s, a1n, u;

  explicit LinearChainSystem(const ChainModel& model, int depth) {
    a0 = model.drift.a0;
    a1s = model.drift.a1_self;
    a1n = model.drift.a1_neighbor;
    u = model.u;
    A = Mat::Zero(depth, depth);
    for (int i = 0; i < depth; ++i) {
      A(i, i) = a1s;
      if (i + 1 < depth) A(i, i + 1) = u * a1n;
    }
  }

  Vec affine(int depth, double m) const {
    Vec c = Vec::Constant(depth, a0 + (1.0 - u) * a1n * m);
    c[depth - 1] = a0 + a1n * m;
    return c;
  }

  double marginal_mean_rhs(double m) const { return a0 + (a1s + a1n) * m; }
};

}  // namespace

LawFlow GaussianLawFlow::marginal_flow(int level) const {
  Mat means(grid.n_points(), 1);
  std::vector<Mat> vars(grid.n_points());
  for (int s = 0; s < grid.n_points(); ++s) {
    means(s, 0) = level_means(s, level);
    vars[s] = Mat::Constant(1, 1, std::max(covs[s](level, level), 0.0));
  }
  return LawFlow::gaussian(grid, std::move(means), std::move(vars));
}

GaussianLawFlow gaussian_chain_oracle(const ChainModel& model, int depth,
                                      const TimeGrid& grid) {
  model.validate();
  if (model.drift.kind != DriftKind::Linear)
    throw Error(ErrorCode::UnsupportedDrift, "oracle requires Linear drift");
  if (model.dim != 1)
    throw Error(ErrorCode::DimensionError, "oracle is scalar per level");
  if (model.closure.kind != ClosureKind::MeanField)
    throw Error(ErrorCode::UnsupportedDrift, "oracle requires MeanField closure");
  if (depth < 1) throw Error(ErrorCode::InvalidArgument, "depth must be >= 1");

  LinearChainSystem sys(model, depth);
  const double sig2 = model.sigma * model.sigma;
  double m0 = model.init.mean;
  double v0 = model.init.kind == InitKind::Gaussian ? model.init.var : 0.0;

  GaussianLawFlow flow;
  flow.grid = grid;
  flow.marginal_mean = Vec::Zero(grid.n_points());
  flow.level_means = Mat::Zero(grid.n_points(), depth);
  flow.covs.assign(grid.n_points(), Mat::Zero(depth, depth));

  double m = m0;
  Vec mu = Vec::Constant(depth, m0);
  Mat S = v0 * Mat::Identity(depth, depth);
  flow.marginal_mean[0] = m;
  flow.level_means.row(0) = mu.transpose();
  flow.covs[0] = S;

  const double dt = grid.dt;
  auto mean_rhs = [&](double mm) { return sys.marginal_mean_rhs(mm); };
  auto mu_rhs = [&](const Vec& muv, double mm) -> Vec {
    return sys.A * muv + sys.affine(depth, mm);
  };
  auto cov_rhs = [&](const Mat& Sv) -> Mat {
    return sys.A * Sv + Sv * sys.A.transpose() + sig2 * Mat::Identity(depth, depth);
  };
  // m(t) along the RK4 substeps, needed by the mean stage.
  for (int s = 0; s < grid.n_steps; ++s) {
    double k1 = mean_rhs(m);
    double k2 = mean_rhs(m + 0.5 * dt * k1);
    double k3 = mean_rhs(m + 0.5 * dt * k2);
    double k4 = mean_rhs(m + dt * k3);
    double m_half = m + 0.5 * dt * k1;  // first-stage estimate at t+dt/2
    double m_half2 = m + 0.5 * dt * k2;
    double m_full = m + dt * k3;

    Vec q1 = mu_rhs(mu, m);
    Vec q2 = mu_rhs(mu + 0.5 * dt * q1, m_half);
    Vec q3 = mu_rhs(mu + 0.5 * dt * q2, m_half2);
    Vec q4 = mu_rhs(mu + dt * q3, m_full);
    mu += dt / 6.0 * (q1 + 2.0 * q2 + 2.0 * q3 + q4);

    Mat r1 = cov_rhs(S);
    Mat r2 = cov_rhs(S + 0.5 * dt * r1);
    Mat r3 = cov_rhs(S + 0.5 * dt * r2);
    Mat r4 = cov_rhs(S + dt * r3);
    S += dt / 6.0 * (r1 + 2.0 * r2 + 2.0 * r3 + r4);
    S = 0.5 * (S + S.transpose());

    m += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    flow.marginal_mean[s + 1] = m;
    flow.level_means.row(s + 1) = mu.transpose();
    flow.covs[s + 1] = S;
  }
  return flow;
}

}  // namespace chainsde
