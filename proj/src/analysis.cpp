#include "chainsde/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "chainsde/measure.hpp"
#include "chainsde/rng.hpp"

namespace chainsde {
namespace {

// Acklam's rational approximation of the standard normal quantile.
double probit(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  if (p <= 0.0 || p >= 1.0)
    throw Error(ErrorCode::InvalidArgument, "quantile level must be in (0,1)");
  double q, r;
  if (p < 0.02425) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - 0.02425) return -probit(1.0 - p);
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double pearson(const Vec& a, const Vec& b) {
  double ma = a.mean(), mb = b.mean();
  double num = ((a.array() - ma) * (b.array() - mb)).sum();
  double va = (a.array() - ma).square().sum();
  double vb = (b.array() - mb).square().sum();
  return num / std::sqrt(va * vb);
}

double partial_from_pairwise(double r_ij, double r_im, double r_jm) {
  return (r_ij - r_im * r_jm) /
         std::sqrt((1.0 - r_im * r_im) * (1.0 - r_jm * r_jm));
}

}  // namespace

ScalingReport density_scaling_report(const ChainModel& model, double x,
                                     const std::vector<double>& times,
                                     int n_samples, std::uint64_t seed) {
  model.validate();
  if (model.dim != 1)
    throw Error(ErrorCode::DimensionError, "density report is one-dimensional");
  if (model.drift.kind != DriftKind::Zero && model.drift.kind != DriftKind::Tanh)
    throw Error(ErrorCode::UnsupportedDrift, "density scaling needs a bounded drift");
  if (times.empty())
    throw Error(ErrorCode::InvalidArgument, "no times requested");
  if (n_samples < 1000) throw Error(ErrorCode::TooFewSamples, "need >= 1000 samples");

  ChainModel m = model;
  m.init = InitialLaw::dirac(x);

  ScalingReport report;
  report.x = x;
  report.n_samples = n_samples;

  // Tail fit is evaluated at the requested time nearest 0.25.
  std::size_t tail_idx = 0;
  for (std::size_t i = 1; i < times.size(); ++i)
    if (std::abs(times[i] - 0.25) < std::abs(times[tail_idx] - 0.25)) tail_idx = i;

  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    double t = times[ti];
    if (t <= 0.0) throw Error(ErrorCode::InvalidArgument, "times must be positive");
    int n_steps = std::max(50, static_cast<int>(std::lround(t / 1e-3)));
    TimeGrid grid{0.0, t / n_steps, n_steps};

    LawFlow law;
    if (m.drift.kind == DriftKind::Zero) {
      // Unused by the zero drift; any covering flow will do.
      Mat means = Mat::Constant(grid.n_points(), 1, x);
      std::vector<Mat> covs(grid.n_points());
      for (int s = 0; s < grid.n_points(); ++s)
        covs[s] = Mat::Constant(1, 1, std::max(grid.time(s), 1e-12));
      law = LawFlow::gaussian(grid, std::move(means), std::move(covs));
    } else {
      PicardResult pic = picard_iterate(m, grid, 20000, 4, stream_id(0x61, seed, ti));
      law = pic.flows.back();
    }

    ChainEnsemble ens = simulate_chain(m, 2, law, grid, n_samples,
                                       stream_id(0x62, seed, ti));
    Vec samples = ens.level_at_step(0, grid.n_steps).col(0);
    double mean = samples.mean();
    double sd = std::sqrt((samples.array() - mean).square().mean());

    Mesh1d mesh{mean - 8.0 * sd, mean + 8.0 * sd, 801};
    EmpiricalMeasure em = EmpiricalMeasure::from_scalar(samples);
    for (int order = 0; order <= 2; ++order) {
      DensityCurve curve = kde(em, mesh, Bandwidth::silverman_rule(), order);
      double sup = curve.sup_abs();
      report.rows.push_back({t, order, sup, sup * std::pow(t, 0.5 * (1 + order))});
    }

    if (ti == tail_idx) {
      // Gaussian tail shape: regress log density on (z - mean)^2 over the
      // two-sided 2..3 sigma band and report R^2.
      DensityCurve curve = kde(em, mesh, Bandwidth::silverman_rule(), 0);
      std::vector<double> xs, ys;
      for (int i = 0; i < mesh.n_nodes; ++i) {
        double z = mesh.node(i);
        double dev = std::abs(z - mean) / sd;
        if (dev >= 2.0 && dev <= 3.0 && curve.values[i] > 0.0) {
          xs.push_back((z - mean) * (z - mean));
          ys.push_back(std::log(curve.values[i]));
        }
      }
      const int n = static_cast<int>(xs.size());
      if (n < 10) throw Error(ErrorCode::TooFewSamples, "tail band too sparse");
      double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
      for (int i = 0; i < n; ++i) {
        sx += xs[i]; sy += ys[i];
        sxx += xs[i] * xs[i]; sxy += xs[i] * ys[i]; syy += ys[i] * ys[i];
      }
      double cov = sxy - sx * sy / n;
      double vx = sxx - sx * sx / n;
      double vy = syy - sy * sy / n;
      report.tail_fit_r2 = cov * cov / (vx * vy);
    }
  }
  return report;
}

MrfReport mrf_partial_correlation(const ChainEnsemble& ensemble, const ChainModel& model,
                                  int step, int i, int mid, int j, double ci_level) {
  if (ensemble.dim != 1)
    throw Error(ErrorCode::DimensionError, "partial correlation is one-dimensional");
  int need = std::max({i, mid, j}) + 1;
  if (ensemble.depth < need || i < 0 || mid < 0 || j < 0 || i == mid || j == mid || i == j)
    throw Error(ErrorCode::InvalidArgument, "bad level triplet");
  if (step < 0 || step >= ensemble.grid.n_points())
    throw Error(ErrorCode::GridMismatch, "step outside the grid");
  const int n = ensemble.n_paths;
  if (n < 8) throw Error(ErrorCode::TooFewSamples, "need >= 8 paths");

  Vec xi = ensemble.level_at_step(i, step).col(0);
  Vec xm = ensemble.level_at_step(mid, step).col(0);
  Vec xj = ensemble.level_at_step(j, step).col(0);
  double vm = (xm.array() - xm.mean()).square().mean();
  if (vm < 1e-12)
    throw Error(ErrorCode::SingularConditioning, "conditioning level is constant");

  MrfReport rep;
  rep.t = ensemble.grid.time(step);
  rep.i = i;
  rep.mid = mid;
  rep.j = j;
  rep.partial_corr =
      partial_from_pairwise(pearson(xi, xj), pearson(xi, xm), pearson(xj, xm));

  double z = std::atanh(std::clamp(rep.partial_corr, -1.0 + 1e-15, 1.0 - 1e-15));
  double se = 1.0 / std::sqrt(static_cast<double>(n) - 4.0);  // one conditioner
  double q = probit(0.5 * (1.0 + ci_level));
  rep.ci_lo = std::tanh(z - q * se);
  rep.ci_hi = std::tanh(z + q * se);

  if (model.drift.kind == DriftKind::Linear || model.drift.kind == DriftKind::Zero) {
    ChainModel om = model;
    if (om.drift.kind == DriftKind::Zero)
      om.drift = PairwiseDrift::linear(0.0, 0.0, 0.0);
    GaussianLawFlow oracle = gaussian_chain_oracle(om, ensemble.depth, ensemble.grid);
    const Mat& S = oracle.covs[step];
    auto corr = [&](int a, int b) { return S(a, b) / std::sqrt(S(a, a) * S(b, b)); };
    rep.has_oracle = true;
    rep.oracle_partial_corr =
        partial_from_pairwise(corr(i, j), corr(i, mid), corr(j, mid));
  }
  return rep;
}

double joint_max_cell_mass(const ChainEnsemble& ensemble, int step, int level_a,
                           int level_b) {
  if (step < 0 || step >= ensemble.grid.n_points())
    throw Error(ErrorCode::GridMismatch, "step outside the grid");
  Vec a = ensemble.level_at_step(level_a, step).col(0);
  Vec b = ensemble.level_at_step(level_b, step).col(0);
  const int n = static_cast<int>(a.size());
  auto box = [](const Vec& v, double& lo, double& hi) {
    double mean = v.mean();
    double sd = std::sqrt((v.array() - mean).square().mean());
    lo = mean - 4.0 * sd;
    hi = mean + 4.0 * sd;
  };
  double alo, ahi, blo, bhi;
  box(a, alo, ahi);
  box(b, blo, bhi);
  if (!(ahi > alo) || !(bhi > blo)) return 1.0;  // degenerate cloud: one atom

  constexpr int kBins = 64;
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> counts =
      Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>::Zero(kBins, kBins);
  for (int s = 0; s < n; ++s) {
    int ia = static_cast<int>(kBins * (a[s] - alo) / (ahi - alo));
    int ib = static_cast<int>(kBins * (b[s] - blo) / (bhi - blo));
    if (ia < 0 || ia >= kBins || ib < 0 || ib >= kBins) continue;
    ++counts(ia, ib);
  }
  return static_cast<double>(counts.maxCoeff()) / n;
}

}  // namespace chainsde
