#include "chainsde/law.hpp"

namespace chainsde {

LawFlow LawFlow::gaussian(TimeGrid g, Mat means, std::vector<Mat> covs) {
  if (means.rows() != g.n_points() || static_cast<int>(covs.size()) != g.n_points())
    throw Error(ErrorCode::GridMismatch, "gaussian flow size does not match grid");
  for (const Mat& c : covs) {
    if (!c.isApprox(c.transpose(), 1e-9))
      throw Error(ErrorCode::DegenerateLaw, "covariance not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(c);
    if (es.eigenvalues().minCoeff() < -1e-8)
      throw Error(ErrorCode::DegenerateLaw, "covariance not positive semidefinite");
  }
  LawFlow f;
  f.kind = LawKind::Gaussian;
  f.grid = g;
  f.means = std::move(means);
  f.covs = std::move(covs);
  return f;
}

LawFlow LawFlow::empirical(TimeGrid g, std::vector<Mat> clouds) {
  if (static_cast<int>(clouds.size()) != g.n_points())
    throw Error(ErrorCode::GridMismatch, "empirical flow size does not match grid");
  Eigen::Index n = clouds.front().rows();
  for (const Mat& c : clouds)
    if (c.rows() != n)
      throw Error(ErrorCode::DegenerateLaw, "particle count varies across steps");
  LawFlow f;
  f.kind = LawKind::Empirical;
  f.grid = g;
  f.clouds = std::move(clouds);
  return f;
}

LawFlow LawFlow::constant_empirical(TimeGrid g, const Mat& cloud) {
  std::vector<Mat> clouds(g.n_points(), cloud);
  return empirical(g, std::move(clouds));
}

LawSnapshot LawFlow::at_step(int step) const {
  if (step < 0 || step >= grid.n_points())
    throw Error(ErrorCode::GridMismatch, "step outside law flow grid");
  if (kind == LawKind::Gaussian)
    return LawSnapshot::gaussian(means.row(step).transpose(), covs[step]);
  return LawSnapshot::empirical(clouds[step]);
}

}  // namespace chainsde
