#pragma once

#include <Eigen/Dense>
#include <vector>

#include "chainsde/errors.hpp"
#include "chainsde/grid.hpp"

namespace chainsde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class LawKind { Gaussian, Empirical };

// Fixed-time marginal law, either Gaussian (mean, covariance) or an empirical
// particle cloud (rows are samples).
struct LawSnapshot {
  LawKind kind = LawKind::Gaussian;
  Vec mean;
  Mat cov;
  Mat particles;  // n_samples x dim, Empirical only

  static LawSnapshot gaussian(Vec m, Mat c) {
    LawSnapshot s;
    s.kind = LawKind::Gaussian;
    s.mean = std::move(m);
    s.cov = std::move(c);
    return s;
  }
  static LawSnapshot gaussian1d(double m, double var) {
    return gaussian(Vec::Constant(1, m), Mat::Constant(1, 1, var));
  }
  static LawSnapshot empirical(Mat p) {
    if (p.rows() < 1)
      throw Error(ErrorCode::DegenerateLaw, "empirical snapshot needs samples");
    LawSnapshot s;
    s.kind = LawKind::Empirical;
    s.particles = std::move(p);
    return s;
  }

  int dim() const {
    return kind == LawKind::Gaussian ? static_cast<int>(mean.size())
                                     : static_cast<int>(particles.cols());
  }

  Vec mean_vector() const {
    if (kind == LawKind::Gaussian) return mean;
    return particles.colwise().mean().transpose();
  }
};

// Time-indexed marginal law on a grid.
struct LawFlow {
  LawKind kind = LawKind::Gaussian;
  TimeGrid grid;
  // Gaussian: one row of means per step, one covariance per step.
  Mat means;                // (n_steps+1) x dim
  std::vector<Mat> covs;    // n_steps+1 entries
  // Empirical: one particle cloud per step, constant particle count.
  std::vector<Mat> clouds;  // n_steps+1 entries, each n x dim

  static LawFlow gaussian(TimeGrid g, Mat means, std::vector<Mat> covs);
  static LawFlow empirical(TimeGrid g, std::vector<Mat> clouds);
  // Law held constant in time (the Picard starting point).
  static LawFlow constant_empirical(TimeGrid g, const Mat& cloud);

  int dim() const {
    return kind == LawKind::Gaussian ? static_cast<int>(means.cols())
                                     : static_cast<int>(clouds.front().cols());
  }

  LawSnapshot at_step(int step) const;
  void require_grid(const TimeGrid& g) const {
    if (!(grid == g)) throw Error(ErrorCode::GridMismatch, "law flow grid differs");
  }
};

}  // namespace chainsde
