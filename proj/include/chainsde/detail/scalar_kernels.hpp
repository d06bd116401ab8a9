#pragma once

#include <cmath>
#include <vector>

#include "chainsde/model.hpp"
#include "chainsde/rng.hpp"

namespace chainsde::detail {

constexpr double kBlowup = 1e8;

inline double init_sample(const InitialLaw& init, NormalStream& stream) {
  if (init.kind == InitKind::Dirac) return init.mean;
  return init.mean + std::sqrt(init.var) * stream.next();
}

// Scalar mean-field term with an optional per-step interpolation table; the
// table pays off when the drift is nonlinear and many particles query the
// same snapshot.
class MeanField1 {
 public:
  MeanField1(const ChainModel& model, double t, LawSnapshot snap, int expected_queries)
      : model_(model), t_(t), snap_(std::move(snap)) {
    if (model.drift.kind == DriftKind::Zero || model.drift.kind == DriftKind::Linear) {
      linear_ = true;
      if (model.drift.kind == DriftKind::Linear) {
        const PairwiseDrift& d = model.drift;
        lin_c_ = d.a0 + d.a1_neighbor * snap_.mean_vector()[0];
        lin_s_ = d.a1_self;
      }
      return;
    }
    if (snap_.kind == LawKind::Empirical && snap_.particles.rows() > 512) {
      // Thin the cloud for integration; strided subsample keeps determinism.
      Eigen::Index n = snap_.particles.rows();
      Eigen::Index stride = (n + 511) / 512;
      Mat thin((n + stride - 1) / stride, 1);
      Eigen::Index j = 0;
      for (Eigen::Index i = 0; i < n; i += stride) thin(j++, 0) = snap_.particles(i, 0);
      snap_ = LawSnapshot::empirical(thin.topRows(j));
    }
    if (expected_queries > 2048) build_table();
  }

  double operator()(double x) const {
    if (linear_) return lin_c_ + lin_s_ * x;
    if (tabulated_ && x >= table_lo_ && x <= table_hi_) {
      double s = (x - table_lo_) / table_dx_;
      int i = static_cast<int>(s);
      if (i >= static_cast<int>(table_.size()) - 1) i = static_cast<int>(table_.size()) - 2;
      double w = s - i;
      return (1.0 - w) * table_[i] + w * table_[i + 1];
    }
    return mean_field_drift1(model_, t_, x, snap_);
  }

  // Derivative in x against the same (possibly thinned) snapshot the drift
  // uses, so finite differences of the drift and this derivative agree.
  double dx(double x) const {
    if (linear_) return lin_s_;
    return mean_field_drift1_dx(model_, t_, x, snap_);
  }

 private:
  void build_table() {
    double mean, sd;
    if (snap_.kind == LawKind::Gaussian) {
      mean = snap_.mean[0];
      sd = std::sqrt(std::max(snap_.cov(0, 0), 0.0));
    } else {
      mean = snap_.particles.col(0).mean();
      sd = std::sqrt((snap_.particles.col(0).array() - mean).square().mean());
    }
    table_lo_ = mean - 10.0 * sd - 6.0;
    table_hi_ = mean + 10.0 * sd + 6.0;
    const int n = 1025;
    table_dx_ = (table_hi_ - table_lo_) / (n - 1);
    table_.resize(n);
    for (int i = 0; i < n; ++i)
      table_[i] = mean_field_drift1(model_, t_, table_lo_ + i * table_dx_, snap_);
    tabulated_ = true;
  }

  const ChainModel& model_;
  double t_;
  LawSnapshot snap_;
  bool linear_ = false;
  double lin_c_ = 0.0, lin_s_ = 0.0;
  bool tabulated_ = false;
  double table_lo_ = 0.0, table_hi_ = 0.0, table_dx_ = 1.0;
  std::vector<double> table_;
};

}  // namespace chainsde::detail
