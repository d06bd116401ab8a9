#pragma once

#include <functional>
#include <string>

#include "chainsde/law.hpp"

namespace chainsde {

enum class DriftKind { Zero, Linear, Tanh, Custom };

// Pairwise drift b~(t, x, y) acting on a particle x and its neighbor y.
struct PairwiseDrift {
  DriftKind kind = DriftKind::Zero;
  int dim = 1;
  // Linear: a0 + a1_self*x + a1_neighbor*y, componentwise.
  double a0 = 0.0;
  double a1_self = 0.0;
  double a1_neighbor = 0.0;
  // Tanh: scale * tanh(y - x), componentwise.
  double scale = 1.0;
  // Custom: user callable with a declared (trusted) Lipschitz constant and
  // optional derivatives in x and y.
  std::function<Vec(double, const Vec&, const Vec&)> custom;
  std::function<Mat(double, const Vec&, const Vec&)> custom_dx;
  std::function<Mat(double, const Vec&, const Vec&)> custom_dy;
  double custom_lipschitz = 0.0;

  static PairwiseDrift zero(int dim = 1);
  static PairwiseDrift linear(double a0, double a1_self, double a1_neighbor, int dim = 1);
  static PairwiseDrift tanh(double scale, int dim = 1);

  Vec eval(double t, const Vec& x, const Vec& y) const;
  // Jacobians in x and y; MissingDerivative for Custom without callables.
  Mat d_dx(double t, const Vec& x, const Vec& y) const;
  Mat d_dy(double t, const Vec& x, const Vec& y) const;
  bool has_dx() const;
  // Lipschitz constant in (x, y), exact for the built-in kinds.
  double lipschitz() const;
};

enum class InitKind { Dirac, Gaussian };

struct InitialLaw {
  InitKind kind = InitKind::Dirac;
  double mean = 0.0;
  double var = 0.0;  // Gaussian only

  static InitialLaw dirac(double x) { return {InitKind::Dirac, x, 0.0}; }
  static InitialLaw gaussian(double mean, double var) {
    if (var <= 0.0) throw Error(ErrorCode::InvalidArgument, "init var must be > 0");
    return {InitKind::Gaussian, mean, var};
  }
};

enum class ClosureKind { MeanField, FrozenLaw, Loop };

struct ClosureSpec {
  ClosureKind kind = ClosureKind::MeanField;
  int depth = 1;           // MeanField truncation depth
  LawFlow frozen;          // FrozenLaw only (empirical flows)

  static ClosureSpec mean_field(int depth = 1) {
    ClosureSpec c;
    c.kind = ClosureKind::MeanField;
    c.depth = depth;
    return c;
  }
  static ClosureSpec frozen_law(LawFlow flow) {
    ClosureSpec c;
    c.kind = ClosureKind::FrozenLaw;
    c.frozen = std::move(flow);
    return c;
  }
  static ClosureSpec loop() {
    ClosureSpec c;
    c.kind = ClosureKind::Loop;
    return c;
  }
};

// Directed chain model: each particle drifts with the u-mixture of the
// pairwise term against its neighbor and the mean-field term against the
// common marginal law. Constant scalar diffusion sigma.
struct ChainModel {
  PairwiseDrift drift;
  double u = 0.5;
  double sigma = 1.0;
  int dim = 1;
  InitialLaw init;
  ClosureSpec closure;

  void validate() const;
};

// Mean-field part: integral of b~(t, x, .) against the law snapshot.
// Closed form for Linear drift against any law; Gauss-Hermite quadrature for
// other drifts against Gaussian laws; sample mean for empirical laws.
Vec mean_field_drift(const ChainModel& model, double t, const Vec& x,
                     const LawSnapshot& law);

// Jacobian in x of the mean-field part.
Mat mean_field_drift_dx(const ChainModel& model, double t, const Vec& x,
                        const LawSnapshot& law);

// Mixture drift b(t, x, F) with F = u*delta_neighbor + (1-u)*law.
Vec eval_mixture_drift(const ChainModel& model, double t, const Vec& x,
                       const Vec& x_neighbor, const LawSnapshot& law);

// Jacobian in x of the mixture drift.
Mat eval_mixture_drift_dx(const ChainModel& model, double t, const Vec& x,
                          const Vec& x_neighbor, const LawSnapshot& law);

// Scalar fast paths (dim == 1), allocation-free in the hot loops.
double pair_drift1(const ChainModel& model, double t, double x, double y);
double pair_drift1_dx(const ChainModel& model, double t, double x, double y);
double mean_field_drift1(const ChainModel& model, double t, double x,
                         const LawSnapshot& law);
double mean_field_drift1_dx(const ChainModel& model, double t, double x,
                            const LawSnapshot& law);

// Built-in models: "ou-chain", "tanh-chain", "zero".
ChainModel builtin_model(const std::string& name);

}  // namespace chainsde
