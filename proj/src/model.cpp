#include "chainsde/model.hpp"

#include <cmath>

namespace chainsde {
namespace {

// 64-point Gauss-Hermite rule (physicists' weight exp(-z^2)), built once by
// Golub-Welsch from the Jacobi matrix.
struct HermiteRule {
  Vec nodes;
  Vec weights;
  HermiteRule() {
    const int n = 64;
    Mat jacobi = Mat::Zero(n, n);
    for (int i = 1; i < n; ++i) {
      double off = std::sqrt(i / 2.0);
      jacobi(i, i - 1) = off;
      jacobi(i - 1, i) = off;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(jacobi);
    nodes = es.eigenvalues();
    weights.resize(n);
    const double sqrt_pi = std::sqrt(M_PI);
    for (int i = 0; i < n; ++i) {
      double v0 = es.eigenvectors()(0, i);
      weights[i] = sqrt_pi * v0 * v0;
    }
  }
};

const HermiteRule& hermite_rule() {
  static HermiteRule rule;
  return rule;
}

// Integral of f(y) against N(mean, var), scalar.
template <class F>
double gauss_hermite_expect(double mean, double var, F&& f) {
  const HermiteRule& rule = hermite_rule();
  const double s = std::sqrt(2.0 * std::max(var, 0.0));
  double acc = 0.0;
  for (int i = 0; i < rule.nodes.size(); ++i)
    acc += rule.weights[i] * f(mean + s * rule.nodes[i]);
  return acc / std::sqrt(M_PI);
}

void check_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw Error(ErrorCode::NonFiniteDrift, what);
}

}  // namespace

PairwiseDrift PairwiseDrift::zero(int dim) {
  PairwiseDrift d;
  d.kind = DriftKind::Zero;
  d.dim = dim;
  return d;
}

PairwiseDrift PairwiseDrift::linear(double a0, double a1_self, double a1_neighbor, int dim) {
  PairwiseDrift d;
  d.kind = DriftKind::Linear;
  d.dim = dim;
  d.a0 = a0;
  d.a1_self = a1_self;
  d.a1_neighbor = a1_neighbor;
  return d;
}

PairwiseDrift PairwiseDrift::tanh(double scale, int dim) {
  PairwiseDrift d;
  d.kind = DriftKind::Tanh;
  d.dim = dim;
  d.scale = scale;
  return d;
}

Vec PairwiseDrift::eval(double t, const Vec& x, const Vec& y) const {
  switch (kind) {
    case DriftKind::Zero:
      return Vec::Zero(dim);
    case DriftKind::Linear:
      return Vec::Constant(dim, a0) + a1_self * x + a1_neighbor * y;
    case DriftKind::Tanh:
      return scale * (y - x).array().tanh().matrix();
    case DriftKind::Custom: {
      Vec v = custom(t, x, y);
      check_finite(v, "custom drift returned non-finite value");
      return v;
    }
  }
  throw Error(ErrorCode::UnsupportedDrift, "unknown drift kind");
}

Mat PairwiseDrift::d_dx(double t, const Vec& x, const Vec& y) const {
  switch (kind) {
    case DriftKind::Zero:
      return Mat::Zero(dim, dim);
    case DriftKind::Linear:
      return a1_self * Mat::Identity(dim, dim);
    case DriftKind::Tanh: {
      // d/dx scale*tanh(y-x) = -scale*sech^2(y-x), diagonal.
      Vec sech2 = (1.0 - (y - x).array().tanh().square()).matrix();
      return (-scale * sech2).asDiagonal();
    }
    case DriftKind::Custom:
      if (!custom_dx)
        throw Error(ErrorCode::MissingDerivative, "custom drift has no d/dx");
      return custom_dx(t, x, y);
  }
  throw Error(ErrorCode::UnsupportedDrift, "unknown drift kind");
}

Mat PairwiseDrift::d_dy(double t, const Vec& x, const Vec& y) const {
  switch (kind) {
    case DriftKind::Zero:
      return Mat::Zero(dim, dim);
    case DriftKind::Linear:
      return a1_neighbor * Mat::Identity(dim, dim);
    case DriftKind::Tanh: {
      Vec sech2 = (1.0 - (y - x).array().tanh().square()).matrix();
      return (scale * sech2).asDiagonal();
    }
    case DriftKind::Custom:
      if (!custom_dy)
        throw Error(ErrorCode::MissingDerivative, "custom drift has no d/dy");
      return custom_dy(t, x, y);
  }
  throw Error(ErrorCode::UnsupportedDrift, "unknown drift kind");
}

bool PairwiseDrift::has_dx() const {
  return kind != DriftKind::Custom || static_cast<bool>(custom_dx);
}

double PairwiseDrift::lipschitz() const {
  switch (kind) {
    case DriftKind::Zero:
      return 0.0;
    case DriftKind::Linear:
      return std::max(std::abs(a1_self), std::abs(a1_neighbor));
    case DriftKind::Tanh:
      return std::abs(scale);
    case DriftKind::Custom:
      return custom_lipschitz;
  }
  return 0.0;
}

void ChainModel::validate() const {
  if (u < 0.0 || u > 1.0)
    throw Error(ErrorCode::InvalidArgument, "u must lie in [0, 1]");
  if (sigma <= 0.0)
    throw Error(ErrorCode::InvalidArgument, "sigma must be > 0");
  if (dim < 1 || drift.dim != dim)
    throw Error(ErrorCode::DimensionError, "model dim must be >= 1 and match drift dim");
}

Vec mean_field_drift(const ChainModel& model, double t, const Vec& x,
                     const LawSnapshot& law) {
  const PairwiseDrift& d = model.drift;
  if (d.kind == DriftKind::Zero) return Vec::Zero(model.dim);
  if (d.kind == DriftKind::Linear)
    return Vec::Constant(model.dim, d.a0) + d.a1_self * x +
           d.a1_neighbor * law.mean_vector();
  if (law.kind == LawKind::Empirical) {
    Vec acc = Vec::Zero(model.dim);
    for (Eigen::Index i = 0; i < law.particles.rows(); ++i)
      acc += d.eval(t, x, law.particles.row(i).transpose());
    Vec v = acc / static_cast<double>(law.particles.rows());
    check_finite(v, "empirical mean-field integral");
    return v;
  }
  // Gaussian law, nonlinear drift: quadrature, scalar only.
  if (model.dim != 1)
    throw Error(ErrorCode::DimensionError,
                "quadrature mean-field term supports dim 1 only");
  double val = gauss_hermite_expect(law.mean[0], law.cov(0, 0), [&](double y) {
    return d.eval(t, x, Vec::Constant(1, y))[0];
  });
  Vec v = Vec::Constant(1, val);
  check_finite(v, "quadrature mean-field integral");
  return v;
}

Mat mean_field_drift_dx(const ChainModel& model, double t, const Vec& x,
                        const LawSnapshot& law) {
  const PairwiseDrift& d = model.drift;
  if (d.kind == DriftKind::Zero) return Mat::Zero(model.dim, model.dim);
  if (d.kind == DriftKind::Linear)
    return d.a1_self * Mat::Identity(model.dim, model.dim);
  if (law.kind == LawKind::Empirical) {
    Mat acc = Mat::Zero(model.dim, model.dim);
    for (Eigen::Index i = 0; i < law.particles.rows(); ++i)
      acc += d.d_dx(t, x, law.particles.row(i).transpose());
    return acc / static_cast<double>(law.particles.rows());
  }
  if (model.dim != 1)
    throw Error(ErrorCode::DimensionError,
                "quadrature mean-field term supports dim 1 only");
  double val = gauss_hermite_expect(law.mean[0], law.cov(0, 0), [&](double y) {
    return d.d_dx(t, x, Vec::Constant(1, y))(0, 0);
  });
  return Mat::Constant(1, 1, val);
}

Vec eval_mixture_drift(const ChainModel& model, double t, const Vec& x,
                       const Vec& x_neighbor, const LawSnapshot& law) {
  Vec pairwise = model.drift.eval(t, x, x_neighbor);
  Vec mf = mean_field_drift(model, t, x, law);
  Vec v = model.u * pairwise + (1.0 - model.u) * mf;
  check_finite(v, "mixture drift");
  return v;
}

Mat eval_mixture_drift_dx(const ChainModel& model, double t, const Vec& x,
                          const Vec& x_neighbor, const LawSnapshot& law) {
  return model.u * model.drift.d_dx(t, x, x_neighbor) +
         (1.0 - model.u) * mean_field_drift_dx(model, t, x, law);
}

double pair_drift1(const ChainModel& model, double t, double x, double y) {
  const PairwiseDrift& d = model.drift;
  switch (d.kind) {
    case DriftKind::Zero: return 0.0;
    case DriftKind::Linear: return d.a0 + d.a1_self * x + d.a1_neighbor * y;
    case DriftKind::Tanh: return d.scale * std::tanh(y - x);
    case DriftKind::Custom:
      return d.custom(t, Vec::Constant(1, x), Vec::Constant(1, y))[0];
  }
  return 0.0;
}

double pair_drift1_dx(const ChainModel& model, double t, double x, double y) {
  const PairwiseDrift& d = model.drift;
  switch (d.kind) {
    case DriftKind::Zero: return 0.0;
    case DriftKind::Linear: return d.a1_self;
    case DriftKind::Tanh: {
      double th = std::tanh(y - x);
      return -d.scale * (1.0 - th * th);
    }
    case DriftKind::Custom:
      if (!d.custom_dx)
        throw Error(ErrorCode::MissingDerivative, "custom drift has no d/dx");
      return d.custom_dx(t, Vec::Constant(1, x), Vec::Constant(1, y))(0, 0);
  }
  return 0.0;
}

double mean_field_drift1(const ChainModel& model, double t, double x,
                         const LawSnapshot& law) {
  const PairwiseDrift& d = model.drift;
  if (d.kind == DriftKind::Zero) return 0.0;
  if (d.kind == DriftKind::Linear)
    return d.a0 + d.a1_self * x + d.a1_neighbor * law.mean_vector()[0];
  if (law.kind == LawKind::Empirical) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < law.particles.rows(); ++i)
      acc += pair_drift1(model, t, x, law.particles(i, 0));
    double v = acc / static_cast<double>(law.particles.rows());
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteDrift, "empirical mean-field integral");
    return v;
  }
  double v = gauss_hermite_expect(law.mean[0], law.cov(0, 0), [&](double y) {
    return pair_drift1(model, t, x, y);
  });
  if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteDrift, "quadrature mean-field integral");
  return v;
}

double mean_field_drift1_dx(const ChainModel& model, double t, double x,
                            const LawSnapshot& law) {
  const PairwiseDrift& d = model.drift;
  if (d.kind == DriftKind::Zero) return 0.0;
  if (d.kind == DriftKind::Linear) return d.a1_self;
  if (law.kind == LawKind::Empirical) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < law.particles.rows(); ++i)
      acc += pair_drift1_dx(model, t, x, law.particles(i, 0));
    return acc / static_cast<double>(law.particles.rows());
  }
  return gauss_hermite_expect(law.mean[0], law.cov(0, 0), [&](double y) {
    return pair_drift1_dx(model, t, x, y);
  });
}

ChainModel builtin_model(const std::string& name) {
  ChainModel m;
  if (name == "ou-chain") {
    m.drift = PairwiseDrift::linear(0.0, -0.5, 0.5);
    m.u = 0.5;
    m.sigma = 1.0;
    m.dim = 1;
    m.init = InitialLaw::gaussian(0.0, 1.0);
  } else if (name == "tanh-chain") {
    m.drift = PairwiseDrift::tanh(1.0);
    m.u = 0.5;
    m.sigma = 1.0;
    m.dim = 1;
    m.init = InitialLaw::dirac(0.0);
  } else if (name == "zero") {
    m.drift = PairwiseDrift::zero();
    m.u = 0.5;
    m.sigma = 1.0;
    m.dim = 1;
    m.init = InitialLaw::dirac(0.0);
  } else {
    throw Error(ErrorCode::UnknownModel, "no builtin model named '" + name + "'");
  }
  m.closure = ClosureSpec::mean_field();
  return m;
}

}  // namespace chainsde
