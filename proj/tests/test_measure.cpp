#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chainsde/measure.hpp"
#include "chainsde/rng.hpp"
#include "chainsde/simulate.hpp"

using namespace chainsde;

namespace {

EmpiricalMeasure scalars(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return EmpiricalMeasure::from_scalar(v);
}

// Exhaustive assignment search: the true W2 between equal-size unweighted
// scalar clouds, minimized over all pairings.
double w2_bruteforce(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  const int n = a.size();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = a.samples(i, 0) - b.samples(perm[i], 0);
      acc += d * d;
    }
    best = std::min(best, acc);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best / n);
}

Vec normal_samples(int n, std::uint64_t seed) {
  NormalStream rng(seed, 1);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.next();
  return v;
}

}  // namespace

TEST_CASE("w2 basics") {
  CHECK(w2_1d(scalars({0, 1, 2}), scalars({0, 1, 2})) == doctest::Approx(0.0));
  CHECK(w2_1d(scalars({0}), scalars({1})) == doctest::Approx(1.0));
  CHECK(w2_1d(scalars({0, 1}), scalars({0, 2})) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("w2 rejects multivariate input") {
  EmpiricalMeasure a;
  a.samples = Mat::Zero(3, 2);
  CHECK_THROWS_AS(w2_1d(a, a), Error);
}

TEST_CASE("w2 axioms and assignment oracle on small random instances") {
  NormalStream rng(42, 7);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 2 + trial % 5;  // up to 6
    Vec a(n), b(n), c(n);
    for (int i = 0; i < n; ++i) {
      a[i] = rng.next();
      b[i] = rng.next();
      c[i] = rng.next();
    }
    auto A = EmpiricalMeasure::from_scalar(a);
    auto B = EmpiricalMeasure::from_scalar(b);
    auto C = EmpiricalMeasure::from_scalar(c);
    double ab = w2_1d(A, B), ba = w2_1d(B, A);
    double ac = w2_1d(A, C), cb = w2_1d(C, B);
    CHECK(ab >= 0.0);
    CHECK(ab == doctest::Approx(ba));
    CHECK(w2_1d(A, A) == doctest::Approx(0.0));
    CHECK(ab <= ac + cb + 1e-12);
    CHECK(ab == doctest::Approx(w2_bruteforce(A, B)).epsilon(1e-10));
  }
}

TEST_CASE("path metric basics") {
  TimeGrid grid{0.0, 0.1, 10};
  std::vector<Vec> a(50), b(50), c(50);
  NormalStream rng(3, 9);
  for (int p = 0; p < 50; ++p) {
    a[p] = Vec::Zero(grid.n_points());
    for (int m = 0; m < grid.n_steps; ++m)
      a[p][m + 1] = a[p][m] + std::sqrt(grid.dt) * rng.next();
    b[p] = a[p];
    c[p] = a[p].array() + 2.0;
  }
  CHECK(path_metric_Dt(a, b, grid.n_steps) == doctest::Approx(0.0));
  CHECK(path_metric_Dt(a, c, grid.n_steps) == doctest::Approx(1.0));
  // Monotone in t.
  double prev = 0.0;
  for (int s = 0; s <= grid.n_steps; ++s) {
    std::vector<Vec> shifted = a;
    double d = path_metric_Dt(a, c, s);
    CHECK(d >= prev - 1e-12);
    prev = d;
  }
}

TEST_CASE("path metric self-consistency across seeds") {
  // Two independent Brownian ensembles; the distance concentrates, so two
  // runs with different seeds agree closely.
  TimeGrid grid{0.0, 1e-2, 100};
  auto make_pair = [&](std::uint64_t seed) {
    std::vector<Vec> x(10000), y(10000);
    for (int p = 0; p < 10000; ++p) {
      NormalStream ra(seed, 2 * p), rb(seed, 2 * p + 1);
      x[p] = Vec::Zero(grid.n_points());
      y[p] = Vec::Zero(grid.n_points());
      for (int m = 0; m < grid.n_steps; ++m) {
        x[p][m + 1] = x[p][m] + std::sqrt(grid.dt) * ra.next();
        y[p][m + 1] = y[p][m] + std::sqrt(grid.dt) * rb.next();
      }
    }
    return path_metric_Dt(x, y, grid.n_steps);
  };
  double d1 = make_pair(101), d2 = make_pair(202);
  CHECK(std::abs(d1 - d2) <= 0.02);
}

TEST_CASE("path metric pairing errors") {
  std::vector<Vec> a(3, Vec::Zero(5)), b(4, Vec::Zero(5));
  CHECK_THROWS_AS(path_metric_Dt(a, b, 4), Error);
  std::vector<Vec> c(3, Vec::Zero(6));
  CHECK_THROWS_AS(path_metric_Dt(a, c, 4), Error);
}

TEST_CASE("kde recovers the standard normal density and its slope") {
  Vec samples = normal_samples(100000, 11);
  EmpiricalMeasure em = EmpiricalMeasure::from_scalar(samples);
  Mesh1d mesh{-4.0, 4.0, 401};
  DensityCurve p0 = kde(em, mesh, Bandwidth::silverman_rule(), 0);
  // The derivative estimator is noisier; give it more samples.
  EmpiricalMeasure big = EmpiricalMeasure::from_scalar(normal_samples(1000000, 12));
  DensityCurve p1 = kde(big, mesh, Bandwidth::silverman_rule(), 1);
  int mid = 200;  // y = 0
  CHECK(p0.values[mid] == doctest::Approx(0.39894).epsilon(0.03));
  CHECK(std::abs(p1.values[mid]) <= 0.01);
  CHECK(p0.integral() == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("kde error shrinks with sample size") {
  Mesh1d mesh{-3.0, 3.0, 301};
  auto max_err = [&](int n) {
    EmpiricalMeasure em = EmpiricalMeasure::from_scalar(normal_samples(n, 13));
    DensityCurve p = kde(em, mesh, Bandwidth::silverman_rule(), 0);
    double worst = 0.0;
    for (int i = 0; i < mesh.n_nodes; ++i) {
      double y = mesh.node(i);
      double exact = std::exp(-0.5 * y * y) / std::sqrt(2.0 * M_PI);
      worst = std::max(worst, std::abs(p.values[i] - exact));
    }
    return worst;
  };
  CHECK(max_err(100000) < max_err(10000));
}

TEST_CASE("kde input guards") {
  EmpiricalMeasure small = EmpiricalMeasure::from_scalar(normal_samples(50, 17));
  Mesh1d mesh{-3.0, 3.0, 64};
  CHECK_THROWS_AS(kde(small, mesh, Bandwidth::silverman_rule(), 0), Error);
  EmpiricalMeasure mid = EmpiricalMeasure::from_scalar(normal_samples(500, 17));
  CHECK_THROWS_AS(kde(mid, mesh, Bandwidth::silverman_rule(), 2), Error);
  EmpiricalMeasure big = EmpiricalMeasure::from_scalar(normal_samples(2000, 17));
  CHECK_THROWS_AS(kde(big, mesh, Bandwidth::fixed(-1.0), 0), Error);
}

TEST_CASE("oracle: pure diffusion variance is 1 + t") {
  ChainModel m;
  m.drift = PairwiseDrift::linear(0.0, 0.0, 0.0);
  m.u = 0.5;
  m.init = InitialLaw::gaussian(0.0, 1.0);
  TimeGrid grid{0.0, 1e-3, 1000};
  GaussianLawFlow flow = gaussian_chain_oracle(m, 1, grid);
  for (int s : {0, 250, 500, 1000})
    CHECK(flow.covs[s](0, 0) == doctest::Approx(1.0 + grid.time(s)).epsilon(1e-10));
}

TEST_CASE("oracle: u=0 OU started at stationarity stays there") {
  ChainModel m;
  m.drift = PairwiseDrift::linear(0.0, -0.5, 0.5);
  m.u = 0.0;
  m.init = InitialLaw::gaussian(0.0, 1.0);  // 1 = sigma^2 / (2*0.5)
  TimeGrid grid{0.0, 1e-3, 1000};
  GaussianLawFlow flow = gaussian_chain_oracle(m, 1, grid);
  CHECK(flow.covs[1000](0, 0) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("oracle: cross covariance matches brute-force Monte Carlo") {
  ChainModel m = builtin_model("ou-chain");
  TimeGrid grid{0.0, 1e-3, 1000};
  GaussianLawFlow oracle = gaussian_chain_oracle(m, 3, grid);
  const int n = 20000;
  ChainEnsemble ens = simulate_chain(m, 3, oracle.marginal_flow(), grid, n, 777);
  Vec x0 = ens.level_at_step(0, 1000).col(0);
  Vec x1 = ens.level_at_step(1, 1000).col(0);
  double cov = ((x0.array() - x0.mean()) * (x1.array() - x1.mean())).sum() / (n - 1);
  const Mat& S = oracle.covs[1000];
  double se = std::sqrt((S(0, 0) * S(1, 1) + S(0, 1) * S(0, 1)) / n);
  CHECK(std::abs(cov - S(0, 1)) <= 3.0 * se);
}

TEST_CASE("oracle rejects unsupported models") {
  ChainModel m = builtin_model("tanh-chain");
  TimeGrid grid{0.0, 1e-2, 10};
  CHECK_THROWS_AS(gaussian_chain_oracle(m, 1, grid), Error);
}
