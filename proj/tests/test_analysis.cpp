#include "doctest.h"

#include <cmath>

#include "chainsde/analysis.hpp"
#include "chainsde/measure.hpp"
#include "chainsde/rng.hpp"

using namespace chainsde;

TEST_CASE("heat-kernel scaling constants") {
  ChainModel m = builtin_model("zero");
  ScalingReport rep = density_scaling_report(m, 0.0, {0.25, 1.0}, 50000, 173);
  const double c0 = 1.0 / std::sqrt(2.0 * M_PI);
  const double c1 = 1.0 / std::sqrt(2.0 * M_PI * std::exp(1.0));
  for (const ScalingRow& row : rep.rows) {
    if (row.order == 0) CHECK(std::abs(row.scaled - c0) <= 0.02);
    if (row.order == 1) CHECK(std::abs(row.scaled - c1) <= 0.02);
    CHECK(row.scaled >= 0.0);
    CHECK(std::isfinite(row.scaled));
  }
  // Pure Gaussian tail, so the log-quadratic fit is essentially perfect.
  CHECK(rep.tail_fit_r2 >= 0.98);
}

TEST_CASE("tanh-chain scaled suprema stay within a bounded band") {
  ChainModel m = builtin_model("tanh-chain");
  ScalingReport rep = density_scaling_report(m, 0.0, {0.25, 1.0}, 30000, 179);
  for (int order = 0; order <= 2; ++order) {
    double lo = 1e300, hi = 0.0;
    for (const ScalingRow& row : rep.rows)
      if (row.order == order) {
        lo = std::min(lo, row.scaled);
        hi = std::max(hi, row.scaled);
      }
    CHECK(hi <= 3.0 * lo);
  }
}

TEST_CASE("density report input guards") {
  ChainModel lin = builtin_model("ou-chain");
  CHECK_THROWS_AS(density_scaling_report(lin, 0.0, {0.5}, 10000, 1), Error);
  ChainModel m = builtin_model("zero");
  CHECK_THROWS_AS(density_scaling_report(m, 0.0, {0.5}, 100, 1), Error);
  CHECK_THROWS_AS(density_scaling_report(m, 0.0, {}, 10000, 1), Error);
}

TEST_CASE("mrf: independent Brownian levels have zero partial correlation") {
  ChainModel m = builtin_model("zero");
  m.init = InitialLaw::gaussian(0.0, 1.0);
  TimeGrid grid{0.0, 1e-2, 100};
  ChainModel lin = m;
  lin.drift = PairwiseDrift::linear(0.0, 0.0, 0.0);
  LawFlow mu = gaussian_chain_oracle(lin, 1, grid).marginal_flow();
  const int n = 10000;
  ChainEnsemble ens = simulate_chain(m, 3, mu, grid, n, 181);
  MrfReport rep = mrf_partial_correlation(ens, m, 100, 0, 1, 2, 0.99);
  CHECK(std::abs(rep.partial_corr) <= 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(rep.has_oracle);
  CHECK(rep.oracle_partial_corr == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("mrf: simulation agrees with the Gaussian oracle") {
  ChainModel m = builtin_model("ou-chain");
  TimeGrid grid{0.0, 1e-3, 1000};
  LawFlow mu = gaussian_chain_oracle(m, 5, grid).marginal_flow();
  ChainEnsemble ens = simulate_chain(m, 5, mu, grid, 10000, 191);
  MrfReport rep = mrf_partial_correlation(ens, m, 1000, 0, 1, 2, 0.99);
  CHECK(rep.has_oracle);
  CHECK(rep.oracle_partial_corr >= rep.ci_lo);
  CHECK(rep.oracle_partial_corr <= rep.ci_hi);
  CHECK(rep.partial_corr >= -1.0);
  CHECK(rep.partial_corr <= 1.0);
}

TEST_CASE("mrf: constant conditioning level is singular") {
  ChainEnsemble ens;
  ens.grid = TimeGrid{0.0, 0.5, 2};
  ens.depth = 3;
  ens.n_paths = 100;
  ens.dim = 1;
  ens.values.assign(static_cast<std::size_t>(100) * 3 * 3, 0.0);
  NormalStream rng(7, 3);
  for (int p = 0; p < 100; ++p)
    for (int s = 0; s < 3; ++s) {
      ens.at(p, 0, s) = rng.next();
      ens.at(p, 1, s) = 1.0;  // constant mid level
      ens.at(p, 2, s) = rng.next();
    }
  ChainModel m = builtin_model("tanh-chain");
  try {
    mrf_partial_correlation(ens, m, 2, 0, 1, 2, 0.99);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularConditioning);
  }
}

TEST_CASE("joint law carries no atoms") {
  ChainModel m = builtin_model("ou-chain");
  TimeGrid grid{0.0, 1e-3, 500};
  LawFlow mu = gaussian_chain_oracle(m, 1, grid).marginal_flow();
  ChainEnsemble ens = simulate_chain(m, 2, mu, grid, 20000, 193);
  double mass = joint_max_cell_mass(ens, 500, 0, 1);
  CHECK(mass <= 0.05);
  CHECK(mass > 0.0);
}
