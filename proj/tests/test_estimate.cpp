#include "doctest.h"

#include <cmath>

#include "chainsde/estimate.hpp"
#include "chainsde/simulate.hpp"

using namespace chainsde;

namespace {

LawFlow zero_mean_mu(const TimeGrid& grid) {
  Mat means = Mat::Zero(grid.n_points(), 1);
  std::vector<Mat> covs(grid.n_points(), Mat::Identity(1, 1));
  return LawFlow::gaussian(grid, means, covs);
}

MleInput hand_instance() {
  MleInput input;
  input.grid = TimeGrid{0.0, 1.0, 2};
  input.model.drift = PairwiseDrift::linear(0.0, -1.0, 1.0);
  input.model.u = 0.5;
  input.model.init = InitialLaw::gaussian(0.0, 1.0);
  input.mu = zero_mean_mu(input.grid);
  Vec p1(3), p2(3);
  p1 << 0, 1, 1;
  p2 << 2, 2, 2;
  input.paths = {p1, p2};
  return input;
}

}  // namespace

TEST_CASE("bbar: neighbor-free drift gives zero") {
  TimeGrid grid{0.0, 0.5, 4};
  ChainModel m;
  m.drift = PairwiseDrift::linear(0.3, -1.0, 0.0);
  LawFlow mu = zero_mean_mu(grid);
  Vec a = Vec::LinSpaced(grid.n_points(), 0.0, 1.0);
  Vec b = Vec::Constant(grid.n_points(), 2.0);
  Vec bb = bbar_path(a, b, m, mu);
  CHECK(bb.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("bbar: constant neighbor against a centered law") {
  TimeGrid grid{0.0, 0.5, 4};
  ChainModel m;
  m.drift = PairwiseDrift::linear(0.0, -1.0, 1.0);
  LawFlow mu = zero_mean_mu(grid);
  Vec a = Vec::Zero(grid.n_points());
  Vec b = Vec::Constant(grid.n_points(), 2.0);
  Vec bb = bbar_path(a, b, m, mu);
  for (int s = 0; s < grid.n_points(); ++s) CHECK(bb[s] == doctest::Approx(2.0));
}

TEST_CASE("bbar: second moment matches the oracle") {
  ChainModel m = builtin_model("ou-chain");
  TimeGrid grid{0.0, 1e-3, 1000};
  GaussianLawFlow oracle = gaussian_chain_oracle(m, 2, grid);
  LawFlow mu = oracle.marginal_flow();
  const int n = 10000;
  ChainEnsemble ens = simulate_chain(m, 2, mu, grid, n, 139);
  double acc = 0.0;
  for (int p = 0; p < n; ++p) {
    Vec bb = bbar_path(ens.scalar_path(p, 0), ens.scalar_path(p, 1), m, mu);
    acc += bb[1000] * bb[1000];
  }
  double got = acc / n;
  // b_bar = a1n * (X_next - m_t), so E[b_bar^2] = a1n^2 * Sigma(1).
  double target = 0.25 * oracle.covs[1000](1, 1);
  double se = target * std::sqrt(2.0 / n);  // chi-square spread
  CHECK(std::abs(got - target) <= 3.0 * se);
}

TEST_CASE("mle: hand instance is exact") {
  MleResult r = mle_u(hand_instance());
  CHECK(r.u_hat == 0.5);
  CHECK(r.sigma_k2 == 8.0);
  CHECK(r.numerator == 4.0);
}

TEST_CASE("mle: likelihood is maximal at the estimate") {
  MleInput input = hand_instance();
  MleResult r = mle_u(input);
  double at_hat = mle_loglikelihood(input, r.u_hat);
  CHECK(at_hat > mle_loglikelihood(input, r.u_hat + 0.01));
  CHECK(at_hat > mle_loglikelihood(input, r.u_hat - 0.01));
}

TEST_CASE("mle: neighbor-free drift is not identifiable") {
  MleInput input = hand_instance();
  input.model.drift = PairwiseDrift::linear(0.0, -1.0, 0.0);
  try {
    mle_u(input);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonIdentifiable);
  }
}

TEST_CASE("mle: fewer than two paths rejected") {
  MleInput input = hand_instance();
  input.paths.pop_back();
  CHECK_THROWS_AS(mle_u(input), Error);
}

TEST_CASE("mle: recovers u on simulated chains") {
  ChainModel m = builtin_model("ou-chain");
  TimeGrid grid{0.0, 1e-3, 1000};
  LawFlow mu = gaussian_chain_oracle(m, 1, grid).marginal_flow();
  const int k = 100;
  ChainEnsemble ens = simulate_chain(m, k, mu, grid, 1, 149);
  MleInput input;
  input.grid = grid;
  input.model = m;
  input.mu = mu;
  input.u_true = 0.5;
  for (int l = 0; l < k; ++l) input.paths.push_back(ens.scalar_path(0, l));
  MleResult r = mle_u(input);
  CHECK(std::abs(r.standardized) <= 3.0);
}

TEST_CASE("mle: estimator is equivariant under drift scaling") {
  // Scaling the pairwise drift by c rescales the information by c^2 but the
  // estimate stays centered at u.
  TimeGrid grid{0.0, 1e-3, 1000};
  const int k = 50;
  auto run = [&](double c, std::uint64_t seed) {
    ChainModel m;
    m.drift = PairwiseDrift::linear(0.0, -0.5 * c, 0.5 * c);
    m.u = 0.5;
    m.init = InitialLaw::gaussian(0.0, 1.0);
    LawFlow mu = gaussian_chain_oracle(m, 1, grid).marginal_flow();
    ChainEnsemble ens = simulate_chain(m, k, mu, grid, 1, seed);
    MleInput input;
    input.grid = grid;
    input.model = m;
    input.mu = mu;
    input.u_true = 0.5;
    for (int l = 0; l < k; ++l) input.paths.push_back(ens.scalar_path(0, l));
    return mle_u(input);
  };
  MleResult base = run(1.0, 151);
  MleResult scaled = run(2.0, 151);
  CHECK(std::abs(base.standardized) <= 4.0);
  CHECK(std::abs(scaled.standardized) <= 4.0);
  // Information scale: c^2 up to the change in the law of the paths.
  CHECK(scaled.sigma_k2 > 2.0 * base.sigma_k2);
}

TEST_CASE("clt diagnostic: standardized sample is centered and near normal") {
  ChainModel m = builtin_model("ou-chain");
  const int R = 100;
  CltReport rep = clt_diagnostic(m, 0.5, 30, 1.0, 2e-3, R, 157);
  CHECK(std::abs(rep.mean) <= 3.0 / std::sqrt(static_cast<double>(R)));
  CHECK(rep.variance == doctest::Approx(1.0).epsilon(0.5));
  CHECK(rep.ks_distance <= 1.5 * 1.36 / std::sqrt(static_cast<double>(R)));
}

TEST_CASE("clt diagnostic rejects nonlinear drift and tiny runs") {
  CHECK_THROWS_AS(clt_diagnostic(builtin_model("tanh-chain"), 0.5, 10, 0.5, 1e-2, 10, 1),
                  Error);
  CHECK_THROWS_AS(clt_diagnostic(builtin_model("ou-chain"), 0.5, 10, 0.5, 1e-2, 1, 1),
                  Error);
}

TEST_CASE("convergence table: rms decays roughly like k^(-1/2)") {
  ChainModel m = builtin_model("ou-chain");
  ConvergenceTable table = convergence_table(m, 0.5, {10, 40, 160}, 40, 1.0, 2e-3, 163);
  CHECK(table.rows[2].rms < table.rows[0].rms);
  CHECK(table.loglog_slope == doctest::Approx(-0.5).epsilon(0.6));
}

TEST_CASE("convergence table input guards") {
  ChainModel m = builtin_model("ou-chain");
  CHECK_THROWS_AS(convergence_table(m, 0.5, {}, 10, 0.5, 1e-2, 1), Error);
  CHECK_THROWS_AS(convergence_table(m, 0.5, {20, 10}, 10, 0.5, 1e-2, 1), Error);
}

TEST_CASE("endpoint values of u are recovered") {
  for (double u_true : {0.0, 1.0}) {
    ChainModel m = builtin_model("ou-chain");
    TimeGrid grid{0.0, 2e-3, 500};
    ChainModel mt = m;
    mt.u = u_true;
    LawFlow mu = gaussian_chain_oracle(mt, 1, grid).marginal_flow();
    const int k = 200;
    ChainEnsemble ens = simulate_chain(mt, k, mu, grid, 1, 167);
    MleInput input;
    input.grid = grid;
    input.model = mt;
    input.mu = mu;
    input.u_true = u_true;
    for (int l = 0; l < k; ++l) input.paths.push_back(ens.scalar_path(0, l));
    MleResult r = mle_u(input);
    // Asymptotic sd is about 1/sqrt(denom) ~ 0.14 at k=200, so test the
    // standardized statistic rather than a fixed absolute error.
    CHECK(std::abs(r.standardized) <= 3.0);
    CHECK(std::abs(r.u_hat - u_true) <= 0.5);
  }
}
