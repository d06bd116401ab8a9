#include "doctest.h"

#include <cmath>

#include "chainsde/filter.hpp"
#include "chainsde/rng.hpp"
#include "chainsde/simulate.hpp"

using namespace chainsde;

namespace {

LawFlow oracle_mu(const ChainModel& model, const TimeGrid& grid) {
  return gaussian_chain_oracle(model, 1, grid).marginal_flow();
}

}  // namespace

TEST_CASE("filter rejects non-unit volatility") {
  ChainModel m = builtin_model("ou-chain");
  m.sigma = 2.0;
  TimeGrid grid{0.0, 1e-2, 10};
  CHECK_THROWS_AS(simulate_observation(m, 1, oracle_mu(builtin_model("ou-chain"), grid),
                                       grid, 1),
                  Error);
}

TEST_CASE("u=0: observation carries no information") {
  ChainModel m = builtin_model("ou-chain");
  m.u = 0.0;
  TimeGrid grid{0.0, 1e-3, 1000};
  GaussianLawFlow oracle = gaussian_chain_oracle(m, 1, grid);
  LawFlow mu = oracle.marginal_flow();
  ObservationBundle bundle = simulate_observation(m, 1, mu, grid, 71);
  const int n = 4000;
  FilterReport pf = particle_filter(m, bundle.obs, mu, n, 1,
                                    ResampleKind::Systematic, 0.5, 73);
  double prior_var = oracle.covs[1000](0, 0);
  double se_mean = std::sqrt(prior_var / n);
  CHECK(std::abs(pf.mean[1000] - oracle.level_means(1000, 0)) <= 3.0 * se_mean);
  CHECK(std::abs(pf.var[1000] - prior_var) <= 3.0 * prior_var * std::sqrt(2.0 / n));
  // Kalman gain vanishes too.
  KalmanResult kal = kalman_bucy(m, bundle.obs, 1);
  CHECK(kal.report.var[1000] == doctest::Approx(prior_var).epsilon(1e-9));
}

TEST_CASE("particle filter tracks the Kalman oracle") {
  ChainModel m = builtin_model("ou-chain");
  TimeGrid grid{0.0, 1e-3, 1000};
  LawFlow mu = oracle_mu(m, grid);
  ObservationBundle bundle = simulate_observation(m, 1, mu, grid, 79);
  FilterReport pf = particle_filter(m, bundle.obs, mu, 4000, 1,
                                    ResampleKind::Systematic, 0.5, 83);
  KalmanResult kal = kalman_bucy(m, bundle.obs, 1);
  double sq = 0.0, se2 = 0.0;
  for (int s = 0; s <= 1000; ++s) {
    double d = pf.mean[s] - kal.report.mean[s];
    sq += d * d;
    se2 += std::max(pf.var[s], 0.0) / std::max(pf.ess[s], 1.0);
  }
  double rms = std::sqrt(sq / 1001);
  double se = std::sqrt(se2 / 1001);
  CHECK(rms <= 3.0 * se);
  CHECK(pf.var.minCoeff() >= 0.0);
}

TEST_CASE("rho is a mean-one martingale under reference observations") {
  ChainModel m = builtin_model("ou-chain");
  TimeGrid grid{0.0, 1e-3, 500};
  LawFlow mu = oracle_mu(m, grid);
  const int reps = 100;
  Vec rho_quarter(reps), rho_half(reps);
  for (int r = 0; r < reps; ++r) {
    ObservationPath obs = simulate_reference_observation(m, grid, 1000 + r);
    FilterReport pf = particle_filter(m, obs, mu, 500, 1, ResampleKind::Systematic,
                                      0.5, 2000 + r);
    rho_quarter[r] = pf.rho1[250];
    rho_half[r] = pf.rho1[500];
  }
  for (const Vec* rho : {&rho_quarter, &rho_half}) {
    double mean = rho->mean();
    double se = std::sqrt((rho->array() - mean).square().sum() / (reps - 1) / reps);
    CHECK(std::abs(mean - 1.0) <= 3.0 * se);
  }
}

TEST_CASE("upstream observations shift rho but not the filter") {
  ChainModel m = builtin_model("ou-chain");
  TimeGrid grid{0.0, 1e-3, 400};
  LawFlow mu = oracle_mu(m, grid);
  // A 3-chain: levels 0 and 1 observed, level 2 hidden; the filter for level 2
  // given level 1 alone and given both observations agree on pi.
  ChainEnsemble ens = simulate_chain(m, 3, mu, grid, 1, 89);
  ObservationPath obs;
  obs.grid = grid;
  obs.values = ens.scalar_path(0, 1);
  obs.provenance = ObsProvenance::SimulatedUnderP;
  ObservationPath upstream;
  upstream.grid = grid;
  upstream.values = ens.scalar_path(0, 0);
  upstream.provenance = ObsProvenance::SimulatedUnderP;

  FilterReport plain = particle_filter(m, obs, mu, 800, 1, ResampleKind::Systematic,
                                       0.5, 97);
  FilterReport with_up = particle_filter(m, obs, mu, 800, 1, ResampleKind::Systematic,
                                         0.5, 97, {upstream});
  for (int s = 0; s <= 400; s += 50) {
    CHECK(with_up.mean[s] == doctest::Approx(plain.mean[s]).epsilon(1e-12));
    CHECK(with_up.var[s] == doctest::Approx(plain.var[s]).epsilon(1e-12));
  }
  CHECK(with_up.rho1[400] != doctest::Approx(plain.rho1[400]).epsilon(1e-12));
}

TEST_CASE("spde: zero drift solves the heat equation") {
  ChainModel m = builtin_model("zero");
  m.init = InitialLaw::dirac(0.0);
  Mesh1d mesh{-6.0, 6.0, 512};
  TimeGrid grid{0.0, 2e-4, 5000};
  Mat means = Mat::Zero(grid.n_points(), 1);
  std::vector<Mat> covs(grid.n_points(), Mat::Identity(1, 1));
  LawFlow mu = LawFlow::gaussian(grid, means, covs);
  ObservationPath obs = simulate_reference_observation(m, grid, 101);
  SpdeResult res = spde_solve(m, obs, mu, mesh);
  // Dirac start is widened to sd = 2*dy; fold that into the comparison.
  double var0 = 4.0 * mesh.dy() * mesh.dy();
  double worst = 0.0;
  for (int i = 0; i < mesh.n_nodes; ++i) {
    double y = mesh.node(i);
    double v = 1.0 + var0;
    double exact = std::exp(-0.5 * y * y / v) / std::sqrt(2.0 * M_PI * v);
    worst = std::max(worst, std::abs(res.final_density.values[i] - exact));
  }
  CHECK(worst <= 1e-3);
  CHECK(res.final_density.integral() == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("spde: u=0 linear model reproduces the prior Gaussian") {
  ChainModel m = builtin_model("ou-chain");
  m.u = 0.0;
  m.init = InitialLaw::gaussian(0.0, 1.0);
  TimeGrid grid{0.0, 2e-4, 2500};
  GaussianLawFlow oracle = gaussian_chain_oracle(m, 1, grid);
  LawFlow mu = oracle.marginal_flow();
  ObservationBundle bundle = simulate_observation(m, 1, mu, grid, 103);
  Mesh1d mesh{-6.0, 6.0, 512};
  SpdeResult res = spde_solve(m, bundle.obs, mu, mesh);
  CHECK(std::abs(res.report.mean[2500] - oracle.level_means(2500, 0)) <= 1e-3);
  CHECK(std::abs(res.report.var[2500] - oracle.covs[2500](0, 0)) <= 1e-3);
}

TEST_CASE("spde tracks the Kalman oracle") {
  ChainModel m = builtin_model("ou-chain");
  TimeGrid grid{0.0, 1e-4, 2000};
  LawFlow mu = oracle_mu(m, grid);
  ObservationBundle bundle = simulate_observation(m, 1, mu, grid, 107);
  // Wide enough that the N(0,1) prior tail stays below the leak tolerance.
  Mesh1d mesh{-7.0, 7.0, 256};
  SpdeResult res = spde_solve(m, bundle.obs, mu, mesh);
  KalmanResult kal = kalman_bucy(m, bundle.obs, 1);
  double sq = 0.0;
  for (int s = 0; s <= 2000; ++s) {
    double d = res.report.mean[s] - kal.report.mean[s];
    sq += d * d;
  }
  CHECK(std::sqrt(sq / 2001) <= 2e-2);
}

TEST_CASE("spde enforces the CFL bound") {
  ChainModel m = builtin_model("ou-chain");
  TimeGrid grid{0.0, 1e-3, 100};
  LawFlow mu = oracle_mu(m, grid);
  ObservationBundle bundle = simulate_observation(m, 1, mu, grid, 109);
  Mesh1d mesh{-6.0, 6.0, 512};  // needs dt <= 0.4*dy^2 ~ 2.2e-4
  CHECK_THROWS_AS(spde_solve(m, bundle.obs, mu, mesh), Error);
}

TEST_CASE("kalman: stationary Riccati variance") {
  ChainModel m;
  m.drift = PairwiseDrift::linear(0.0, -0.5, 0.5);
  m.u = 1.0;
  m.init = InitialLaw::gaussian(0.0, 1.0);
  TimeGrid grid{0.0, 1e-3, 20000};
  ObservationBundle bundle = simulate_observation(m, 1, oracle_mu(m, grid), grid, 113);
  KalmanResult kal = kalman_bucy(m, bundle.obs, 1);
  CHECK(std::abs(kal.report.var[20000] - 2.0 * (std::sqrt(2.0) - 1.0)) <= 1e-3);
}

TEST_CASE("kalman: innovations are white") {
  ChainModel m = builtin_model("ou-chain");
  TimeGrid grid{0.0, 1e-3, 20000};
  GaussianLawFlow oracle = gaussian_chain_oracle(m, 1, grid);
  ObservationBundle bundle = simulate_observation(m, 1, oracle.marginal_flow(), grid, 127);
  KalmanResult kal = kalman_bucy(m, bundle.obs, 1);
  const double a1n = m.drift.a1_neighbor, a1s = m.drift.a1_self;
  Vec innov(grid.n_steps);
  for (int s = 0; s < grid.n_steps; ++s) {
    double predicted = m.u * a1n * kal.means(s, 0) + a1s * bundle.obs.values[s] +
                       (1.0 - m.u) * a1n * oracle.marginal_mean[s];
    double dx = bundle.obs.values[s + 1] - bundle.obs.values[s];
    innov[s] = (dx - predicted * grid.dt) / std::sqrt(grid.dt);
  }
  double mean = innov.mean();
  double var = (innov.array() - mean).square().mean();
  double lag1 = 0.0;
  for (int s = 0; s + 1 < grid.n_steps; ++s)
    lag1 += (innov[s] - mean) * (innov[s + 1] - mean);
  lag1 /= (grid.n_steps - 1) * var;
  CHECK(std::abs(lag1) <= 3.0 / std::sqrt(static_cast<double>(grid.n_steps)));
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("kalman variance shrinks as coupling grows") {
  TimeGrid grid{0.0, 1e-3, 2000};
  double prev = 1e300;
  for (double u : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    ChainModel m = builtin_model("ou-chain");
    m.u = u;
    ObservationBundle bundle =
        simulate_observation(m, 1, oracle_mu(m, grid), grid, 131);
    KalmanResult kal = kalman_bucy(m, bundle.obs, 1);
    double v = kal.report.var[2000];
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
}

TEST_CASE("cross validation compares all three filters") {
  ChainModel m = builtin_model("ou-chain");
  TimeGrid grid{0.0, 2e-4, 1000};  // CFL-safe for the default 512-node mesh
  CrossValidateConfig cfg;
  cfg.n_particles = 2000;
  CrossValidation cv = cross_validate(m, grid, 137, cfg);
  CHECK(cv.rms_mean_particle_kalman <= 3.0 * cv.particle_mean_stderr);
  CHECK(cv.rms_mean_spde_kalman <= 2e-2);
}
