#include "chainsde/acceptance.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "chainsde/analysis.hpp"
#include "chainsde/estimate.hpp"
#include "chainsde/filter.hpp"
#include "chainsde/io.hpp"
#include "chainsde/rng.hpp"

namespace chainsde {
namespace {

namespace fs = std::filesystem;

struct Ctx {
  fs::path dir;
  std::uint64_t seed;
};

std::string num(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

// --- criterion 1: Picard contraction -------------------------------------

CriterionResult criterion_picard(const Ctx& ctx) {
  ChainModel model = builtin_model("ou-chain");
  TimeGrid grid{0.0, 1e-3, 1000};
  PicardResult pic = picard_iterate(model, grid, 10000, 6, ctx.seed);

  CsvTable table;
  table.header = {"j", "distance"};
  for (int j = 0; j < pic.distances.size(); ++j)
    table.add_row({static_cast<double>(j), pic.distances[j]});
  write_csv(ctx.dir / "c1_picard.csv", table);

  bool nonincreasing = true;
  for (int j = 1; j + 1 <= 4; ++j)
    if (pic.distances[j + 1] > pic.distances[j] * (1.0 + 1e-9)) nonincreasing = false;
  bool decayed = pic.distances[4] <= 0.1 * pic.distances[1];
  CriterionResult r{1, "picard contraction", nonincreasing && decayed,
                    "D1=" + num(pic.distances[1]) + " D4=" + num(pic.distances[4])};
  return r;
}

// --- criterion 2: Gaussian oracle equivalence -----------------------------

CriterionResult criterion_oracle(const Ctx& ctx) {
  ChainModel model = builtin_model("ou-chain");
  TimeGrid grid{0.0, 1e-3, 1000};
  const int depth = 3, n = 10000;
  GaussianLawFlow oracle = gaussian_chain_oracle(model, depth, grid);
  ChainEnsemble ens =
      simulate_chain(model, depth, oracle.marginal_flow(), grid, n, ctx.seed);

  CsvTable table;
  table.header = {"t", "quantity", "sim", "oracle", "stderr", "z"};
  double worst = 0.0;
  for (int step : {500, 1000}) {
    Mat cols(n, depth);
    for (int l = 0; l < depth; ++l) cols.col(l) = ens.level_at_step(l, step).col(0);
    const Mat& S = oracle.covs[step];
    for (int i = 0; i < depth; ++i) {
      double sim_mean = cols.col(i).mean();
      double se = std::sqrt(S(i, i) / n);
      double z = (sim_mean - oracle.level_means(step, i)) / se;
      worst = std::max(worst, std::abs(z));
      table.add_row(std::vector<std::string>{
          format_double(grid.time(step)), "mean_" + std::to_string(i),
          format_double(sim_mean), format_double(oracle.level_means(step, i)),
          format_double(se), format_double(z)});
    }
    Vec means = cols.colwise().mean().transpose();
    for (int i = 0; i < depth; ++i) {
      for (int j = i; j < depth; ++j) {
        double cov = ((cols.col(i).array() - means[i]) *
                      (cols.col(j).array() - means[j]))
                         .sum() /
                     (n - 1);
        // Gaussian sampling variance of a covariance entry.
        double se = std::sqrt((S(i, i) * S(j, j) + S(i, j) * S(i, j)) / n);
        double z = (cov - S(i, j)) / se;
        worst = std::max(worst, std::abs(z));
        table.add_row(std::vector<std::string>{
            format_double(grid.time(step)),
            "cov_" + std::to_string(i) + "_" + std::to_string(j),
            format_double(cov), format_double(S(i, j)), format_double(se),
            format_double(z)});
      }
    }
  }
  write_csv(ctx.dir / "c2_oracle.csv", table);
  return {2, "gaussian oracle equivalence", worst <= 3.0, "max |z|=" + num(worst)};
}

// --- criterion 3: flow property ------------------------------------------

CriterionResult criterion_flow(const Ctx& ctx) {
  ChainModel model = builtin_model("ou-chain");
  TimeGrid grid{0.0, 1e-3, 1000};
  GaussianLawFlow oracle = gaussian_chain_oracle(model, 1, grid);
  FlowCheckReport rep = flow_check(model, oracle.marginal_flow(), grid, 0.0, 0.5,
                                   1.0, 0.0, 20000, ctx.seed);
  CsvTable table;
  table.header = {"mean_direct", "mean_restart", "var_direct", "var_restart",
                  "z_mean", "z_var"};
  table.add_row({rep.mean_direct, rep.mean_restart, rep.var_direct, rep.var_restart,
                 rep.standardized_mean_diff, rep.standardized_var_diff});
  write_csv(ctx.dir / "c3_flow.csv", table);
  bool ok = std::abs(rep.standardized_mean_diff) <= 3.0 &&
            std::abs(rep.standardized_var_diff) <= 3.0;
  return {3, "flow property", ok,
          "z_mean=" + num(rep.standardized_mean_diff) +
              " z_var=" + num(rep.standardized_var_diff)};
}

// --- criterion 4: pathwise sensitivity ------------------------------------

CriterionResult criterion_sensitivity(const Ctx& ctx) {
  TimeGrid grid{0.0, 1e-3, 1000};
  CsvTable table;
  table.header = {"model", "quantity", "value"};

  ChainModel ou = builtin_model("ou-chain");
  GaussianLawFlow oracle = gaussian_chain_oracle(ou, 1, grid);
  SensitivityEnsemble sens =
      pathwise_sensitivity(ou, oracle.marginal_flow(), 0.0, grid, 64, ctx.seed);
  double j_ou = sens.jacobians.col(grid.n_steps).mean();
  double err_ou = std::abs(j_ou - std::exp(-0.5));
  table.add_row(std::vector<std::string>{"ou-chain", "J(1)", format_double(j_ou)});
  table.add_row(
      std::vector<std::string>{"ou-chain", "abs_error", format_double(err_ou)});

  ChainModel tanh_m = builtin_model("tanh-chain");
  PicardResult pic = picard_iterate(tanh_m, grid, 4000, 3, stream_id(0x71, ctx.seed));
  const LawFlow& law = pic.flows.back();
  const double x = 0.3, h = 1e-4;
  const int n = 200;
  SensitivityEnsemble st =
      pathwise_sensitivity(tanh_m, law, x, grid, n, stream_id(0x72, ctx.seed));
  Mat up = simulate_x_process(tanh_m, law, x + h, grid, n, stream_id(0x72, ctx.seed));
  Mat dn = simulate_x_process(tanh_m, law, x - h, grid, n, stream_id(0x72, ctx.seed));
  double worst_rel = 0.0;
  for (int p = 0; p < n; ++p) {
    double fd = (up(p, grid.n_steps) - dn(p, grid.n_steps)) / (2.0 * h);
    double jv = st.jacobians(p, grid.n_steps);
    worst_rel = std::max(worst_rel, std::abs(jv - fd) / std::max(std::abs(fd), 1e-8));
  }
  table.add_row(std::vector<std::string>{"tanh-chain", "max_rel_fd_error",
                                         format_double(worst_rel)});
  write_csv(ctx.dir / "c4_sensitivity.csv", table);

  bool ok = err_ou <= 1e-3 && worst_rel <= 1e-3;
  return {4, "pathwise sensitivity", ok,
          "ou err=" + num(err_ou) + " tanh rel=" + num(worst_rel)};
}

// --- criterion 5: filter triangle -----------------------------------------

CriterionResult criterion_filter(const Ctx& ctx) {
  ChainModel model = builtin_model("ou-chain");
  const int reps = 20;

  // Particle filter vs Kalman on a dt=1e-3 grid.
  TimeGrid coarse{0.0, 1e-3, 1000};
  GaussianLawFlow oc = gaussian_chain_oracle(model, 1, coarse);
  LawFlow mu_c = oc.marginal_flow();
  double acc_sq = 0.0, acc_se2 = 0.0;
  int n_terms = 0;
  CsvTable table;
  table.header = {"rep", "rms_pf_kalman", "pf_stderr", "rms_spde_kalman"};
  std::vector<double> spde_rms(reps, 0.0);
  for (int r = 0; r < reps; ++r) {
    ObservationBundle bundle =
        simulate_observation(model, 1, mu_c, coarse, stream_id(0x81, ctx.seed, r));
    FilterReport pf =
        particle_filter(model, bundle.obs, mu_c, 10000, 1, ResampleKind::Systematic,
                        0.5, stream_id(0x82, ctx.seed, r));
    KalmanResult kal = kalman_bucy(model, bundle.obs, 1);
    double sq = 0.0, se2 = 0.0;
    for (int s = 0; s <= coarse.n_steps; ++s) {
      double d = pf.mean[s] - kal.report.mean[s];
      sq += d * d;
      se2 += std::max(pf.var[s], 0.0) / std::max(pf.ess[s], 1.0);
      ++n_terms;
    }
    acc_sq += sq;
    acc_se2 += se2;
    double rep_rms = std::sqrt(sq / (coarse.n_steps + 1));
    double rep_se = std::sqrt(se2 / (coarse.n_steps + 1));
    table.add_row({static_cast<double>(r), rep_rms, rep_se, 0.0});
  }
  double rms_pf = std::sqrt(acc_sq / n_terms);
  double se_pf = std::sqrt(acc_se2 / n_terms);

  // SPDE vs Kalman on a dt=1e-4 grid (CFL for the 512-node mesh).
  TimeGrid fine{0.0, 1e-4, 10000};
  GaussianLawFlow of = gaussian_chain_oracle(model, 1, fine);
  LawFlow mu_f = of.marginal_flow();
  Mesh1d mesh{-6.5, 6.5, 512};
  double worst_spde = 0.0;
  for (int r = 0; r < reps; ++r) {
    ObservationBundle bundle =
        simulate_observation(model, 1, mu_f, fine, stream_id(0x83, ctx.seed, r));
    SpdeResult spde = spde_solve(model, bundle.obs, mu_f, mesh);
    KalmanResult kal = kalman_bucy(model, bundle.obs, 1);
    double sq = 0.0;
    for (int s = 0; s <= fine.n_steps; ++s) {
      double d = spde.report.mean[s] - kal.report.mean[s];
      sq += d * d;
    }
    spde_rms[r] = std::sqrt(sq / (fine.n_steps + 1));
    worst_spde = std::max(worst_spde, spde_rms[r]);
    table.rows[r][3] = format_double(spde_rms[r]);
  }
  write_csv(ctx.dir / "c5_filter.csv", table);

  // Mass martingale under reference-measure observations.
  const int rho_reps = 200;
  Vec rho(rho_reps);
  for (int r = 0; r < rho_reps; ++r) {
    ObservationPath obs =
        simulate_reference_observation(model, coarse, stream_id(0x84, ctx.seed, r));
    FilterReport pf = particle_filter(model, obs, mu_c, 1000, 1, ResampleKind::Systematic,
                                      0.5, stream_id(0x85, ctx.seed, r));
    rho[r] = pf.rho1[coarse.n_steps];
  }
  double rho_mean = rho.mean();
  double rho_se =
      std::sqrt((rho.array() - rho_mean).square().sum() / (rho_reps - 1) / rho_reps);
  CsvTable rho_table;
  rho_table.header = {"rep", "rho_T"};
  for (int r = 0; r < rho_reps; ++r)
    rho_table.add_row({static_cast<double>(r), rho[r]});
  write_csv(ctx.dir / "c5_rho.csv", rho_table);

  bool ok = rms_pf <= 3.0 * se_pf && worst_spde <= 2e-2 &&
            std::abs(rho_mean - 1.0) <= 3.0 * rho_se;
  return {5, "filter triangle", ok,
          "pf_rms=" + num(rms_pf) + " (3se=" + num(3.0 * se_pf) +
              ") spde_rms_max=" + num(worst_spde) + " rho=" + num(rho_mean) +
              "+-" + num(rho_se)};
}

// --- criterion 6: Kalman stationary variance ------------------------------

CriterionResult criterion_riccati(const Ctx& ctx) {
  ChainModel model;
  model.drift = PairwiseDrift::linear(0.0, -0.5, 0.5);
  model.u = 1.0;
  model.sigma = 1.0;
  model.init = InitialLaw::gaussian(0.0, 1.0);
  TimeGrid grid{0.0, 1e-3, 20000};
  GaussianLawFlow oracle = gaussian_chain_oracle(model, 1, grid);
  ObservationBundle bundle =
      simulate_observation(model, 1, oracle.marginal_flow(), grid, ctx.seed);
  KalmanResult kal = kalman_bucy(model, bundle.obs, 1);
  double v = kal.report.var[grid.n_steps];
  double target = 2.0 * (std::sqrt(2.0) - 1.0);
  CsvTable table;
  table.header = {"T", "variance", "target"};
  table.add_row({grid.final_time(), v, target});
  write_csv(ctx.dir / "c6_riccati.csv", table);
  double err = std::abs(v - target);
  return {6, "kalman stationary variance", err <= 1e-3,
          "var=" + num(v) + " err=" + num(err)};
}

// --- criterion 7: MLE correctness -----------------------------------------

CriterionResult criterion_mle(const Ctx& ctx) {
  // Hand instance: dt=1, two steps, pairwise drift y - x, marginal mean 0.
  MleInput hand;
  hand.grid = TimeGrid{0.0, 1.0, 2};
  hand.model.drift = PairwiseDrift::linear(0.0, -1.0, 1.0);
  hand.model.u = 0.5;
  hand.model.init = InitialLaw::gaussian(0.0, 1.0);
  Mat means = Mat::Zero(3, 1);
  std::vector<Mat> covs(3, Mat::Identity(1, 1));
  hand.mu = LawFlow::gaussian(hand.grid, means, covs);
  Vec p1(3), p2(3);
  p1 << 0, 1, 1;
  p2 << 2, 2, 2;
  hand.paths = {p1, p2};
  MleResult hr = mle_u(hand);
  bool hand_ok = hr.u_hat == 0.5 && hr.sigma_k2 == 8.0 && hr.numerator == 4.0;

  // Simulated chain, k=200.
  ChainModel model = builtin_model("ou-chain");
  TimeGrid grid{0.0, 1e-3, 1000};
  LawFlow mu = gaussian_chain_oracle(model, 1, grid).marginal_flow();
  ChainEnsemble ens = simulate_chain(model, 200, mu, grid, 1, ctx.seed);
  MleInput input;
  input.grid = grid;
  input.model = model;
  input.mu = mu;
  input.u_true = 0.5;
  for (int l = 0; l < 200; ++l) input.paths.push_back(ens.scalar_path(0, l));
  MleResult res = mle_u(input);
  bool sim_ok = std::abs(res.standardized) <= 3.0;

  CsvTable table;
  table.header = {"case", "u_hat", "sigma_k2", "standardized"};
  table.add_row(std::vector<std::string>{"hand", format_double(hr.u_hat),
                                         format_double(hr.sigma_k2), "0"});
  table.add_row(std::vector<std::string>{
      "ou-chain-k200", format_double(res.u_hat), format_double(res.sigma_k2),
      format_double(res.standardized)});
  write_csv(ctx.dir / "c7_mle.csv", table);

  return {7, "mle correctness", hand_ok && sim_ok,
          "hand u=" + num(hr.u_hat) + " sim u=" + num(res.u_hat) +
              " z=" + num(res.standardized)};
}

// --- criterion 8: CLT and convergence rate --------------------------------

CriterionResult criterion_clt(const Ctx& ctx) {
  ChainModel model = builtin_model("ou-chain");
  const int R = 500;
  CltReport clt = clt_diagnostic(model, 0.5, 100, 1.0, 1e-3, R, ctx.seed);
  CsvTable table;
  table.header = {"rep", "u_hat", "sigma_k2", "standardized"};
  for (int r = 0; r < R; ++r)
    table.add_row({static_cast<double>(r), clt.u_hats[r], clt.sigma_k2s[r],
                   clt.standardized[r]});
  write_csv(ctx.dir / "c8_clt.csv", table);

  ConvergenceTable conv =
      convergence_table(model, 0.5, {25, 100, 400}, 100, 1.0, 1e-3,
                        stream_id(0x91, ctx.seed));
  CsvTable ct;
  ct.header = {"k", "rms"};
  for (const ConvergenceRow& row : conv.rows)
    ct.add_row({static_cast<double>(row.k), row.rms});
  write_csv(ctx.dir / "c8_convergence.csv", ct);

  double mean_bound = 3.0 / std::sqrt(static_cast<double>(R));
  double ks_bound = 1.5 * 1.36 / std::sqrt(static_cast<double>(R));
  bool ok = std::abs(clt.mean) <= mean_bound && clt.ks_distance <= ks_bound &&
            std::abs(conv.loglog_slope + 0.5) <= 0.15;
  return {8, "mle clt and rate", ok,
          "mean=" + num(clt.mean) + " ks=" + num(clt.ks_distance) +
              " slope=" + num(conv.loglog_slope)};
}

// --- criterion 9: density scaling -----------------------------------------

CriterionResult criterion_scaling(const Ctx& ctx) {
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * M_PI);
  const double inv_sqrt_2pie = 1.0 / std::sqrt(2.0 * M_PI * std::exp(1.0));

  ChainModel zero = builtin_model("zero");
  ScalingReport zr =
      density_scaling_report(zero, 0.0, {0.25, 1.0}, 100000, ctx.seed);
  bool zero_ok = true;
  for (const ScalingRow& row : zr.rows) {
    if (row.order == 0) zero_ok = zero_ok && std::abs(row.scaled - inv_sqrt_2pi) <= 0.02;
    if (row.order == 1) zero_ok = zero_ok && std::abs(row.scaled - inv_sqrt_2pie) <= 0.02;
  }

  ChainModel tanh_m = builtin_model("tanh-chain");
  ScalingReport tr = density_scaling_report(tanh_m, 0.0, {0.1, 0.25, 0.5, 1.0},
                                            100000, stream_id(0xA1, ctx.seed));
  bool tanh_ok = true;
  for (int order = 0; order <= 2; ++order) {
    double lo = 1e300, hi = 0.0;
    for (const ScalingRow& row : tr.rows)
      if (row.order == order) {
        lo = std::min(lo, row.scaled);
        hi = std::max(hi, row.scaled);
      }
    if (hi > 3.0 * lo) tanh_ok = false;
  }
  bool tail_ok = tr.tail_fit_r2 >= 0.98;

  CsvTable table;
  table.header = {"model", "t", "order", "sup_raw", "scaled"};
  auto emit = [&](const char* name, const ScalingReport& rep) {
    for (const ScalingRow& row : rep.rows)
      table.add_row(std::vector<std::string>{
          name, format_double(row.t), std::to_string(row.order),
          format_double(row.sup_raw), format_double(row.scaled)});
  };
  emit("zero", zr);
  emit("tanh-chain", tr);
  table.add_row(std::vector<std::string>{"tanh-chain", "0.25", "tail_r2",
                                         format_double(tr.tail_fit_r2), ""});
  write_csv(ctx.dir / "c9_scaling.csv", table);

  return {9, "density scaling", zero_ok && tanh_ok && tail_ok,
          std::string("zero=") + (zero_ok ? "ok" : "FAIL") + " tanh_ratio=" +
              (tanh_ok ? "ok" : "FAIL") + " tail_r2=" + num(tr.tail_fit_r2)};
}

// --- criterion 10: MRF report ---------------------------------------------

CriterionResult criterion_mrf(const Ctx& ctx) {
  ChainModel model = builtin_model("ou-chain");
  TimeGrid grid{0.0, 1e-3, 1000};
  LawFlow mu = gaussian_chain_oracle(model, 5, grid).marginal_flow();
  ChainEnsemble ens = simulate_chain(model, 5, mu, grid, 10000, ctx.seed);
  MrfReport rep = mrf_partial_correlation(ens, model, grid.n_steps, 0, 1, 2, 0.99);

  CsvTable table;
  table.header = {"t", "partial_corr", "ci_lo", "ci_hi", "oracle_partial_corr"};
  table.add_row({rep.t, rep.partial_corr, rep.ci_lo, rep.ci_hi,
                 rep.oracle_partial_corr});
  write_csv(ctx.dir / "c10_mrf.csv", table);

  bool ok = rep.has_oracle && rep.oracle_partial_corr >= rep.ci_lo &&
            rep.oracle_partial_corr <= rep.ci_hi;
  return {10, "mrf partial correlation", ok,
          "sim=" + num(rep.partial_corr) + " oracle=" + num(rep.oracle_partial_corr) +
              " ci=[" + num(rep.ci_lo) + "," + num(rep.ci_hi) + "]"};
}

std::vector<CriterionResult> run_pass(const fs::path& dir, std::uint64_t seed,
                                      std::ostream* log) {
  fs::create_directories(dir);
  Ctx ctx{dir, seed};
  std::vector<CriterionResult> results;
  auto run = [&](CriterionResult (*fn)(const Ctx&)) {
    CriterionResult r = fn(ctx);
    if (log)
      *log << "criterion " << r.id << " (" << r.name << "): "
           << (r.passed ? "PASS" : "FAIL") << " [" << r.detail << "]\n"
           << std::flush;
    results.push_back(std::move(r));
  };
  run(criterion_picard);
  run(criterion_oracle);
  run(criterion_flow);
  run(criterion_sensitivity);
  run(criterion_filter);
  run(criterion_riccati);
  run(criterion_mle);
  run(criterion_clt);
  run(criterion_scaling);
  run(criterion_mrf);
  return results;
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  std::ostringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  return sa.str() == sb.str();
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options) {
  fs::path run1 = options.out_dir / "run1";
  fs::path run2 = options.out_dir / "run2";
  std::vector<CriterionResult> results = run_pass(run1, options.seed, options.log);
  if (options.log) *options.log << "repeating criteria 1-10 for determinism\n" << std::flush;
  run_pass(run2, options.seed, nullptr);

  CriterionResult det{11, "determinism", true, ""};
  int mismatches = 0;
  for (const auto& entry : fs::directory_iterator(run1)) {
    fs::path other = run2 / entry.path().filename();
    if (!fs::exists(other) || !same_bytes(entry.path(), other)) {
      ++mismatches;
      det.detail += entry.path().filename().string() + " ";
    }
  }
  det.passed = mismatches == 0;
  det.detail = det.passed ? "all artifacts byte-identical"
                          : ("mismatched: " + det.detail);
  if (options.log)
    *options.log << "criterion 11 (determinism): " << (det.passed ? "PASS" : "FAIL")
                 << " [" << det.detail << "]\n"
                 << std::flush;
  results.push_back(std::move(det));
  return results;
}

bool all_passed(const std::vector<CriterionResult>& results) {
  for (const CriterionResult& r : results)
    if (!r.passed) return false;
  return true;
}

}  // namespace chainsde
