#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "chainsde/acceptance.hpp"
#include "chainsde/analysis.hpp"
#include "chainsde/config.hpp"
#include "chainsde/estimate.hpp"
#include "chainsde/filter.hpp"
#include "chainsde/io.hpp"
#include "chainsde/rng.hpp"

namespace {

namespace fs = std::filesystem;
using namespace chainsde;
using nlohmann::json;

constexpr const char* kVersion = "1.0.0";

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("CHAINSDE_LOG");
  if (!env) return LogLevel::Error;
  std::string v(env);
  if (v == "debug") return LogLevel::Debug;
  if (v == "info") return LogLevel::Info;
  return LogLevel::Error;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::cerr << "[info] " << msg << "\n";
}

// Marginal law used wherever a mu flow is needed: the Gaussian oracle for
// Linear (and Zero) drift, a converged Picard flow otherwise.
LawFlow make_mu(const ChainModel& model, const TimeGrid& grid,
                const NumericConfig& numeric, std::uint64_t seed) {
  if (model.drift.kind == DriftKind::Linear || model.drift.kind == DriftKind::Zero) {
    ChainModel m = model;
    if (m.drift.kind == DriftKind::Zero) m.drift = PairwiseDrift::linear(0, 0, 0);
    return gaussian_chain_oracle(m, 1, grid).marginal_flow();
  }
  log_info("deriving mu by Picard iteration");
  int n = std::max(numeric.n_particles, 2000);
  int iters = std::max(numeric.n_iters, 3);
  return picard_iterate(model, grid, n, iters, stream_id(0xC0, seed)).flows.back();
}

struct Manifest {
  json artifacts = json::array();

  void add(const fs::path& p) { artifacts.push_back(p.filename().string()); }
};

int run_command(const RunConfig& cfg, const fs::path& out_dir, std::uint64_t seed,
                const std::string& config_echo) {
  fs::create_directories(out_dir);
  auto t_start = std::chrono::steady_clock::now();
  Manifest manifest;
  TimeGrid grid = cfg.numeric.grid();
  int exit_code = 0;

  if (cfg.command == "simulate") {
    LawFlow mu = make_mu(cfg.model, grid, cfg.numeric, seed);
    ChainEnsemble ens = simulate_chain(cfg.model, cfg.numeric.depth, mu, grid,
                                       cfg.numeric.n_paths, seed);
    write_ensemble_csv(out_dir / "ensemble.csv", ens);
    write_ensemble_cache(out_dir / "ensemble.dcse", ens);
    manifest.add("ensemble.csv");
    manifest.add("ensemble.dcse");
  } else if (cfg.command == "picard") {
    PicardResult pic = picard_iterate(cfg.model, grid, cfg.numeric.n_particles,
                                      cfg.numeric.n_iters, seed);
    CsvTable table;
    table.header = {"j", "distance"};
    for (int j = 0; j < pic.distances.size(); ++j)
      table.add_row({static_cast<double>(j), pic.distances[j]});
    write_csv(out_dir / "picard_distances.csv", table);
    manifest.add("picard_distances.csv");
  } else if (cfg.command == "filter") {
    LawFlow mu = make_mu(cfg.model, grid, cfg.numeric, seed);
    ObservationBundle bundle =
        simulate_observation(cfg.model, cfg.numeric.depth, mu, grid, seed);
    write_observation_csv(out_dir / "observation.csv", bundle.obs);
    manifest.add("observation.csv");
    json summary;
    auto emit = [&](const std::string& name, const FilterReport& rep) {
      write_filter_report_csv(out_dir / (name + ".csv"), rep);
      manifest.add(name + ".csv");
      summary[name] = {{"final_mean", rep.mean[grid.n_steps]},
                       {"final_var", rep.var[grid.n_steps]},
                       {"mass_drift", rep.rho1[grid.n_steps] - 1.0}};
    };
    const std::string& method = cfg.numeric.method;
    if (method == "particle" || method == "all")
      emit("particle", particle_filter(cfg.model, bundle.obs, mu,
                                       cfg.numeric.n_particles, cfg.numeric.depth,
                                       ResampleKind::Systematic,
                                       cfg.numeric.ess_threshold, seed));
    if (method == "spde" || method == "all")
      emit("spde", spde_solve(cfg.model, bundle.obs, mu, cfg.numeric.mesh).report);
    if (method == "kalman" || method == "all")
      emit("kalman", kalman_bucy(cfg.model, bundle.obs, cfg.numeric.depth).report);
    if (summary.empty())
      throw Error(ErrorCode::ConfigError, "numeric.method must be particle, spde, kalman or all");
    std::ofstream(out_dir / "summary.json") << summary.dump(2) << "\n";
    manifest.add("summary.json");
  } else if (cfg.command == "estimate") {
    int k = cfg.numeric.k > 0 ? cfg.numeric.k : 100;
    int reps = std::max(cfg.numeric.replications, 2);
    CltReport rep = clt_diagnostic(cfg.model, cfg.model.u, k, grid.final_time(),
                                   grid.dt, reps, seed);
    CsvTable table;
    table.header = {"replication", "u_hat", "sigma_k2", "standardized"};
    for (int r = 0; r < reps; ++r)
      table.add_row({static_cast<double>(r), rep.u_hats[r], rep.sigma_k2s[r],
                     rep.standardized[r]});
    write_csv(out_dir / "estimates.csv", table);
    manifest.add("estimates.csv");
  } else if (cfg.command == "analyze") {
    const std::string& which = cfg.numeric.report;
    if (which == "scaling") {
      std::vector<double> times = cfg.numeric.times;
      if (times.empty()) times = {0.1, 0.25, 0.5, 1.0};
      ScalingReport rep = density_scaling_report(
          cfg.model, cfg.model.init.mean, times,
          std::max(cfg.numeric.n_paths, 1000), seed);
      CsvTable table;
      table.header = {"t", "order", "sup_raw", "scaled"};
      for (const ScalingRow& row : rep.rows)
        table.add_row({row.t, static_cast<double>(row.order), row.sup_raw, row.scaled});
      write_csv(out_dir / "scaling.csv", table);
      manifest.add("scaling.csv");
    } else if (which == "mrf") {
      int depth = std::max(cfg.numeric.depth, 3);
      LawFlow mu = make_mu(cfg.model, grid, cfg.numeric, seed);
      ChainEnsemble ens =
          simulate_chain(cfg.model, depth, mu, grid, cfg.numeric.n_paths, seed);
      MrfReport rep =
          mrf_partial_correlation(ens, cfg.model, grid.n_steps, 0, 1, 2, 0.99);
      CsvTable table;
      table.header = {"t", "partial_corr", "ci_lo", "ci_hi", "oracle_partial_corr",
                      "has_oracle"};
      table.add_row({rep.t, rep.partial_corr, rep.ci_lo, rep.ci_hi,
                     rep.oracle_partial_corr, rep.has_oracle ? 1.0 : 0.0});
      write_csv(out_dir / "mrf.csv", table);
      manifest.add("mrf.csv");
    } else if (which == "joint") {
      LawFlow mu = make_mu(cfg.model, grid, cfg.numeric, seed);
      ChainEnsemble ens = simulate_chain(cfg.model, std::max(cfg.numeric.depth, 2),
                                         mu, grid, cfg.numeric.n_paths, seed);
      double mass = joint_max_cell_mass(ens, grid.n_steps, 0, 1);
      CsvTable table;
      table.header = {"t", "max_cell_mass"};
      table.add_row({grid.final_time(), mass});
      write_csv(out_dir / "joint.csv", table);
      manifest.add("joint.csv");
    } else {
      throw Error(ErrorCode::ConfigError, "numeric.report must be scaling, mrf or joint");
    }
  } else if (cfg.command == "accept") {
    AcceptanceOptions opt;
    opt.out_dir = out_dir;
    opt.seed = seed;
    opt.log = &std::cout;
    std::vector<CriterionResult> results = run_acceptance(opt);
    CsvTable table;
    table.header = {"criterion", "name", "passed", "detail"};
    for (const CriterionResult& r : results)
      table.add_row(std::vector<std::string>{std::to_string(r.id), r.name,
                                             r.passed ? "1" : "0", r.detail});
    write_csv(out_dir / "acceptance.csv", table);
    manifest.add("acceptance.csv");
    if (!all_passed(results)) exit_code = 1;
  }

  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t_start)
                    .count();
  json m;
  m["version"] = kVersion;
  m["command"] = cfg.command;
  m["seed"] = seed;
  m["wall_time_seconds"] = wall;
  m["config"] = json::parse(config_echo);
  m["artifacts"] = manifest.artifacts;
  std::ofstream(out_dir / "manifest.json") << m.dump(2) << "\n";
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"directed chain SDE toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed_flag = 0;
  bool seed_given = false;
  int threads = 0;

  for (const char* name :
       {"simulate", "picard", "filter", "estimate", "analyze", "accept"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "config file (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option_function<std::uint64_t>(
        "--seed",
        [&](std::uint64_t v) {
          seed_flag = v;
          seed_given = true;
        },
        "seed override");
    sub->add_option("--threads", threads, "worker cap (determinism-preserving)");
  }

  CLI11_PARSE(app, argc, argv);
  std::string command = app.get_subcommands().front()->get_name();

  try {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "config error: cannot open " << config_path << "\n";
      return 2;
    }
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    RunConfig cfg = parse_config(text);
    if (cfg.command != command)
      throw Error(ErrorCode::ConfigError,
                  "config command '" + cfg.command + "' does not match subcommand");
    if (seed_given) cfg.seed = seed_flag;
    if (!cfg.seed)
      throw Error(ErrorCode::ConfigError, "missing key seed (config or --seed)");
    fs::path out = !out_dir.empty() ? fs::path(out_dir)
                   : !cfg.output_dir.empty()
                       ? fs::path(cfg.output_dir)
                       : fs::path("chainsde_out");
    log_info("running " + command + " into " + out.string());
    return run_command(cfg, out, *cfg.seed, text);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }
    std::cerr << "error (" << error_code_name(e.code()) << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
