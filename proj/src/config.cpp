#include "chainsde/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace chainsde {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorCode::ConfigError, msg);
}

void require_keys(const json& obj, const std::string& path,
                  const std::set<std::string>& allowed) {
  if (!obj.is_object()) config_error(path + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      config_error("unknown key " + path + "." + it.key());
}

template <typename T>
T get_as(const json& obj, const std::string& path, const std::string& key) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    config_error("missing or ill-typed key " + path + "." + key);
  }
}

template <typename T>
T get_or(const json& obj, const std::string& path, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  return get_as<T>(obj, path, key);
}

PairwiseDrift parse_drift(const json& j) {
  require_keys(j, "model.drift", {"kind", "a0", "a1_self", "a1_neighbor", "scale"});
  std::string kind = get_as<std::string>(j, "model.drift", "kind");
  if (kind == "zero") return PairwiseDrift::zero();
  if (kind == "linear")
    return PairwiseDrift::linear(get_or(j, "model.drift", "a0", 0.0),
                                 get_or(j, "model.drift", "a1_self", 0.0),
                                 get_or(j, "model.drift", "a1_neighbor", 0.0));
  if (kind == "tanh") return PairwiseDrift::tanh(get_or(j, "model.drift", "scale", 1.0));
  config_error("model.drift.kind must be zero, linear or tanh");
}

ChainModel parse_model(const json& j) {
  require_keys(j, "model",
               {"name", "drift", "u", "sigma", "dim", "init", "closure"});
  ChainModel model;
  if (j.contains("name")) {
    try {
      model = builtin_model(get_as<std::string>(j, "model", "name"));
    } catch (const Error& e) {
      config_error(std::string("model.name: ") + e.what());
    }
  } else if (j.contains("drift")) {
    model.drift = parse_drift(j.at("drift"));
  } else {
    config_error("model needs either model.name or model.drift");
  }
  if (j.contains("drift") && j.contains("name"))
    config_error("model.name and model.drift are mutually exclusive");
  model.u = get_or(j, "model", "u", model.u);
  model.sigma = get_or(j, "model", "sigma", model.sigma);
  model.dim = get_or(j, "model", "dim", model.dim);
  if (j.contains("init")) {
    const json& init = j.at("init");
    require_keys(init, "model.init", {"kind", "mean", "var"});
    std::string kind = get_as<std::string>(init, "model.init", "kind");
    double mean = get_or(init, "model.init", "mean", 0.0);
    if (kind == "dirac") {
      model.init = InitialLaw::dirac(mean);
    } else if (kind == "gaussian") {
      double var = get_as<double>(init, "model.init", "var");
      if (var <= 0.0) config_error("model.init.var must be > 0");
      model.init = InitialLaw::gaussian(mean, var);
    } else {
      config_error("model.init.kind must be dirac or gaussian");
    }
  }
  if (j.contains("closure")) {
    const json& cl = j.at("closure");
    require_keys(cl, "model.closure", {"kind", "depth"});
    std::string kind = get_as<std::string>(cl, "model.closure", "kind");
    if (kind == "mean_field") {
      model.closure = ClosureSpec::mean_field(get_or(cl, "model.closure", "depth", 1));
    } else if (kind == "loop") {
      model.closure = ClosureSpec::loop();
    } else {
      config_error("model.closure.kind must be mean_field or loop");
    }
  }
  try {
    model.validate();
  } catch (const Error& e) {
    config_error(std::string("model: ") + e.what());
  }
  return model;
}

NumericConfig parse_numeric(const json& j) {
  require_keys(j, "numeric",
               {"t0", "dt", "n_steps", "n_paths", "depth", "n_particles", "n_iters",
                "replications", "k", "k_grid", "mesh", "ess_threshold", "times",
                "method", "report"});
  NumericConfig n;
  n.t0 = get_or(j, "numeric", "t0", n.t0);
  n.dt = get_or(j, "numeric", "dt", n.dt);
  n.n_steps = get_or(j, "numeric", "n_steps", n.n_steps);
  n.n_paths = get_or(j, "numeric", "n_paths", n.n_paths);
  n.depth = get_or(j, "numeric", "depth", n.depth);
  n.n_particles = get_or(j, "numeric", "n_particles", n.n_particles);
  n.n_iters = get_or(j, "numeric", "n_iters", n.n_iters);
  n.replications = get_or(j, "numeric", "replications", n.replications);
  n.k = get_or(j, "numeric", "k", n.k);
  n.k_grid = get_or(j, "numeric", "k_grid", n.k_grid);
  if (j.contains("mesh")) {
    const json& m = j.at("mesh");
    require_keys(m, "numeric.mesh", {"y_min", "y_max", "n_nodes"});
    n.mesh.y_min = get_as<double>(m, "numeric.mesh", "y_min");
    n.mesh.y_max = get_as<double>(m, "numeric.mesh", "y_max");
    n.mesh.n_nodes = get_as<int>(m, "numeric.mesh", "n_nodes");
    if (n.mesh.n_nodes < 8 || !(n.mesh.y_max > n.mesh.y_min))
      config_error("numeric.mesh is degenerate");
  }
  n.ess_threshold = get_or(j, "numeric", "ess_threshold", n.ess_threshold);
  n.times = get_or(j, "numeric", "times", n.times);
  n.method = get_or(j, "numeric", "method", n.method);
  n.report = get_or(j, "numeric", "report", n.report);
  if (n.dt <= 0.0 || n.n_steps < 1) config_error("numeric grid is degenerate");
  return n;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    config_error(std::string("invalid JSON: ") + e.what());
  }
  require_keys(root, "config",
               {"schema_version", "command", "model", "numeric", "seed", "output_dir"});
  RunConfig cfg;
  cfg.schema_version = get_as<int>(root, "config", "schema_version");
  if (cfg.schema_version != 1) config_error("unsupported schema_version");
  cfg.command = get_as<std::string>(root, "config", "command");
  static const std::set<std::string> commands = {"simulate", "picard", "filter",
                                                "estimate", "analyze", "accept"};
  if (!commands.count(cfg.command)) config_error("unknown command " + cfg.command);
  if (cfg.command != "accept") {
    if (!root.contains("model")) config_error("missing key model");
    cfg.model = parse_model(root.at("model"));
  } else if (root.contains("model")) {
    cfg.model = parse_model(root.at("model"));
  }
  if (root.contains("numeric")) cfg.numeric = parse_numeric(root.at("numeric"));
  if (root.contains("seed"))
    cfg.seed = get_as<std::uint64_t>(root, "config", "seed");
  cfg.output_dir = get_or<std::string>(root, "config", "output_dir", "");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace chainsde
