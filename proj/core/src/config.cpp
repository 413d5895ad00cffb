#include "zopro/config.hpp"

#include <toml.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace zopro {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ParameterError(where + " must be a table");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ParameterError("unknown key '" + key + "' in " + where);
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParameterError("invalid value for '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const std::string& key, T& out, const std::string& where) {
  if (j.contains(key)) out = get<T>(j, key, where);
}

// Scalars are accepted where a list is expected.
template <typename T>
void read_list(const json& j, const std::string& key, std::vector<T>& out,
               const std::string& where) {
  if (!j.contains(key)) return;
  if (j.at(key).is_array())
    out = get<std::vector<T>>(j, key, where);
  else
    out = {get<T>(j, key, where)};
}

}  // namespace

AlgoConfig algo_config_from_json(const json& j, AlgoConfig cfg) {
  const std::string where = "[algo]";
  check_keys(j,
             {"rho", "c_armijo", "shrink", "max_backtracks", "max_iterations", "slope_mode",
              "descent_fallback", "merit", "fd_epsilon", "init_scale", "trace_mode", "smoothing",
              "d_policy", "stop"},
             where);
  read(j, "rho", cfg.rho, where);
  read(j, "c_armijo", cfg.c_armijo, where);
  read(j, "shrink", cfg.shrink, where);
  read(j, "max_backtracks", cfg.max_backtracks, where);
  read(j, "max_iterations", cfg.max_iterations, where);
  read(j, "fd_epsilon", cfg.fd_epsilon, where);
  read(j, "init_scale", cfg.init_scale, where);
  if (j.contains("slope_mode")) cfg.slope_mode = parse_slope_mode(get<std::string>(j, "slope_mode", where));
  if (j.contains("descent_fallback"))
    cfg.descent_fallback = parse_descent_fallback(get<std::string>(j, "descent_fallback", where));
  if (j.contains("merit")) cfg.merit = parse_line_search_merit(get<std::string>(j, "merit", where));
  if (j.contains("trace_mode")) cfg.trace_mode = parse_trace_mode(get<std::string>(j, "trace_mode", where));

  if (j.contains("smoothing")) {
    const auto& s = j.at("smoothing");
    const std::string w = "[algo.smoothing]";
    check_keys(s, {"mu", "batch", "direction_mode", "rng_seed"}, w);
    read(s, "mu", cfg.smoothing.mu, w);
    read(s, "batch", cfg.smoothing.batch, w);
    read(s, "rng_seed", cfg.smoothing.rng_seed, w);
    if (s.contains("direction_mode"))
      cfg.smoothing.direction_mode = parse_direction_mode(get<std::string>(s, "direction_mode", w));
  }
  if (j.contains("d_policy")) {
    const auto& d = j.at("d_policy");
    const std::string w = "[algo.d_policy]";
    check_keys(d, {"kind", "tau", "theta", "eta", "headroom"}, w);
    if (d.contains("kind")) cfg.d_policy.kind = parse_d_policy(get<std::string>(d, "kind", w));
    read(d, "tau", cfg.d_policy.tau, w);
    read(d, "theta", cfg.d_policy.theta, w);
    read(d, "eta", cfg.d_policy.eta, w);
    read(d, "headroom", cfg.d_policy.headroom, w);
  }
  if (j.contains("stop")) {
    const auto& s = j.at("stop");
    const std::string w = "[algo.stop]";
    check_keys(s, {"tol", "window"}, w);
    StopRule rule;
    read(s, "tol", rule.tol, w);
    read(s, "window", rule.window, w);
    cfg.stop = rule;
  }
  cfg.validate();
  return cfg;
}

json to_json(const ExperimentSpec& spec) {
  std::vector<std::string> algos;
  for (auto a : spec.algorithms) algos.push_back(to_string(a));
  json algo = to_json(spec.algo);
  algo.erase("stop");
  return {{"experiment",
           {{"name", spec.name},
            {"n_nodes", spec.n_nodes},
            {"avg_degree", spec.avg_degree},
            {"lambda", spec.lambda},
            {"vary", to_string(spec.vary)},
            {"dim", spec.dim},
            {"samples_per_node", spec.samples_per_node},
            {"problem", to_string(spec.problem)},
            {"quad_curvature", spec.quad_curvature},
            {"quad_spread", spec.quad_spread},
            {"topology", to_string(spec.topology)},
            {"weights", to_string(spec.weights)},
            {"scenarios", spec.scenarios},
            {"base_seed", spec.base_seed},
            {"algorithms", algos},
            {"tol", spec.tol},
            {"window", spec.window},
            {"early_stop", spec.early_stop},
            {"accuracy_levels", spec.accuracy_levels}}},
          {"algo", algo}};
}

ExperimentSpec experiment_from_json(const json& j) {
  check_keys(j, {"experiment", "algo"}, "configuration");
  ExperimentSpec spec;
  if (j.contains("experiment")) {
    const auto& e = j.at("experiment");
    const std::string w = "[experiment]";
    check_keys(e,
               {"name", "n_nodes", "avg_degree", "lambda", "vary", "dim", "samples_per_node",
                "problem", "quad_curvature", "quad_spread", "topology", "weights", "scenarios", "base_seed",
                "algorithms", "tol", "window", "early_stop", "accuracy_levels"},
               w);
    read(e, "name", spec.name, w);
    read_list(e, "n_nodes", spec.n_nodes, w);
    read_list(e, "avg_degree", spec.avg_degree, w);
    read_list(e, "lambda", spec.lambda, w);
    if (e.contains("vary")) spec.vary = parse_sweep_axis(get<std::string>(e, "vary", w));
    read(e, "dim", spec.dim, w);
    read(e, "samples_per_node", spec.samples_per_node, w);
    if (e.contains("problem")) spec.problem = parse_problem_kind(get<std::string>(e, "problem", w));
    read_list(e, "quad_curvature", spec.quad_curvature, w);
    read(e, "quad_spread", spec.quad_spread, w);
    if (e.contains("topology")) spec.topology = parse_topology(get<std::string>(e, "topology", w));
    if (e.contains("weights")) spec.weights = parse_weight_policy(get<std::string>(e, "weights", w));
    read(e, "scenarios", spec.scenarios, w);
    read(e, "base_seed", spec.base_seed, w);
    if (e.contains("algorithms")) {
      std::vector<std::string> names;
      read_list(e, "algorithms", names, w);
      spec.algorithms.clear();
      for (const auto& n : names) spec.algorithms.push_back(parse_algorithm(n));
    }
    read(e, "tol", spec.tol, w);
    read(e, "window", spec.window, w);
    read(e, "early_stop", spec.early_stop, w);
    read_list(e, "accuracy_levels", spec.accuracy_levels, w);
  }
  if (j.contains("algo")) spec.algo = algo_config_from_json(j.at("algo"));
  spec.validate();
  return spec;
}

ExperimentSpec parse_experiment_config(const std::string& text, const std::string& source) {
  toml::table tbl;
  try {
    tbl = toml::parse(text, source);
  } catch (const toml::parse_error& err) {
    std::ostringstream msg;
    msg << source << ":" << err.source().begin.line << ":" << err.source().begin.column << ": "
        << err.description();
    throw ParameterError(msg.str());
  }
  std::ostringstream os;
  os << toml::json_formatter{tbl};
  return experiment_from_json(json::parse(os.str()));
}

ExperimentSpec load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  if (path.extension() == ".json") {
    json j;
    try {
      j = json::parse(buf.str());
    } catch (const json::parse_error& err) {
      throw ParameterError(path.string() + ": " + err.what());
    }
    return experiment_from_json(j);
  }
  return parse_experiment_config(buf.str(), path.string());
}

}  // namespace zopro
