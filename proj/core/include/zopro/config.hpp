#pragma once

#include "zopro/harness.hpp"
#include "zopro/solvers.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace zopro {

// JSON forms mirror the configuration file layout:
//   [experiment]  name, n_nodes, avg_degree, lambda, vary, dim, ...
//   [algo]        rho, c_armijo, ...; [algo.smoothing], [algo.d_policy]
// Unknown keys are parameter errors.
nlohmann::json to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_from_json(const nlohmann::json& j);
AlgoConfig algo_config_from_json(const nlohmann::json& j, AlgoConfig base = {});

// Parses the declarative key = value format (TOML).
ExperimentSpec parse_experiment_config(const std::string& text,
                                       const std::string& source = "<config>");
// .json files are read as JSON, anything else as TOML.
ExperimentSpec load_experiment_config(const std::filesystem::path& path);

}  // namespace zopro
