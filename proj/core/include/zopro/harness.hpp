#pragma once

#include "zopro/analysis.hpp"
#include "zopro/common.hpp"
#include "zopro/graph.hpp"
#include "zopro/objectives.hpp"
#include "zopro/run_record.hpp"
#include "zopro/solvers.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace zopro {

enum class Algorithm { ZoPro, SoPro };
Algorithm parse_algorithm(const std::string& name);
std::string to_string(Algorithm a);

enum class Topology { Random, Ring, Path, Complete };
Topology parse_topology(const std::string& name);
std::string to_string(Topology t);

enum class ProblemKind { Logistic, Quadratic };
ProblemKind parse_problem_kind(const std::string& name);
std::string to_string(ProblemKind k);

// Which triplet axes vary across the sweep.
enum class SweepAxis { Auto, Nodes, AvgDegree, Lambda, Grid };
SweepAxis parse_sweep_axis(const std::string& name);
std::string to_string(SweepAxis a);

// One (N, d_a, lambda) triplet.
struct ScenarioPoint {
  int n_nodes = 10;
  double avg_degree = 4.0;
  double lambda = 1.0;
};

struct ExperimentSpec {
  std::string name = "experiment";
  std::vector<int> n_nodes{10};
  std::vector<double> avg_degree{4.0};
  std::vector<double> lambda{1.0};
  // Auto: at most one list may have more than one entry. Grid: Cartesian
  // product. A named axis must be the only list with several entries.
  SweepAxis vary = SweepAxis::Auto;
  int dim = 5;
  int samples_per_node = 5;
  ProblemKind problem = ProblemKind::Logistic;
  // Quadratic problems: diagonal curvature shared by all nodes (length dim,
  // or one value broadcast) and the spread of the node centers. lambda is
  // added to the curvature, so it still acts as a convexity parameter.
  std::vector<double> quad_curvature{1.0};
  double quad_spread = 1.0;
  // Random uses avg_degree; the fixed topologies ignore it.
  Topology topology = Topology::Random;
  WeightPolicy weights = WeightPolicy::Uniform;
  int scenarios = 10;
  std::uint64_t base_seed = 0;
  std::vector<Algorithm> algorithms{Algorithm::ZoPro};
  AlgoConfig algo;
  double tol = 1e-4;
  std::size_t window = 100;
  bool early_stop = true;
  std::vector<double> accuracy_levels{1e-2, 1e-3, 1e-4};

  void validate() const;
  std::vector<ScenarioPoint> points() const;
  // Algorithm config of the runs: the stop rule follows tol/window when
  // early_stop is set.
  AlgoConfig run_config() const;
};

// Realized scenario: graph, problem and reference optimum.
struct Scenario {
  ScenarioPoint point;
  std::uint64_t seed = 0;
  WeightedGraph graph;
  Problem problem;
  Vector x_star;
};

// Scenario seeds are shared across sweep points (common random numbers).
std::uint64_t scenario_seed(const ExperimentSpec& spec, int index);
Scenario build_scenario(const ExperimentSpec& spec, const ScenarioPoint& point,
                        std::uint64_t seed);

RunRecord run_algorithm(Algorithm algo, const Scenario& scenario, const AlgoConfig& cfg);
// Same scenario, explicit run seed (initial point and direction stream).
RunRecord run_algorithm(Algorithm algo, const Scenario& scenario, const AlgoConfig& cfg,
                        std::uint64_t run_seed);

// Smallest k with errors[k..k+window] <= tol; nullopt when no such k.
std::optional<std::size_t> iterations_to_converge(std::span<const double> errors, double tol,
                                                  std::size_t window);

// Error series indexed by iteration: entry 0 is x^0, entry k is x^k.
std::vector<double> error_series(const RunRecord& run);

// First iteration at which the error is at most `level`.
std::optional<std::size_t> first_hit(std::span<const double> errors, double level);

struct RunSummary {
  int point_index = 0;
  int scenario_index = 0;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::ZoPro;
  bool ok = false;
  std::string error;
  std::optional<std::size_t> iterations;
  double final_error = 0.0;
  std::size_t rounds = 0;
  std::int64_t oracle_calls = 0;
  std::int64_t exact_derivative_calls = 0;
  double wall_seconds = 0.0;
  std::string csv_path;  // relative to the output directory
  std::uint64_t graph_digest = 0;
  std::uint64_t problem_digest = 0;
  std::vector<std::optional<std::size_t>> level_iterations;  // per accuracy level
  std::vector<std::optional<std::int64_t>> level_oracle_calls;
};

struct MetricsRow {
  int point_index = 0;
  ScenarioPoint point;
  Algorithm algorithm = Algorithm::ZoPro;
  int scenarios = 0;
  int converged = 0;
  int failures = 0;
  // Non-converged runs count as max_iterations.
  double mean_iterations = 0.0;
  double std_iterations = 0.0;
  double mean_final_error = 0.0;
  double mean_wall_time = 0.0;
  double mean_oracle_calls = 0.0;
};

struct MetricsTable {
  std::vector<MetricsRow> rows;
  // Deterministic columns only; wall time goes to write_timing_csv.
  void write_csv(std::ostream& os) const;
  void write_timing_csv(std::ostream& os) const;
  static constexpr const char* kCsvHeader =
      "point,n_nodes,avg_degree,lambda,algorithm,scenarios,converged,failures,"
      "mean_iterations,std_iterations,mean_final_error,mean_oracle_calls";
};

struct ExperimentResult {
  MetricsTable table;
  std::vector<RunSummary> runs;
  nlohmann::json manifest;
};

// Runs every (point, scenario, algorithm) job on up to `workers` threads;
// outputs do not depend on the worker count. Writes runs/*.csv, metrics.csv,
// timing.csv and manifest.json under out_dir when it is non-empty.
ExperimentResult run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir,
                                int workers = 1);

struct ComparisonRow {
  int point_index = 0;
  int scenario_index = 0;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::ZoPro;
  double level = 0.0;
  std::optional<std::size_t> iterations;
  std::optional<std::int64_t> oracle_calls;
  std::int64_t exact_derivative_calls = 0;
  double final_error = 0.0;
  std::uint64_t graph_digest = 0;
  std::uint64_t problem_digest = 0;
};

struct ComparisonResult {
  std::vector<ComparisonRow> rows;
  std::vector<RunSummary> runs;
  nlohmann::json manifest;
  void write_csv(std::ostream& os) const;
  static constexpr const char* kCsvHeader =
      "point,scenario,seed,algorithm,level,iterations,oracle_calls,exact_derivative_calls,"
      "final_error,graph_digest,problem_digest";
};

// ZoPro and SoPro on identical scenarios, each run until the tightest
// accuracy level has held for `window` rounds or max_iterations.
ComparisonResult compare_algorithms(const ExperimentSpec& spec,
                                    const std::filesystem::path& out_dir, int workers = 1);

struct ReplayReport {
  bool identical = true;
  std::size_t files_checked = 0;
  std::vector<std::string> mismatches;
  std::filesystem::path replay_dir;
};

// Re-executes a manifest into out_dir (default: <manifest dir>/replay) and
// compares every recorded CSV byte for byte.
ReplayReport replay(const std::filesystem::path& manifest_path,
                    const std::filesystem::path& out_dir = {}, int workers = 1);

std::uint64_t file_digest(const std::filesystem::path& path);

struct AnalysisOptions {
  int seeds = 10;
  TheoremParams params;
  double k_factor = 1.5;
  // Use shrink^max_backtracks instead of the measured smallest stepsize.
  bool a_priori_alpha = false;
  // beta is raised to this multiple of 1/alpha_floor when below it.
  double beta_margin = 1.1;
  // eq13_global only: re-run with d_policy.theta = theta_margin * probed
  // theta while the probe rejects the configured theta.
  bool calibrate_theta = true;
  double theta_margin = 0.95;
  int max_calibration_passes = 4;
};

struct AnalysisResult {
  ThetaProbe probe;
  double theta = 1.0;
  double d_policy_theta = 1.0;  // theta D was finally built for
  double alpha_measured = 1.0;
  double alpha_a_priori = 1.0;
  double k_bound = 0.0;
  TheoremConstants constants;
  EnvelopeReport envelope;
  SlopeTrace slopes;  // of the first run
  nlohmann::json to_json() const;
};

// Re-runs the scenario `seeds` times with recorded states (run seeds derived
// from the scenario seed), probes the Hessian-accuracy condition along the
// iterates, measures the smallest stepsize and K, evaluates the theorem
// constants for the D the configuration produces, and checks the envelope.
AnalysisResult analyze_scenario(const Scenario& scenario, Algorithm algo, const AlgoConfig& cfg,
                                const AnalysisOptions& options = {});

}  // namespace zopro
