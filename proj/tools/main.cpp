#include "zopro/config.hpp"
#include "zopro/harness.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kParameterError = 2;
constexpr int kNumericFailure = 3;

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw zopro::ParameterError("cannot write " + path.string());
  out << text;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw zopro::ParameterError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw zopro::ParameterError(path.string() + ": " + e.what());
  }
}

struct RunArgs {
  std::string config;
  std::int64_t seed = -1;
  std::string algo = "zopro";
  std::string out = "zopro-run";
  int point = 0;
  bool full = false;
};

int cmd_run(const RunArgs& a) {
  auto spec = zopro::load_experiment_config(a.config);
  if (a.full) spec.early_stop = false;
  const auto points = spec.points();
  zopro::require(a.point >= 0 && a.point < static_cast<int>(points.size()),
                 "--point out of range (config has " + std::to_string(points.size()) + " points)");
  const auto algo = zopro::parse_algorithm(a.algo);
  const std::uint64_t seed =
      a.seed >= 0 ? static_cast<std::uint64_t>(a.seed) : zopro::scenario_seed(spec, 0);
  const auto sc = zopro::build_scenario(spec, points[a.point], seed);
  const auto rec = zopro::run_algorithm(algo, sc, spec.run_config());

  const fs::path out(a.out);
  std::ostringstream csv;
  rec.write_csv(csv);
  write_text(out / "metrics.csv", csv.str());
  write_text(out / "graph.json", zopro::to_json(sc.graph).dump(2) + "\n");
  write_text(out / "problem.json", zopro::to_json(sc.problem).dump() + "\n");
  if (spec.algo.trace_mode != zopro::TraceMode::Off) {
    std::ostringstream trace;
    rec.trace.write_jsonl(trace);
    write_text(out / "trace.jsonl", trace.str());
  }
  const json run = {{"spec", zopro::to_json(spec)},
                    {"point", a.point},
                    {"seed", seed},
                    {"algorithm", a.algo},
                    {"record", rec.to_json()}};
  write_text(out / "run.json", run.dump(2) + "\n");

  const auto errors = zopro::error_series(rec);
  const auto it = zopro::iterations_to_converge(errors, spec.tol, spec.window);
  std::cout << a.algo << ": " << rec.rounds() << " rounds, final avg_error "
            << std::setprecision(6) << errors.back() << ", ";
  if (it)
    std::cout << "converged at iteration " << *it;
  else
    std::cout << "not converged to " << spec.tol;
  std::cout << " (" << out.string() << ")\n";
  return kOk;
}

struct SweepArgs {
  std::string spec;
  std::string out = "zopro-sweep";
  int workers = 1;
  bool compare = false;
  bool full = false;
};

int cmd_sweep(const SweepArgs& a) {
  auto spec = zopro::load_experiment_config(a.spec);
  if (a.full) spec.early_stop = false;
  std::size_t failed = 0;
  if (a.compare) {
    const auto res = zopro::compare_algorithms(spec, a.out, a.workers);
    for (const auto& r : res.runs) failed += !r.ok;
    std::cout << "comparison: " << res.runs.size() << " runs, " << res.rows.size() << " rows -> "
              << (fs::path(a.out) / "comparison.csv").string() << "\n";
  } else {
    const auto res = zopro::run_experiment(spec, a.out, a.workers);
    for (const auto& r : res.runs) failed += !r.ok;
    for (const auto& row : res.table.rows)
      std::cout << "point " << row.point_index << " (N=" << row.point.n_nodes
                << ", d_a=" << row.point.avg_degree << ", lambda=" << row.point.lambda << ") "
                << zopro::to_string(row.algorithm) << ": " << row.converged << "/"
                << row.scenarios << " converged, mean iterations " << row.mean_iterations
                << "\n";
    std::cout << "wrote " << (fs::path(a.out) / "metrics.csv").string() << "\n";
  }
  if (failed) std::cout << failed << " run(s) failed; see manifest.json\n";
  return kOk;
}

struct AnalyzeArgs {
  std::string run;
  int seeds = 10;
  double eta = 2.0;
  double beta = 2.0;
  bool a_priori_alpha = false;
};

int cmd_analyze(const AnalyzeArgs& a) {
  const fs::path dir(a.run);
  const json run = read_json(dir / "run.json");
  const auto spec = zopro::experiment_from_json(run.at("spec"));
  const int point = run.at("point").get<int>();
  const auto points = spec.points();
  zopro::require(point >= 0 && point < static_cast<int>(points.size()), "run.json: bad point");
  const auto sc = zopro::build_scenario(spec, points[point], run.at("seed").get<std::uint64_t>());
  const auto algo = zopro::parse_algorithm(run.at("algorithm").get<std::string>());

  zopro::require(a.eta > 1.0, "--eta must exceed 1");
  zopro::AnalysisOptions opt;
  opt.seeds = a.seeds;
  opt.params.eta = a.eta;
  opt.params.beta = a.beta;
  opt.a_priori_alpha = a.a_priori_alpha;
  const auto res = zopro::analyze_scenario(sc, algo, spec.run_config(), opt);

  write_text(dir / "analysis.json", res.to_json().dump(2) + "\n");
  std::ostringstream csv;
  res.envelope.write_csv(csv);
  write_text(dir / "envelope.csv", csv.str());
  std::cout << std::setprecision(6) << "delta " << res.constants.delta << ", G "
            << res.constants.g_offset << ", G/delta " << res.constants.neighborhood()
            << ", theta " << res.theta << (res.probe.satisfied ? "" : " (hessian accuracy unverified)")
            << "\nenvelope violations " << res.envelope.violations << " ("
            << res.envelope.violation_fraction * 100.0 << "%), tail average "
            << res.envelope.tail_average << (res.envelope.tail_within ? " <= " : " > ")
            << "G/delta\n";
  return kOk;
}

struct ReplayArgs {
  std::string manifest;
  std::string out;
  int workers = 1;
};

int cmd_replay(const ReplayArgs& a) {
  const auto rep = zopro::replay(a.manifest, a.out, a.workers);
  std::cout << "replayed into " << rep.replay_dir.string() << ": " << rep.files_checked
            << " files checked, " << rep.mismatches.size() << " mismatched\n";
  for (const auto& m : rep.mismatches) std::cout << "  " << m << "\n";
  return rep.identical ? kOk : kNumericFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized zeroth-order proximal optimization laboratory"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("--config", run_args.config, "Experiment config (TOML or JSON)")->required();
  run->add_option("--seed", run_args.seed, "Scenario seed (default: first sweep scenario)");
  run->add_option("--algo", run_args.algo, "zopro or sopro")
      ->check(CLI::IsMember({"zopro", "sopro"}));
  run->add_option("--out", run_args.out, "Output directory");
  run->add_option("--point", run_args.point, "Sweep point index");
  run->add_flag("--full", run_args.full, "Disable early stopping");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Run a multi-scenario sweep");
  sweep->add_option("--spec", sweep_args.spec, "Experiment config (TOML or JSON)")->required();
  sweep->add_option("--out", sweep_args.out, "Output directory");
  sweep->add_option("--workers", sweep_args.workers, "Concurrent runs")
      ->check(CLI::PositiveNumber);
  sweep->add_flag("--compare", sweep_args.compare, "ZoPro vs SoPro accuracy-level comparison");
  sweep->add_flag("--full", sweep_args.full, "Disable early stopping");

  AnalyzeArgs analyze_args;
  auto* analyze = app.add_subcommand("analyze", "Theorem constants and envelope report for a run");
  analyze->add_option("--run", analyze_args.run, "Directory written by `run`")->required();
  analyze->add_option("--seeds", analyze_args.seeds, "Runs averaged for the expectation")
      ->check(CLI::PositiveNumber);
  analyze->add_option("--eta", analyze_args.eta, "eta > 1");
  analyze->add_option("--beta", analyze_args.beta, "beta > 1/alpha_floor (raised if needed)");
  analyze->add_flag("--a-priori-alpha", analyze_args.a_priori_alpha,
                    "Use shrink^max_backtracks as the stepsize floor");

  ReplayArgs replay_args;
  auto* replay = app.add_subcommand("replay", "Re-execute a manifest and compare outputs");
  replay->add_option("--manifest", replay_args.manifest, "manifest.json path")->required();
  replay->add_option("--out", replay_args.out, "Replay directory (default: <dir>/replay)");
  replay->add_option("--workers", replay_args.workers, "Concurrent runs")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kParameterError;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*sweep) return cmd_sweep(sweep_args);
    if (*analyze) return cmd_analyze(analyze_args);
    if (*replay) return cmd_replay(replay_args);
  } catch (const zopro::ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParameterError;
  } catch (const zopro::NumericFailure& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumericFailure;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParameterError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
