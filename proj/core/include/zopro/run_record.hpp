#pragma once

#include "zopro/common.hpp"
#include "zopro/simnet.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace zopro {

// Per-node primal/dual/auxiliary state.
struct NodeState {
  Vector x;
  Vector q;
  Vector y;  // sum_j p_ij (x_i - x_j), maintained through exchanges
  Matrix d_mat;
  double alpha_last = 1.0;
};

struct Snapshot {
  std::vector<Vector> x;
  std::vector<Vector> q;
};

// Event counters and exactness audits accumulated over a run.
struct RunAudit {
  std::int64_t armijo_accepted = 0;
  std::int64_t armijo_certificate_failures = 0;
  std::int64_t descent_failures = 0;
  std::int64_t stepsize_floor_hits = 0;
  std::int64_t regularization_events = 0;
  std::int64_t exact_derivative_calls = 0;
  double max_dual_sum_drift = 0.0;    // |sum_i q_i| / |q|
  double max_y_inconsistency = 0.0;   // max |y_i - [(P (x) I) x]_i|_inf
  double min_accepted_alpha = 1.0;
};

struct RunRecord {
  std::string algorithm;

  // One entry per completed round; entry k describes x^{k+1}.
  std::vector<double> avg_error;
  std::vector<double> consensus_residual;
  std::vector<double> objective;
  std::vector<double> min_alpha;
  std::vector<double> max_alpha;
  std::vector<std::int64_t> oracle_calls;
  // slopes[k][i]: node i's directional-derivative surrogate in round k.
  std::vector<std::vector<double>> slopes;
  // Search-direction norms, same layout.
  std::vector<std::vector<double>> direction_norms;

  double initial_avg_error = 0.0;
  // Filled when states are recorded: snapshots[k] is the state before round
  // k, so snapshots.size() == rounds + 1.
  std::vector<Snapshot> snapshots;
  std::vector<NodeState> final_states;
  Vector x_star;

  RunAudit audit;
  ExchangeTrace trace;
  std::optional<std::size_t> converged_index;
  nlohmann::json metadata = nlohmann::json::object();

  std::size_t rounds() const { return avg_error.size(); }

  static constexpr const char* kCsvHeader =
      "iter,avg_error,consensus_residual,objective,min_alpha,max_alpha,oracle_calls";
  void write_csv(std::ostream& os) const;
  nlohmann::json to_json() const;  // metadata, audit, final states, summary
};

// Round-trip exact decimal representation used in every CSV and JSON output.
std::string format_double(double v);

nlohmann::json vector_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

}  // namespace zopro
