#pragma once

#include "zopro/common.hpp"
#include "zopro/estimators.hpp"
#include "zopro/graph.hpp"
#include "zopro/objectives.hpp"
#include "zopro/run_record.hpp"
#include "zopro/solvers.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace zopro {

// Free parameters of the linear-convergence theorem. gamma <= 0 selects
// 1.1 times the smallest admissible value.
struct TheoremParams {
  double eta = 2.0;
  double beta = 2.0;
  double gamma = 0.0;
  // Log-spaced (c1, c2) grid over [c_min, c_max]^2 for the sup defining delta.
  int grid = 61;
  double c_min = 1e-3;
  double c_max = 1e3;
  bool refine = true;
  // Exact-derivative limit: G1 = G2 = 0.
  bool exact_oracle = false;
};

struct TheoremConstants {
  double m = 0.0;
  double M = 0.0;
  Vector lambda_m_blocks;  // per node
  Vector lambda_M_blocks;
  double alpha_floor = 1.0;
  double k_bound = 0.0;
  double theta = 1.0;
  double g1_sq = 0.0;
  double g2_sq = 0.0;
  double eta = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double gamma_min = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double delta = 0.0;
  double g_offset = 0.0;
  double kappa = 0.0;
  double delta_c = 0.0;
  double eq13_margin = 0.0;
  double lambda_w = 0.0;
  double lambda_max_w = 0.0;
  double rho = 0.0;
  // Which of the three terms in the min is active at the maximizer (0, 1, 2).
  int active_term = -1;
  Matrix r_matrix;  // Nd x Nd
  Matrix q_matrix;  // 2Nd x 2Nd, diag(rho R, I)

  double neighborhood() const { return g_offset / delta; }
  nlohmann::json to_json() const;  // scalars and per-node blocks
};

// Stacks per-node blocks into an Nd x Nd matrix.
Matrix block_diagonal(const std::vector<Matrix>& blocks);

// lambda_min of D minus the right-hand side of the sufficient condition on D
// (full W, not its eigenvalue bound). Positive means the condition holds.
double eq13_margin(const Problem& problem, const Matrix& p_matrix, const std::vector<Matrix>& d,
                   double rho, double theta, double eta);

// Evaluates the contraction factor delta and offset G. Throws
// PreconditionError when the condition on D fails or a parameter constraint
// is violated, and NumericFailure when no grid point gives delta > 0.
TheoremConstants theorem_constants(const Problem& problem, const WeightedGraph& graph,
                                   const AlgoConfig& cfg, const std::vector<Matrix>& d,
                                   double theta, double alpha_floor, double k_bound,
                                   const TheoremParams& params = {});

// K taken as `factor` times the largest stacked exact-gradient norm over the
// recorded iterates of a pilot run.
double k_bound_from_run(const Problem& problem, const RunRecord& run, double factor = 1.5);

// The weighted distance |z - z*|_Q^2 = rho |x - x*|_R^2 + |v - v*|^2 with
// v = (W^+)^{1/2} q and v* = -(W^+)^{1/2} grad f(x*).
class QMetric {
 public:
  QMetric(const Problem& problem, const Matrix& p_matrix, const Vector& x_star, double rho,
          Matrix r_matrix);

  double operator()(const std::vector<Vector>& x, const std::vector<Vector>& q) const;
  double operator()(const std::vector<NodeState>& states) const;
  double operator()(const Snapshot& s) const;

  // v for a stacked dual (N x d layout, row per node). Throws NumericFailure
  // when q has a consensus component above tolerance.
  Matrix v_of(const Matrix& q_rows) const;
  const Matrix& v_star() const { return v_star_; }
  static constexpr double kConsistencyTol = 1e-8;

 private:
  int n_ = 0;
  int d_ = 0;
  double rho_ = 0.0;
  Matrix x_star_rows_;
  Matrix r_;
  Matrix eigenvectors_;
  Vector inv_sqrt_;  // 1/sqrt(lambda) on the range of P, 0 on its null space
  Vector null_;      // unit null vector of P
  Matrix v_star_;
};

double q_distance(const std::vector<NodeState>& states, const Vector& x_star,
                  const Problem& problem, const Matrix& p_matrix, double rho,
                  const Matrix& r_matrix);

struct EnvelopeReport {
  std::vector<double> measured;  // seed-averaged Q-distance, k = 0..K
  std::vector<double> bound;
  std::size_t violations = 0;
  double violation_fraction = 0.0;  // over k >= 1
  double tail_average = 0.0;        // last 10% of measured
  double asymptote = 0.0;           // G / delta
  bool tail_within = false;
  bool assumption2_verified = true;
  int seeds = 0;
  bool seeds_sufficient = false;  // at least 10 runs

  nlohmann::json to_json() const;
  void write_csv(std::ostream& os) const;  // k,measured,bound
};

// Runs must carry snapshots and share graph and problem digests.
EnvelopeReport envelope_check(const std::vector<RunRecord>& runs,
                              const TheoremConstants& constants, const QMetric& metric,
                              bool assumption2_verified = true);

struct SlopeTrace {
  std::vector<std::vector<double>> per_node;  // per_node[i][k]
  std::size_t window_start = 0;
  // min over the final 10% of rounds of max_i |slope_i^k|.
  double final_window_min_abs = 0.0;
  std::vector<double> per_node_final_min_abs;
  nlohmann::json to_json() const;
};

SlopeTrace slope_trace(const RunRecord& run);

}  // namespace zopro
