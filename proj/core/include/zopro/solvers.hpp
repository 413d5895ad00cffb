#pragma once

#include "zopro/common.hpp"
#include "zopro/estimators.hpp"
#include "zopro/graph.hpp"
#include "zopro/objectives.hpp"
#include "zopro/run_record.hpp"
#include "zopro/simnet.hpp"

#include <cstdint>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace zopro {

enum class DPolicyKind { Eq13Global, ScaledIdentity };

struct DPolicy {
  DPolicyKind kind = DPolicyKind::ScaledIdentity;
  double tau = 1.0;    // ScaledIdentity only
  double theta = 1.0;  // Eq13Global: Hessian-accuracy parameter
  double eta = 2.0;    // Eq13Global: eta > 1
  double headroom = 0.05;
};

DPolicyKind parse_d_policy(const std::string& name);
std::string to_string(DPolicyKind kind);

enum class SlopeMode { EstimatedGradient, FiniteDifference };

SlopeMode parse_slope_mode(const std::string& name);
std::string to_string(SlopeMode mode);

// Step taken when backtracking does not certify a step. Floor keeps the
// backtracked value; the unit variants take alpha = 1 on an ascent slope
// only, or on any failure (ascent slope or exhausted backtracks).
enum class DescentFallback { Floor, UnitOnAscent, UnitOnFailure };

DescentFallback parse_descent_fallback(const std::string& name);
std::string to_string(DescentFallback f);

// Function the Armijo test is applied to. LocalObjective tests f_i itself;
// LocalLagrangian tests f_i(x) + (rho y_i + q_i)^T (x - x_i), the node's
// share of the linearized augmented Lagrangian, along which the search
// direction is always a descent direction.
enum class LineSearchMerit { LocalObjective, LocalLagrangian };

LineSearchMerit parse_line_search_merit(const std::string& name);
std::string to_string(LineSearchMerit m);

struct StopRule {
  double tol = 1e-4;
  std::size_t window = 100;
};

struct AlgoConfig {
  double rho = 0.5;
  double c_armijo = 0.1;
  double shrink = 0.5;
  int max_backtracks = 30;
  SmoothingConfig smoothing;
  DPolicy d_policy;
  int max_iterations = 1000;
  SlopeMode slope_mode = SlopeMode::EstimatedGradient;
  DescentFallback descent_fallback = DescentFallback::UnitOnFailure;
  LineSearchMerit merit = LineSearchMerit::LocalLagrangian;
  double fd_epsilon = 1e-6;
  double init_scale = 1.0;  // x_i^0 ~ N(0, init_scale^2 I)
  std::optional<StopRule> stop;  // early stop `window` rounds after the criterion first holds
  bool record_states = false;
  TraceMode trace_mode = TraceMode::Digest;

  void validate() const;
  // Smallest stepsize the line search can return.
  double stepsize_floor() const;
};

nlohmann::json to_json(const AlgoConfig& cfg);

// Required scalar for the blockwise matrix condition on D, with rho (W + I)
// bounded by rho (lambda_max(W) + 1) I; taken as the max over nodes.
double eq13_required_tau(std::span<const ConvexityBounds> bounds, double rho, double theta,
                         double eta, double lambda_max_w);

// Eq13Global: the smallest tau above eq13_required_tau with relative
// headroom (floored at a small positive value). ScaledIdentity: tau as given.
std::vector<Matrix> choose_D(const DPolicy& policy, std::span<const ConvexityBounds> bounds,
                             int d, double rho, double lambda_max_w);

enum class Safeguard { Strict, Shift };

struct DirectionResult {
  Vector direction;
  double lambda_min = 0.0;  // of H + D before any shift
  bool shifted = false;
};

inline constexpr double kMinCurvature = 1e-8;

// -(H + D)^{-1} (g + rho y + q) via a Cholesky solve. Strict throws
// ConditioningError when lambda_min(H + D) <= 1e-8; Shift adds
// (1e-8 - lambda_min) I instead.
DirectionResult search_direction(const Matrix& h_est, const Matrix& d_mat, const Vector& g_est,
                                 const Vector& y, const Vector& q, double rho,
                                 Safeguard safeguard = Safeguard::Strict);

enum class ArmijoStatus { Accepted, DescentFailure, StepsizeFloor };

struct ArmijoResult {
  double alpha = 1.0;
  int probes = 0;
  ArmijoStatus status = ArmijoStatus::Accepted;
  double f_new = 0.0;  // valid when status == Accepted
};

// Rounding level of f near fx, 4 eps |fx|. Backtracking stops once the
// required decrease c alpha |slope| falls below it.
inline double armijo_roundoff(double fx) {
  return 4.0 * std::numeric_limits<double>::epsilon() * std::abs(fx);
}

// First alpha in {1, s, s^2, ..., s^max_backtracks} with
// f(x + alpha d) <= fx + c alpha slope. slope >= 0 returns DescentFailure
// without probing; exhausting the schedule returns StepsizeFloor with the
// last alpha tried.
ArmijoResult armijo_stepsize(const ValueOracle& f, const Vector& x, const Vector& dir,
                             double slope, double fx, double c_armijo, double shrink,
                             int max_backtracks);

// Local model provider used by a ZoPro round: returns f(x) together with a
// gradient and Hessian surrogate for node i at x.
using LocalModel = std::function<ZerothOrderEstimate(int node, const Vector& x,
                                                     std::int64_t round,
                                                     const ValueOracle& oracle)>;

// Zeroth-order oracle with directions shared by all nodes per round.
LocalModel zeroth_order_model(const SmoothingConfig& smoothing, int d);
// Exact derivatives (mu -> 0 stand-in); counts only the f(x) query.
LocalModel exact_model(const Problem& problem);

struct RoundStats {
  double min_alpha = 1.0;
  double max_alpha = 1.0;
  std::int64_t queries = 0;
  std::vector<double> slopes;
  std::vector<double> direction_norms;
  int armijo_accepted = 0;
  int armijo_certificate_failures = 0;
  int descent_failures = 0;
  int stepsize_floor_hits = 0;
  int regularization_events = 0;
  double min_accepted_alpha = 1.0;
};

// x_i^0 i.i.d. Gaussian, q_i^0 = 0, D from the policy, y^0 from one exchange.
std::vector<NodeState> initial_states(const Problem& problem, SyncNetwork& net,
                                      const AlgoConfig& cfg, std::uint64_t seed);

// One synchronous ZoPro round: local estimate, direction, Armijo step and
// primal update on every node, then an exchange and the y/q update.
RoundStats zopro_round(std::vector<NodeState>& states, const Problem& problem, SyncNetwork& net,
                       const AlgoConfig& cfg, std::int64_t round, const LocalModel& model);

// One synchronous SoPro round (exact derivatives, unit step).
RoundStats sopro_round(std::vector<NodeState>& states, const Problem& problem, SyncNetwork& net,
                       const AlgoConfig& cfg);

RunRecord run_zopro(const Problem& problem, const WeightedGraph& graph, const AlgoConfig& cfg,
                    std::uint64_t seed, const Vector& x_star);

RunRecord run_sopro(const Problem& problem, const WeightedGraph& graph, const AlgoConfig& cfg,
                    std::uint64_t seed, const Vector& x_star);

// Effective smoothing configuration of a run: the direction stream is keyed
// by both the configured rng_seed and the run seed.
SmoothingConfig run_smoothing(const AlgoConfig& cfg, std::uint64_t seed);

}  // namespace zopro
