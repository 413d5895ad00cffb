#include "zopro/solvers.hpp"

#include "zopro/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace zopro {

DPolicyKind parse_d_policy(const std::string& name) {
  if (name == "eq13_global") return DPolicyKind::Eq13Global;
  if (name == "scaled_identity") return DPolicyKind::ScaledIdentity;
  throw ParameterError("unknown D policy '" + name + "'");
}

std::string to_string(DPolicyKind kind) {
  return kind == DPolicyKind::Eq13Global ? "eq13_global" : "scaled_identity";
}

SlopeMode parse_slope_mode(const std::string& name) {
  if (name == "estimated_gradient") return SlopeMode::EstimatedGradient;
  if (name == "finite_difference") return SlopeMode::FiniteDifference;
  throw ParameterError("unknown slope mode '" + name + "'");
}

std::string to_string(SlopeMode mode) {
  return mode == SlopeMode::EstimatedGradient ? "estimated_gradient" : "finite_difference";
}

DescentFallback parse_descent_fallback(const std::string& name) {
  if (name == "floor") return DescentFallback::Floor;
  if (name == "unit_on_ascent") return DescentFallback::UnitOnAscent;
  if (name == "unit_on_failure") return DescentFallback::UnitOnFailure;
  throw ParameterError("unknown descent fallback '" + name + "'");
}

std::string to_string(DescentFallback f) {
  switch (f) {
    case DescentFallback::Floor: return "floor";
    case DescentFallback::UnitOnAscent: return "unit_on_ascent";
    case DescentFallback::UnitOnFailure: return "unit_on_failure";
  }
  return "floor";
}

LineSearchMerit parse_line_search_merit(const std::string& name) {
  if (name == "local_objective") return LineSearchMerit::LocalObjective;
  if (name == "local_lagrangian") return LineSearchMerit::LocalLagrangian;
  throw ParameterError("unknown line-search merit '" + name + "'");
}

std::string to_string(LineSearchMerit m) {
  return m == LineSearchMerit::LocalObjective ? "local_objective" : "local_lagrangian";
}

void AlgoConfig::validate() const {
  require(rho > 0.0, "rho must be positive");
  require(c_armijo > 0.0 && c_armijo < 1.0, "c_armijo must lie in (0,1)");
  require(shrink > 0.0 && shrink < 1.0, "shrink must lie in (0,1)");
  require(max_backtracks >= 1, "max_backtracks must be >= 1");
  require(max_iterations >= 1, "max_iterations must be >= 1");
  require(fd_epsilon > 0.0, "fd_epsilon must be positive");
  require(init_scale >= 0.0, "init_scale must be nonnegative");
  smoothing.validate();
  if (d_policy.kind == DPolicyKind::ScaledIdentity)
    require(d_policy.tau > 0.0, "scaled_identity D policy needs tau > 0");
  else
    require(d_policy.theta > 0.0 && d_policy.theta <= 1.0 && d_policy.eta > 1.0,
            "eq13_global D policy needs theta in (0,1] and eta > 1");
  if (stop) require(stop->tol > 0.0, "stop tolerance must be positive");
}

double AlgoConfig::stepsize_floor() const { return std::pow(shrink, max_backtracks); }

nlohmann::json to_json(const AlgoConfig& cfg) {
  nlohmann::json j = {
      {"rho", cfg.rho},
      {"c_armijo", cfg.c_armijo},
      {"shrink", cfg.shrink},
      {"max_backtracks", cfg.max_backtracks},
      {"max_iterations", cfg.max_iterations},
      {"slope_mode", to_string(cfg.slope_mode)},
      {"descent_fallback", to_string(cfg.descent_fallback)},
      {"merit", to_string(cfg.merit)},
      {"fd_epsilon", cfg.fd_epsilon},
      {"init_scale", cfg.init_scale},
      {"trace_mode", to_string(cfg.trace_mode)},
      {"smoothing",
       {{"mu", cfg.smoothing.mu},
        {"batch", cfg.smoothing.batch},
        {"direction_mode", to_string(cfg.smoothing.direction_mode)},
        {"rng_seed", cfg.smoothing.rng_seed}}},
      {"d_policy",
       {{"kind", to_string(cfg.d_policy.kind)},
        {"tau", cfg.d_policy.tau},
        {"theta", cfg.d_policy.theta},
        {"eta", cfg.d_policy.eta},
        {"headroom", cfg.d_policy.headroom}}}};
  if (cfg.stop) j["stop"] = {{"tol", cfg.stop->tol}, {"window", cfg.stop->window}};
  return j;
}

double eq13_required_tau(std::span<const ConvexityBounds> bounds, double rho, double theta,
                         double eta, double lambda_max_w) {
  require(theta > 0.0 && theta <= 1.0, "theta must lie in (0,1]");
  require(eta > 1.0, "eta must exceed 1");
  require(!bounds.empty(), "need convexity bounds for every node");
  double tau = -std::numeric_limits<double>::infinity();
  for (const auto& b : bounds) {
    const double excess = b.M / theta - 0.5 * (b.M + b.m);
    const double block = b.M / (2.0 * eta) + rho * (lambda_max_w + 1.0) +
                         (2.0 / theta - 1.5) * b.M - 1.5 * b.m + excess * excess;
    tau = std::max(tau, block);
  }
  return tau;
}

std::vector<Matrix> choose_D(const DPolicy& policy, std::span<const ConvexityBounds> bounds,
                             int d, double rho, double lambda_max_w) {
  require(d >= 1, "choose_D: d must be >= 1");
  double tau = policy.tau;
  if (policy.kind == DPolicyKind::Eq13Global) {
    const double required = eq13_required_tau(bounds, rho, policy.theta, policy.eta, lambda_max_w);
    double scale = 0.0;
    for (const auto& b : bounds) scale = std::max(scale, b.M);
    tau = std::max(required + policy.headroom * std::abs(required), policy.headroom * scale);
  }
  if (!(tau > 0.0)) throw ParameterError("choose_D: tau must be positive");
  return std::vector<Matrix>(bounds.size(), tau * Matrix::Identity(d, d));
}

DirectionResult search_direction(const Matrix& h_est, const Matrix& d_mat, const Vector& g_est,
                                 const Vector& y, const Vector& q, double rho,
                                 Safeguard safeguard) {
  Matrix h = h_est + d_mat;
  h = 0.5 * (h + h.transpose()).eval();
  const Vector rhs = g_est + rho * y + q;
  DirectionResult out;
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  out.lambda_min = es.eigenvalues().minCoeff();
  if (!std::isfinite(out.lambda_min) || out.lambda_min <= kMinCurvature) {
    if (safeguard == Safeguard::Strict || !std::isfinite(out.lambda_min)) {
      std::ostringstream os;
      os << "H + D not positive definite (lambda_min = " << out.lambda_min << ")";
      throw ConditioningError(os.str(), out.lambda_min);
    }
    h.diagonal().array() += kMinCurvature - out.lambda_min;
    out.shifted = true;
  }
  const Eigen::LLT<Matrix> llt(h);
  if (llt.info() != Eigen::Success)
    throw ConditioningError("Cholesky factorization of H + D failed", out.lambda_min);
  out.direction = -llt.solve(rhs);
  return out;
}

ArmijoResult armijo_stepsize(const ValueOracle& f, const Vector& x, const Vector& dir,
                             double slope, double fx, double c_armijo, double shrink,
                             int max_backtracks) {
  require(shrink > 0.0 && shrink < 1.0, "armijo: shrink must lie in (0,1)");
  require(c_armijo > 0.0 && c_armijo < 1.0, "armijo: c must lie in (0,1)");
  ArmijoResult out;
  if (!(slope < 0.0)) {
    out.status = ArmijoStatus::DescentFailure;
    out.alpha = std::pow(shrink, max_backtracks);
    return out;
  }
  double alpha = 1.0;
  for (int t = 0; t <= max_backtracks; ++t) {
    const double ft = f(x + alpha * dir);
    ++out.probes;
    if (std::isfinite(ft) && ft <= fx + c_armijo * alpha * slope) {
      out.alpha = alpha;
      out.f_new = ft;
      out.status = ArmijoStatus::Accepted;
      return out;
    }
    if (t == max_backtracks) break;
    // Below rounding level the test no longer measures decrease.
    if (c_armijo * alpha * shrink * -slope <= armijo_roundoff(fx)) break;
    alpha *= shrink;
  }
  out.alpha = alpha;
  out.status = ArmijoStatus::StepsizeFloor;
  return out;
}

LocalModel zeroth_order_model(const SmoothingConfig& smoothing, int d) {
  // Directions are shared by all nodes within a round; cache the last set.
  struct Cache {
    std::int64_t round = std::numeric_limits<std::int64_t>::min();
    DirectionSet dirs;
  };
  auto cache = std::make_shared<Cache>();
  return [smoothing, d, cache](int, const Vector& x, std::int64_t round,
                               const ValueOracle& oracle) {
    if (cache->round != round) {
      cache->dirs = sample_directions(smoothing, d, round);
      cache->round = round;
    }
    return joint_estimate(oracle, x, cache->dirs, smoothing.mu);
  };
}

LocalModel exact_model(const Problem& problem) {
  return [&problem](int node, const Vector& x, std::int64_t, const ValueOracle& oracle) {
    ZerothOrderEstimate est;
    est.fx = oracle(x);
    est.gradient = problem.node(node).gradient(x);
    est.hessian = problem.node(node).hessian(x);
    est.queries = 1;
    return est;
  };
}

namespace {

double lambda_max_of(const WeightedGraph& g) {
  return spectral_summary(weight_matrix(g)).lambda_max;
}

void finish_exchange(std::vector<NodeState>& states, SyncNetwork& net, double rho,
                     bool dual_update) {
  std::vector<Vector> outgoing;
  outgoing.reserve(states.size());
  for (const auto& s : states) outgoing.push_back(s.x);
  const auto views = net.exchange(outgoing);
  for (std::size_t i = 0; i < states.size(); ++i) {
    states[i].y = views[i].stencil(states[i].x);
    if (dual_update) states[i].q += rho * states[i].y;
  }
}

}  // namespace

std::vector<NodeState> initial_states(const Problem& problem, SyncNetwork& net,
                                      const AlgoConfig& cfg, std::uint64_t seed) {
  const int n = problem.num_nodes();
  const int d = problem.dim();
  require(net.graph().num_nodes() == n, "graph and problem disagree on the node count");
  std::vector<ConvexityBounds> bounds;
  for (const auto& f : problem.nodes()) bounds.push_back(f.bounds());
  const auto d_blocks = choose_D(cfg.d_policy, bounds, d, cfg.rho, lambda_max_of(net.graph()));
  std::vector<NodeState> states(n);
  for (int i = 0; i < n; ++i) {
    Rng rng = make_rng(seed, "init-x", {static_cast<std::uint64_t>(i)});
    states[i].x.resize(d);
    for (int k = 0; k < d; ++k) states[i].x[k] = cfg.init_scale * standard_normal(rng);
    states[i].q = Vector::Zero(d);
    states[i].d_mat = d_blocks[i];
    states[i].alpha_last = 1.0;
  }
  finish_exchange(states, net, cfg.rho, false);
  return states;
}

RoundStats zopro_round(std::vector<NodeState>& states, const Problem& problem, SyncNetwork& net,
                       const AlgoConfig& cfg, std::int64_t round, const LocalModel& model) {
  const int n = problem.num_nodes();
  RoundStats st;
  st.min_alpha = std::numeric_limits<double>::infinity();
  st.max_alpha = 0.0;
  st.slopes.resize(n);
  st.direction_norms.resize(n);
  for (int i = 0; i < n; ++i) {
    auto& s = states[i];
    const auto& f = problem.node(i);
    std::int64_t queries = 0;
    const ValueOracle oracle = [&f, &queries](const Vector& p) {
      ++queries;
      return f.value(p);
    };
    try {
      const auto est = model(i, s.x, round, oracle);
      const auto dir = search_direction(est.hessian, s.d_mat, est.gradient, s.y, s.q, cfg.rho,
                                        Safeguard::Shift);
      if (dir.shifted) ++st.regularization_events;
      // Merit along which the Armijo test runs; its value oracle spends
      // exactly one f_i query per probe.
      const Vector linear = cfg.merit == LineSearchMerit::LocalLagrangian
                                ? Vector(cfg.rho * s.y + s.q)
                                : Vector::Zero(s.x.size());
      const Vector& x0 = s.x;
      const ValueOracle merit = [&oracle, &linear, &x0](const Vector& p) {
        return oracle(p) + linear.dot(p - x0);
      };
      double slope = (est.gradient + linear).dot(dir.direction);
      if (cfg.slope_mode == SlopeMode::FiniteDifference)
        slope = (merit(s.x + cfg.fd_epsilon * dir.direction) - est.fx) / cfg.fd_epsilon;
      const auto step = armijo_stepsize(merit, s.x, dir.direction, slope, est.fx, cfg.c_armijo,
                                        cfg.shrink, cfg.max_backtracks);
      switch (step.status) {
        case ArmijoStatus::Accepted: {
          ++st.armijo_accepted;
          st.min_accepted_alpha = std::min(st.min_accepted_alpha, step.alpha);
          const Vector trial = s.x + step.alpha * dir.direction;
          const double recheck = f.value(trial) + linear.dot(trial - s.x);
          if (!(recheck <= est.fx + cfg.c_armijo * step.alpha * slope))
            ++st.armijo_certificate_failures;
          break;
        }
        case ArmijoStatus::DescentFailure: ++st.descent_failures; break;
        case ArmijoStatus::StepsizeFloor: ++st.stepsize_floor_hits; break;
      }
      double alpha = step.alpha;
      if (step.status == ArmijoStatus::DescentFailure && cfg.descent_fallback != DescentFallback::Floor)
        alpha = 1.0;
      if (step.status == ArmijoStatus::StepsizeFloor &&
          cfg.descent_fallback == DescentFallback::UnitOnFailure)
        alpha = 1.0;
      s.x += alpha * dir.direction;
      s.alpha_last = alpha;
      st.slopes[i] = slope;
      st.direction_norms[i] = dir.direction.norm();
      st.min_alpha = std::min(st.min_alpha, alpha);
      st.max_alpha = std::max(st.max_alpha, alpha);
    } catch (const NumericFailure& ex) {
      std::ostringstream os;
      os << "node " << i << ", round " << round << ": " << ex.what();
      if (const auto* ce = dynamic_cast<const ConditioningError*>(&ex))
        throw ConditioningError(os.str(), ce->lambda_min());
      if (const auto* ne = dynamic_cast<const NumericError*>(&ex))
        throw NumericError(os.str(), ne->probe());
      throw NumericFailure(os.str());
    }
    st.queries += queries;
  }
  finish_exchange(states, net, cfg.rho, true);
  return st;
}

RoundStats sopro_round(std::vector<NodeState>& states, const Problem& problem, SyncNetwork& net,
                       const AlgoConfig& cfg) {
  const int n = problem.num_nodes();
  RoundStats st;
  st.slopes.resize(n);
  st.direction_norms.resize(n);
  for (int i = 0; i < n; ++i) {
    auto& s = states[i];
    const auto& f = problem.node(i);
    const Vector g = f.gradient(s.x);
    DirectionResult dir;
    try {
      dir = search_direction(f.hessian(s.x), s.d_mat, g, s.y, s.q, cfg.rho, Safeguard::Strict);
    } catch (const ConditioningError& ex) {
      throw ConditioningError("node " + std::to_string(i) + ": " + ex.what(), ex.lambda_min());
    }
    st.slopes[i] = g.dot(dir.direction);
    st.direction_norms[i] = dir.direction.norm();
    s.x += dir.direction;
    s.alpha_last = 1.0;
  }
  finish_exchange(states, net, cfg.rho, true);
  return st;
}

SmoothingConfig run_smoothing(const AlgoConfig& cfg, std::uint64_t seed) {
  SmoothingConfig s = cfg.smoothing;
  s.rng_seed = derive_seed(cfg.smoothing.rng_seed, "run-directions", {seed});
  return s;
}

namespace {

double average_error(const std::vector<NodeState>& states, const Vector& x_star) {
  double s = 0.0;
  for (const auto& st : states) s += (st.x - x_star).squaredNorm();
  return s / static_cast<double>(states.size());
}

Snapshot snapshot_of(const std::vector<NodeState>& states) {
  Snapshot snap;
  for (const auto& s : states) {
    snap.x.push_back(s.x);
    snap.q.push_back(s.q);
  }
  return snap;
}

template <typename RoundFn>
RunRecord drive(const std::string& name, const Problem& problem, const WeightedGraph& graph,
                const AlgoConfig& cfg, std::uint64_t seed, const Vector& x_star,
                RoundFn&& round_fn) {
  cfg.validate();
  require(x_star.size() == problem.dim(), "x_star dimension mismatch");
  const int n = problem.num_nodes();
  const int d = problem.dim();
  const Matrix p = weight_matrix(graph);

  SyncNetwork net(graph, cfg.trace_mode);
  auto states = initial_states(problem, net, cfg, seed);

  RunRecord rec;
  rec.algorithm = name;
  rec.x_star = x_star;
  rec.initial_avg_error = average_error(states, x_star);
  if (cfg.record_states) rec.snapshots.push_back(snapshot_of(states));

  std::int64_t cumulative_queries = 0;
  std::size_t streak = 0;
  for (int k = 0; k < cfg.max_iterations; ++k) {
    const RoundStats st = round_fn(states, net, k);
    cumulative_queries += st.queries;

    Matrix x_rows(n, d);
    double residual_sq = 0.0, objective = 0.0, q_norm_sq = 0.0;
    Vector q_sum = Vector::Zero(d);
    for (int i = 0; i < n; ++i) {
      x_rows.row(i) = states[i].x.transpose();
      residual_sq += states[i].y.squaredNorm();
      objective += problem.node(i).value(states[i].x);
      q_sum += states[i].q;
      q_norm_sq += states[i].q.squaredNorm();
    }
    const Matrix y_direct = p * x_rows;
    for (int i = 0; i < n; ++i)
      rec.audit.max_y_inconsistency =
          std::max(rec.audit.max_y_inconsistency,
                   (y_direct.row(i).transpose() - states[i].y).cwiseAbs().maxCoeff());
    if (q_norm_sq > 0.0)
      rec.audit.max_dual_sum_drift =
          std::max(rec.audit.max_dual_sum_drift, q_sum.norm() / std::sqrt(q_norm_sq));

    rec.avg_error.push_back(average_error(states, x_star));
    rec.consensus_residual.push_back(std::sqrt(residual_sq));
    rec.objective.push_back(objective);
    rec.min_alpha.push_back(st.min_alpha);
    rec.max_alpha.push_back(st.max_alpha);
    rec.oracle_calls.push_back(cumulative_queries);
    rec.slopes.push_back(st.slopes);
    rec.direction_norms.push_back(st.direction_norms);
    rec.audit.armijo_accepted += st.armijo_accepted;
    rec.audit.armijo_certificate_failures += st.armijo_certificate_failures;
    rec.audit.descent_failures += st.descent_failures;
    rec.audit.stepsize_floor_hits += st.stepsize_floor_hits;
    rec.audit.regularization_events += st.regularization_events;
    rec.audit.min_accepted_alpha = std::min(rec.audit.min_accepted_alpha, st.min_accepted_alpha);
    if (cfg.record_states) rec.snapshots.push_back(snapshot_of(states));

    if (cfg.stop) {
      streak = rec.avg_error.back() <= cfg.stop->tol ? streak + 1 : 0;
      if (streak >= cfg.stop->window + 1) {
        rec.converged_index = rec.avg_error.size() - streak;
        break;
      }
    }
  }

  rec.final_states = states;
  rec.trace = net.trace();
  rec.metadata = {{"algorithm", name},
                  {"seed", seed},
                  {"config", to_json(cfg)},
                  {"graph_digest", graph.digest()},
                  {"problem_digest", problem.digest()},
                  {"n_nodes", n},
                  {"dim", d},
                  {"direction_seed", run_smoothing(cfg, seed).rng_seed}};
  return rec;
}

}  // namespace

RunRecord run_zopro(const Problem& problem, const WeightedGraph& graph, const AlgoConfig& cfg,
                    std::uint64_t seed, const Vector& x_star) {
  const auto model = zeroth_order_model(run_smoothing(cfg, seed), problem.dim());
  return drive("zopro", problem, graph, cfg, seed, x_star,
               [&](std::vector<NodeState>& states, SyncNetwork& net, int k) {
                 return zopro_round(states, problem, net, cfg, k, model);
               });
}

RunRecord run_sopro(const Problem& problem, const WeightedGraph& graph, const AlgoConfig& cfg,
                    std::uint64_t seed, const Vector& x_star) {
  std::int64_t derivative_calls = 0;
  auto rec = drive("sopro", problem, graph, cfg, seed, x_star,
                   [&](std::vector<NodeState>& states, SyncNetwork& net, int) {
                     derivative_calls += 2 * problem.num_nodes();
                     return sopro_round(states, problem, net, cfg);
                   });
  rec.audit.exact_derivative_calls = derivative_calls;
  return rec;
}

}  // namespace zopro
