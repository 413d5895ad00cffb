#pragma once

#include "zopro/common.hpp"
#include "zopro/objectives.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace zopro {

enum class DirectionMode { FreshPerIteration, FixedAtInit };

DirectionMode parse_direction_mode(const std::string& name);
std::string to_string(DirectionMode mode);

struct SmoothingConfig {
  double mu = 0.05;
  int batch = 50;
  DirectionMode direction_mode = DirectionMode::FreshPerIteration;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// b Gaussian directions stored as the columns of a d x b matrix.
struct DirectionSet {
  Matrix directions;

  int batch() const { return static_cast<int>(directions.cols()); }
  int dim() const { return static_cast<int>(directions.rows()); }
  auto direction(int j) const { return directions.col(j); }
};

// All nodes share one set per round. FixedAtInit ignores `round`.
DirectionSet sample_directions(const SmoothingConfig& cfg, int d, std::int64_t round);

using ValueOracle = std::function<double(const Vector&)>;

// Wraps an oracle and counts value queries.
class CountingOracle {
 public:
  explicit CountingOracle(ValueOracle f) : f_(std::move(f)) {}
  double operator()(const Vector& x) {
    ++calls_;
    return f_(x);
  }
  std::int64_t calls() const { return calls_; }
  ValueOracle as_oracle() {
    return [this](const Vector& x) { return (*this)(x); };
  }

 private:
  ValueOracle f_;
  std::int64_t calls_ = 0;
};

// (1/b) sum_j (f(x + mu u_j) - f(x)) / mu * u_j.  b + 1 queries.
Vector grad_estimate(const ValueOracle& f, const Vector& x, const DirectionSet& dirs, double mu);

// (1/b) sum_j (f(x + mu u_j) + f(x - mu u_j) - 2 f(x)) / (2 mu^2) * u_j u_j^T,
// symmetrized. 2b + 1 queries.
Matrix hessian_estimate(const ValueOracle& f, const Vector& x, const DirectionSet& dirs,
                        double mu);

struct ZerothOrderEstimate {
  double fx = 0.0;
  Vector gradient;
  Matrix hessian;
  std::int64_t queries = 0;
};

// Gradient and Hessian estimates sharing the f(x) and f(x + mu u_j) probes:
// 2b + 1 queries in total.
ZerothOrderEstimate joint_estimate(const ValueOracle& f, const Vector& x,
                                   const DirectionSet& dirs, double mu);

struct SmoothingErrorBounds {
  double g1_sq = 0.0;  // E|g~ - grad f_mu|^2 bound
  double g2_sq = 0.0;  // |grad f_mu - grad f|^2 bound
  double k_bound = 0.0;
};

// g1_sq = 2Nd (mu^2 M^2 Nd + K^2) / b,  g2_sq = mu^2/4 M^2 (Nd + 3)^3.
SmoothingErrorBounds smoothing_error_bounds(double mu, double M, int n_nodes, int d, int batch,
                                            double k_bound);

struct ThetaProbe {
  bool satisfied = false;
  double theta = 0.0;       // largest admissible theta when satisfied
  double min_ratio = 0.0;   // smallest generalized eigenvalue of (hess, h_est)
  double max_ratio = 0.0;   // largest
  std::string reason;       // populated when not satisfied
  int worst_node = -1;
  int worst_point = -1;
};

// Largest theta in (0,1] with theta*h_est <= hess <= (2-theta)*h_est.
// Returns nullopt (with no exception) when h_est is not positive definite or
// no theta in (0,1] works.
std::optional<double> theta_for_pair(const Matrix& exact_hessian, const Matrix& h_est,
                                     double* min_ratio = nullptr, double* max_ratio = nullptr);

// Probes every (node, point) pair with directions drawn as for round = point
// index, comparing the estimate against the exact Hessian.
ThetaProbe assumption2_theta(const Problem& problem, const std::vector<Vector>& points,
                             const SmoothingConfig& cfg);

// Same, for per-node points (snapshots[k][i] is node i's iterate in snapshot k).
ThetaProbe assumption2_theta(const Problem& problem,
                             const std::vector<std::vector<Vector>>& snapshots,
                             const SmoothingConfig& cfg);

// Hessian source for the probe: (node, snapshot index, x) -> estimate.
using HessianSource = std::function<Matrix(int, int, const Vector&)>;

ThetaProbe assumption2_theta(const Problem& problem,
                             const std::vector<std::vector<Vector>>& snapshots,
                             const HessianSource& estimate);

}  // namespace zopro
