#pragma once

#include "zopro/common.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace zopro {

struct ConvexityBounds {
  double m = 0.0;  // strong convexity
  double M = 0.0;  // smoothness
};

enum class ObjectiveKind { Logistic, Quadratic };

// One node's local cost f_i. Either
//   logistic:  (reg/2)|x|^2 + sum_l softplus(-v_l u_l^T x),  reg = lambda / N
//   quadratic: 1/2 (x - c)^T A (x - c),  A symmetric positive definite.
// Immutable; all queries are pure.
class NodeObjective {
 public:
  static NodeObjective logistic(Matrix features, Vector labels, double reg);
  static NodeObjective quadratic(Matrix a, Vector center);

  ObjectiveKind kind() const { return kind_; }
  int dim() const { return dim_; }

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  Matrix hessian(const Vector& x) const;
  ConvexityBounds bounds() const { return bounds_; }

  // logistic payload
  const Matrix& features() const { return features_; }  // q x d, row per sample
  const Vector& labels() const { return labels_; }
  double regularizer() const { return reg_; }
  // quadratic payload
  const Matrix& curvature() const { return a_; }
  const Vector& center() const { return center_; }

 private:
  NodeObjective() = default;
  void check_dim(const Vector& x) const;

  ObjectiveKind kind_ = ObjectiveKind::Quadratic;
  int dim_ = 0;
  Matrix features_;
  Vector labels_;
  double reg_ = 0.0;
  Matrix a_;
  Vector center_;
  ConvexityBounds bounds_;
};

// Overflow-safe log(1 + exp(z)).
double softplus(double z);
// 1 / (1 + exp(-z)), stable for large |z|.
double sigmoid(double z);

struct LogisticGenerator {
  double label_noise = 0.1;
  double feature_scale = 1.0;
};

class Problem {
 public:
  explicit Problem(std::vector<NodeObjective> nodes, nlohmann::json metadata = {});

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int dim() const { return dim_; }
  const NodeObjective& node(int i) const { return nodes_[i]; }
  const std::vector<NodeObjective>& nodes() const { return nodes_; }
  const nlohmann::json& metadata() const { return metadata_; }

  // Centralized F(x) = sum_i f_i(x) and its derivatives.
  double total_value(const Vector& x) const;
  Vector total_gradient(const Vector& x) const;
  Matrix total_hessian(const Vector& x) const;

  // min_i m_i and max_i M_i.
  ConvexityBounds global_bounds() const;

  std::uint64_t digest() const;

 private:
  std::vector<NodeObjective> nodes_;
  int dim_ = 0;
  nlohmann::json metadata_;
};

// Gaussian features, labels from a random ground-truth hyperplane with a
// fraction of flipped labels. Deterministic in seed.
Problem make_logistic_problem(int n_nodes, int d, int samples_per_node, double lambda,
                              std::uint64_t seed, const LogisticGenerator& gen = {});

// f_i = 1/2 (x - c_i)^T A (x - c_i) for a shared A; centers i.i.d. N(0, spread^2 I).
Problem make_quadratic_problem(int n_nodes, const Matrix& a, double spread,
                               std::uint64_t seed);

// Same for per-node curvatures and explicit centers.
Problem make_quadratic_problem(std::vector<Matrix> curvatures, std::vector<Vector> centers);

// Centralized damped Newton on F until |grad F| <= tol.
Vector solve_reference(const Problem& p, double tol = 1e-12, int max_iterations = 200);

nlohmann::json to_json(const Problem& p);
Problem problem_from_json(const nlohmann::json& j);

}  // namespace zopro
