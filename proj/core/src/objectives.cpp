#include "zopro/objectives.hpp"

#include "zopro/seeding.hpp"

#include <cmath>

namespace zopro {

double softplus(double z) { return std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

double max_eigenvalue(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

NodeObjective NodeObjective::logistic(Matrix features, Vector labels, double reg) {
  require(features.rows() == labels.size(), "logistic: one label per sample");
  require(features.cols() >= 1, "logistic: dimension must be positive");
  require(reg > 0.0 && std::isfinite(reg), "logistic: regularizer must be positive");
  for (Eigen::Index l = 0; l < labels.size(); ++l)
    require(labels[l] == 1.0 || labels[l] == -1.0, "logistic: labels must be +-1");
  NodeObjective f;
  f.kind_ = ObjectiveKind::Logistic;
  f.dim_ = static_cast<int>(features.cols());
  f.features_ = std::move(features);
  f.labels_ = std::move(labels);
  f.reg_ = reg;
  const double top = f.features_.rows() > 0
                         ? max_eigenvalue(f.features_.transpose() * f.features_)
                         : 0.0;
  f.bounds_ = {reg, reg + 0.25 * std::max(top, 0.0)};
  return f;
}

NodeObjective NodeObjective::quadratic(Matrix a, Vector center) {
  require(a.rows() == a.cols() && a.rows() == center.size() && a.rows() >= 1,
          "quadratic: A must be d x d with d = dim(center)");
  require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + a.cwiseAbs().maxCoeff()),
          "quadratic: A must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() > 0.0, "quadratic: A must be positive definite");
  NodeObjective f;
  f.kind_ = ObjectiveKind::Quadratic;
  f.dim_ = static_cast<int>(center.size());
  f.a_ = 0.5 * (a + a.transpose());
  f.center_ = std::move(center);
  f.bounds_ = {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
  return f;
}

void NodeObjective::check_dim(const Vector& x) const {
  if (x.size() != dim_)
    throw ParameterError("dimension mismatch: expected " + std::to_string(dim_) + ", got " +
                         std::to_string(x.size()));
}

double NodeObjective::value(const Vector& x) const {
  check_dim(x);
  if (kind_ == ObjectiveKind::Quadratic) {
    const Vector r = x - center_;
    return 0.5 * r.dot(a_ * r);
  }
  double s = 0.5 * reg_ * x.squaredNorm();
  const Vector margins = features_ * x;
  for (Eigen::Index l = 0; l < margins.size(); ++l) s += softplus(-labels_[l] * margins[l]);
  return s;
}

Vector NodeObjective::gradient(const Vector& x) const {
  check_dim(x);
  if (kind_ == ObjectiveKind::Quadratic) return a_ * (x - center_);
  Vector g = reg_ * x;
  const Vector margins = features_ * x;
  for (Eigen::Index l = 0; l < margins.size(); ++l) {
    const double v = labels_[l];
    g -= v * sigmoid(-v * margins[l]) * features_.row(l).transpose();
  }
  return g;
}

Matrix NodeObjective::hessian(const Vector& x) const {
  check_dim(x);
  if (kind_ == ObjectiveKind::Quadratic) return a_;
  Matrix h = reg_ * Matrix::Identity(dim_, dim_);
  const Vector margins = features_ * x;
  for (Eigen::Index l = 0; l < margins.size(); ++l) {
    const double s = sigmoid(labels_[l] * margins[l]);
    h.noalias() += s * (1.0 - s) * features_.row(l).transpose() * features_.row(l);
  }
  return h;
}

Problem::Problem(std::vector<NodeObjective> nodes, nlohmann::json metadata)
    : nodes_(std::move(nodes)), metadata_(std::move(metadata)) {
  require(nodes_.size() >= 2, "problem needs at least 2 nodes");
  dim_ = nodes_.front().dim();
  for (const auto& f : nodes_) require(f.dim() == dim_, "all nodes must share the dimension");
}

double Problem::total_value(const Vector& x) const {
  double s = 0.0;
  for (const auto& f : nodes_) s += f.value(x);
  return s;
}

Vector Problem::total_gradient(const Vector& x) const {
  Vector g = Vector::Zero(dim_);
  for (const auto& f : nodes_) g += f.gradient(x);
  return g;
}

Matrix Problem::total_hessian(const Vector& x) const {
  Matrix h = Matrix::Zero(dim_, dim_);
  for (const auto& f : nodes_) h += f.hessian(x);
  return h;
}

ConvexityBounds Problem::global_bounds() const {
  ConvexityBounds b = nodes_.front().bounds();
  for (const auto& f : nodes_) {
    b.m = std::min(b.m, f.bounds().m);
    b.M = std::max(b.M, f.bounds().M);
  }
  return b;
}

std::uint64_t Problem::digest() const {
  const std::string dump = to_json(*this).dump();
  return fnv1a(dump.data(), dump.size());
}

Problem make_logistic_problem(int n_nodes, int d, int samples_per_node, double lambda,
                              std::uint64_t seed, const LogisticGenerator& gen) {
  require(n_nodes >= 2 && d >= 1 && samples_per_node >= 1 && lambda > 0.0,
          "make_logistic_problem: needs n_nodes >= 2, positive sizes and lambda");
  require(gen.label_noise >= 0.0 && gen.label_noise <= 1.0, "label_noise must lie in [0,1]");
  Rng rng = make_rng(seed, "logistic-problem");
  Vector truth(d);
  for (int k = 0; k < d; ++k) truth[k] = standard_normal(rng);
  std::vector<NodeObjective> nodes;
  nodes.reserve(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    Matrix u(samples_per_node, d);
    Vector v(samples_per_node);
    for (int l = 0; l < samples_per_node; ++l) {
      for (int k = 0; k < d; ++k) u(l, k) = gen.feature_scale * standard_normal(rng);
      double label = u.row(l).dot(truth) >= 0.0 ? 1.0 : -1.0;
      if (uniform01(rng) < gen.label_noise) label = -label;
      v[l] = label;
    }
    nodes.push_back(NodeObjective::logistic(std::move(u), std::move(v), lambda / n_nodes));
  }
  nlohmann::json meta = {{"generator", "gaussian-logistic"},
                         {"lambda", lambda},
                         {"samples_per_node", samples_per_node},
                         {"label_noise", gen.label_noise},
                         {"feature_scale", gen.feature_scale},
                         {"seed", seed}};
  return Problem(std::move(nodes), std::move(meta));
}

Problem make_quadratic_problem(int n_nodes, const Matrix& a, double spread, std::uint64_t seed) {
  require(n_nodes >= 2, "make_quadratic_problem: n_nodes >= 2");
  Rng rng = make_rng(seed, "quadratic-problem");
  std::vector<NodeObjective> nodes;
  for (int i = 0; i < n_nodes; ++i) {
    Vector c(a.rows());
    for (Eigen::Index k = 0; k < c.size(); ++k) c[k] = spread * standard_normal(rng);
    nodes.push_back(NodeObjective::quadratic(a, std::move(c)));
  }
  return Problem(std::move(nodes), {{"generator", "gaussian-centers-quadratic"},
                                    {"spread", spread},
                                    {"seed", seed}});
}

Problem make_quadratic_problem(std::vector<Matrix> curvatures, std::vector<Vector> centers) {
  require(curvatures.size() == centers.size(), "one curvature per center");
  std::vector<NodeObjective> nodes;
  for (std::size_t i = 0; i < centers.size(); ++i)
    nodes.push_back(NodeObjective::quadratic(std::move(curvatures[i]), std::move(centers[i])));
  return Problem(std::move(nodes), {{"generator", "explicit-quadratic"}});
}

Vector solve_reference(const Problem& p, double tol, int max_iterations) {
  Vector x = Vector::Zero(p.dim());
  double fx = p.total_value(x);
  Vector g = p.total_gradient(x);
  for (int it = 0; it < max_iterations; ++it) {
    if (g.norm() <= tol) return x;
    const Eigen::LLT<Matrix> llt(p.total_hessian(x));
    if (llt.info() != Eigen::Success) throw SolverError("reference Newton: Hessian not SPD");
    const Vector step = -llt.solve(g);
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      const Vector trial = x + t * step;
      const double ft = p.total_value(trial);
      const Vector gt = p.total_gradient(trial);
      // Near the optimum F stagnates at round-off level; accept on a
      // gradient decrease as well.
      if (ft < fx || gt.norm() < g.norm()) {
        x = trial;
        fx = ft;
        g = gt;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  if (g.norm() <= tol) return x;
  throw SolverError("reference Newton did not reach |grad F| <= " + std::to_string(tol) +
                    " (final " + std::to_string(g.norm()) + ")");
}

namespace {

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from(const nlohmann::json& rows, Eigen::Index cols) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rows.at(r).at(c).get<double>();
  return m;
}

Vector vector_from(const nlohmann::json& arr) {
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = arr.at(k).get<double>();
  return v;
}

}  // namespace

nlohmann::json to_json(const Problem& p) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& f : p.nodes()) {
    if (f.kind() == ObjectiveKind::Logistic) {
      nodes.push_back({{"kind", "logistic"},
                       {"features", matrix_json(f.features())},
                       {"labels", std::vector<double>(f.labels().begin(), f.labels().end())},
                       {"reg", f.regularizer()}});
    } else {
      nodes.push_back({{"kind", "quadratic"},
                       {"A", matrix_json(f.curvature())},
                       {"center", std::vector<double>(f.center().begin(), f.center().end())}});
    }
  }
  return {{"dim", p.dim()}, {"nodes", nodes}, {"metadata", p.metadata()}};
}

Problem problem_from_json(const nlohmann::json& j) {
  try {
    const int d = j.at("dim").get<int>();
    std::vector<NodeObjective> nodes;
    for (const auto& n : j.at("nodes")) {
      const auto kind = n.at("kind").get<std::string>();
      if (kind == "logistic") {
        nodes.push_back(NodeObjective::logistic(matrix_from(n.at("features"), d),
                                                vector_from(n.at("labels")),
                                                n.at("reg").get<double>()));
      } else if (kind == "quadratic") {
        nodes.push_back(
            NodeObjective::quadratic(matrix_from(n.at("A"), d), vector_from(n.at("center"))));
      } else {
        throw ParameterError("unknown objective kind '" + kind + "'");
      }
    }
    return Problem(std::move(nodes), j.value("metadata", nlohmann::json::object()));
  } catch (const nlohmann::json::exception& ex) {
    throw ParameterError(std::string("malformed problem document: ") + ex.what());
  }
}

}  // namespace zopro
