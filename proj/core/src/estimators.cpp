#include "zopro/estimators.hpp"

#include "zopro/seeding.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace zopro {

DirectionMode parse_direction_mode(const std::string& name) {
  if (name == "fresh_per_iteration" || name == "fresh") return DirectionMode::FreshPerIteration;
  if (name == "fixed_at_init" || name == "fixed") return DirectionMode::FixedAtInit;
  throw ParameterError("unknown direction mode '" + name + "'");
}

std::string to_string(DirectionMode mode) {
  return mode == DirectionMode::FreshPerIteration ? "fresh_per_iteration" : "fixed_at_init";
}

void SmoothingConfig::validate() const {
  require(mu > 0.0 && std::isfinite(mu), "smoothing: mu must be positive");
  require(batch >= 1, "smoothing: batch must be >= 1");
}

DirectionSet sample_directions(const SmoothingConfig& cfg, int d, std::int64_t round) {
  cfg.validate();
  require(d >= 1, "sample_directions: d must be >= 1");
  const auto key = cfg.direction_mode == DirectionMode::FixedAtInit
                       ? std::uint64_t{0}
                       : static_cast<std::uint64_t>(round) + 1;
  Rng rng = make_rng(cfg.rng_seed, "directions", {key});
  DirectionSet set{Matrix(d, cfg.batch)};
  for (int j = 0; j < cfg.batch; ++j)
    for (int k = 0; k < d; ++k) set.directions(k, j) = standard_normal(rng);
  return set;
}

namespace {

double checked(const ValueOracle& f, const Vector& point) {
  const double v = f(point);
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << "non-finite objective value " << v << " at probe point";
    throw NumericError(os.str(), point);
  }
  return v;
}

}  // namespace

Vector grad_estimate(const ValueOracle& f, const Vector& x, const DirectionSet& dirs, double mu) {
  require(mu > 0.0, "grad_estimate: mu must be positive");
  require(dirs.dim() == x.size(), "grad_estimate: direction dimension mismatch");
  const double fx = checked(f, x);
  Vector g = Vector::Zero(x.size());
  for (int j = 0; j < dirs.batch(); ++j) {
    const auto u = dirs.direction(j);
    const double fp = checked(f, x + mu * u);
    g += ((fp - fx) / mu) * u;
  }
  return g / dirs.batch();
}

Matrix hessian_estimate(const ValueOracle& f, const Vector& x, const DirectionSet& dirs,
                        double mu) {
  require(mu > 0.0, "hessian_estimate: mu must be positive");
  require(dirs.dim() == x.size(), "hessian_estimate: direction dimension mismatch");
  return joint_estimate(f, x, dirs, mu).hessian;
}

ZerothOrderEstimate joint_estimate(const ValueOracle& f, const Vector& x,
                                   const DirectionSet& dirs, double mu) {
  require(mu > 0.0, "joint_estimate: mu must be positive");
  require(dirs.dim() == x.size(), "joint_estimate: direction dimension mismatch");
  const auto d = x.size();
  ZerothOrderEstimate est;
  est.fx = checked(f, x);
  est.gradient = Vector::Zero(d);
  est.hessian = Matrix::Zero(d, d);
  for (int j = 0; j < dirs.batch(); ++j) {
    const auto u = dirs.direction(j);
    const double fp = checked(f, x + mu * u);
    const double fm = checked(f, x - mu * u);
    est.gradient += ((fp - est.fx) / mu) * u;
    const double curvature = (fp + fm - 2.0 * est.fx) / (2.0 * mu * mu);
    est.hessian.selfadjointView<Eigen::Lower>().rankUpdate(u, curvature);
  }
  est.gradient /= dirs.batch();
  est.hessian = est.hessian.selfadjointView<Eigen::Lower>();
  est.hessian /= dirs.batch();
  est.hessian = 0.5 * (est.hessian + est.hessian.transpose()).eval();
  est.queries = 2 * static_cast<std::int64_t>(dirs.batch()) + 1;
  return est;
}

SmoothingErrorBounds smoothing_error_bounds(double mu, double M, int n_nodes, int d, int batch,
                                            double k_bound) {
  require(mu > 0.0 && M > 0.0 && n_nodes >= 1 && d >= 1 && batch >= 1 && k_bound >= 0.0,
          "smoothing_error_bounds: arguments must be positive");
  const double nd = static_cast<double>(n_nodes) * d;
  SmoothingErrorBounds b;
  b.k_bound = k_bound;
  b.g1_sq = 2.0 * nd * (mu * mu * M * M * nd + k_bound * k_bound) / batch;
  b.g2_sq = 0.25 * mu * mu * M * M * std::pow(nd + 3.0, 3);
  return b;
}

std::optional<double> theta_for_pair(const Matrix& exact_hessian, const Matrix& h_est,
                                     double* min_ratio, double* max_ratio) {
  const Eigen::LLT<Matrix> llt(h_est);
  if (llt.info() != Eigen::Success) return std::nullopt;
  Eigen::SelfAdjointEigenSolver<Matrix> check(h_est, Eigen::EigenvaluesOnly);
  if (!(check.eigenvalues().minCoeff() > 0.0)) return std::nullopt;
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(exact_hessian, h_est,
                                                       Eigen::EigenvaluesOnly);
  if (ges.info() != Eigen::Success) return std::nullopt;
  const double lo = ges.eigenvalues().minCoeff();
  const double hi = ges.eigenvalues().maxCoeff();
  if (min_ratio) *min_ratio = lo;
  if (max_ratio) *max_ratio = hi;
  const double theta = std::min({lo, 2.0 - hi, 1.0});
  if (!(theta > 0.0)) return std::nullopt;
  return theta;
}

namespace {

HessianSource zeroth_order_source(const Problem& problem, const SmoothingConfig& cfg) {
  return [&problem, cfg](int i, int k, const Vector& x) {
    const auto dirs = sample_directions(cfg, problem.dim(), k);
    const auto& f = problem.node(i);
    const ValueOracle oracle = [&f](const Vector& p) { return f.value(p); };
    return joint_estimate(oracle, x, dirs, cfg.mu).hessian;
  };
}

ThetaProbe probe_all(const Problem& problem, const std::vector<std::vector<Vector>>& snapshots,
                     const HessianSource& estimate) {
  require(!snapshots.empty(), "assumption2_theta: need at least one point");
  ThetaProbe out;
  out.satisfied = true;
  out.theta = 1.0;
  out.min_ratio = std::numeric_limits<double>::infinity();
  out.max_ratio = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    for (int i = 0; i < problem.num_nodes(); ++i) {
      const auto& f = problem.node(i);
      const Vector& x = snapshots[k].size() == 1 ? snapshots[k][0] : snapshots[k].at(i);
      const Matrix h_est = estimate(i, static_cast<int>(k), x);
      double lo = 0.0, hi = 0.0;
      const auto theta = theta_for_pair(f.hessian(x), h_est, &lo, &hi);
      if (!theta) {
        if (out.satisfied) {
          out.satisfied = false;
          out.worst_node = i;
          out.worst_point = static_cast<int>(k);
          Eigen::SelfAdjointEigenSolver<Matrix> es(h_est, Eigen::EigenvaluesOnly);
          std::ostringstream os;
          if (es.eigenvalues().minCoeff() <= 0.0)
            os << "estimated Hessian not positive definite (lambda_min="
               << es.eigenvalues().minCoeff() << ")";
          else
            os << "generalized eigenvalues [" << lo << ", " << hi
               << "] admit no theta in (0,1]";
          os << " at node " << i << ", point " << k;
          out.reason = os.str();
        }
        out.theta = 0.0;
        continue;
      }
      out.min_ratio = std::min(out.min_ratio, lo);
      out.max_ratio = std::max(out.max_ratio, hi);
      if (out.satisfied && *theta < out.theta) {
        out.theta = *theta;
        out.worst_node = i;
        out.worst_point = static_cast<int>(k);
      }
    }
  }
  return out;
}

}  // namespace

ThetaProbe assumption2_theta(const Problem& problem, const std::vector<Vector>& points,
                             const SmoothingConfig& cfg) {
  std::vector<std::vector<Vector>> snapshots;
  snapshots.reserve(points.size());
  for (const auto& p : points) snapshots.push_back({p});
  return probe_all(problem, snapshots, zeroth_order_source(problem, cfg));
}

ThetaProbe assumption2_theta(const Problem& problem,
                             const std::vector<std::vector<Vector>>& snapshots,
                             const SmoothingConfig& cfg) {
  return probe_all(problem, snapshots, zeroth_order_source(problem, cfg));
}

ThetaProbe assumption2_theta(const Problem& problem,
                             const std::vector<std::vector<Vector>>& snapshots,
                             const HessianSource& estimate) {
  return probe_all(problem, snapshots, estimate);
}

}  // namespace zopro
