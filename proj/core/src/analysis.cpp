#include "zopro/analysis.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace zopro {

namespace {

double lambda_min_sym(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SpectralError("eigenvalue solve failed");
  return es.eigenvalues()(0);
}

double lambda_max_sym(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SpectralError("eigenvalue solve failed");
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

// Per-node scalars expanded to an Nd diagonal.
Vector expand(const Vector& per_node, int d) {
  Vector out(per_node.size() * d);
  for (Eigen::Index i = 0; i < per_node.size(); ++i) out.segment(i * d, d).setConstant(per_node(i));
  return out;
}

Matrix kron_identity(const Matrix& p, int d) {
  const Eigen::Index n = p.rows();
  Matrix w = Matrix::Zero(n * d, n * d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (p(i, j) != 0.0) w.block(i * d, j * d, d, d).diagonal().setConstant(p(i, j));
  return w;
}

void node_blocks(const Problem& problem, Vector& m_blocks, Vector& big_m_blocks) {
  const int n = problem.num_nodes();
  m_blocks.resize(n);
  big_m_blocks.resize(n);
  for (int i = 0; i < n; ++i) {
    m_blocks(i) = problem.node(i).bounds().m;
    big_m_blocks(i) = problem.node(i).bounds().M;
  }
}

Matrix rows_of(const std::vector<Vector>& v) {
  Matrix out(v.size(), v.empty() ? 0 : v.front().size());
  for (std::size_t i = 0; i < v.size(); ++i) out.row(i) = v[i].transpose();
  return out;
}

Vector stack(const Matrix& rows) {
  Vector out(rows.size());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out.segment(i * rows.cols(), rows.cols()) = rows.row(i).transpose();
  return out;
}

struct GridPoint {
  double value = -std::numeric_limits<double>::infinity();
  double c1 = 0.0;
  double c2 = 0.0;
  int active = -1;
};

}  // namespace

Matrix block_diagonal(const std::vector<Matrix>& blocks) {
  Eigen::Index total = 0;
  for (const auto& b : blocks) total += b.rows();
  Matrix out = Matrix::Zero(total, total);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.block(at, at, b.rows(), b.cols()) = b;
    at += b.rows();
  }
  return out;
}

double eq13_margin(const Problem& problem, const Matrix& p_matrix, const std::vector<Matrix>& d,
                   double rho, double theta, double eta) {
  const int n = problem.num_nodes();
  const int dim = problem.dim();
  require(static_cast<int>(d.size()) == n, "one D block per node required");
  require(p_matrix.rows() == n && p_matrix.cols() == n, "weight matrix size mismatch");
  Vector lm, lbig;
  node_blocks(problem, lm, lbig);
  const Vector m_diag = expand(lm, dim);
  const Vector big_diag = expand(lbig, dim);
  const Vector gap = big_diag / theta - (big_diag + m_diag) / 2.0;
  Vector diag = big_diag / (2.0 * eta) + (2.0 / theta - 1.5) * big_diag - 1.5 * m_diag +
                gap.cwiseProduct(gap);
  diag.array() += rho;
  Matrix rhs = rho * kron_identity(p_matrix, dim);
  rhs.diagonal() += diag;
  return lambda_min_sym(block_diagonal(d) - rhs);
}

TheoremConstants theorem_constants(const Problem& problem, const WeightedGraph& graph,
                                   const AlgoConfig& cfg, const std::vector<Matrix>& d,
                                   double theta, double alpha_floor, double k_bound,
                                   const TheoremParams& params) {
  require(theta > 0.0 && theta <= 1.0, "theta must lie in (0, 1]");
  require(alpha_floor > 0.0 && alpha_floor <= 1.0, "alpha_floor must lie in (0, 1]");
  require(k_bound >= 0.0, "K must be nonnegative");
  require(params.grid >= 2 && params.c_min > 0.0 && params.c_max > params.c_min,
          "invalid (c1, c2) grid");
  const int n = problem.num_nodes();
  const int dim = problem.dim();
  const double rho = cfg.rho;

  TheoremConstants tc;
  tc.rho = rho;
  tc.theta = theta;
  tc.alpha_floor = alpha_floor;
  tc.k_bound = k_bound;
  tc.eta = params.eta;
  tc.beta = params.beta;
  node_blocks(problem, tc.lambda_m_blocks, tc.lambda_M_blocks);
  tc.m = tc.lambda_m_blocks.minCoeff();
  tc.M = tc.lambda_M_blocks.maxCoeff();

  const double inv_alpha = 1.0 / alpha_floor;
  if (!(params.eta > 1.0)) throw PreconditionError("eta must exceed 1", params.eta - 1.0);
  if (!(params.beta > inv_alpha))
    throw PreconditionError("beta must exceed 1/alpha_floor", params.beta - inv_alpha);
  tc.gamma_min = (2.0 * tc.m * (params.eta - 1.0) + params.eta + params.beta) / (params.eta - 1.0);
  tc.gamma = params.gamma > 0.0 ? params.gamma : 1.1 * tc.gamma_min;
  if (!(tc.gamma > tc.gamma_min))
    throw PreconditionError("gamma below its admissible minimum", tc.gamma - tc.gamma_min);

  const Matrix p = weight_matrix(graph);
  const auto spec = spectral_summary(p);
  tc.lambda_w = spec.lambda_w;
  tc.lambda_max_w = spec.lambda_max;

  tc.eq13_margin = eq13_margin(problem, p, d, rho, theta, params.eta);
  if (!(tc.eq13_margin > 0.0)) {
    std::ostringstream msg;
    msg << "D violates the sufficient condition: lambda_min margin " << tc.eq13_margin;
    throw PreconditionError(msg.str(), tc.eq13_margin);
  }

  const Vector m_diag = expand(tc.lambda_m_blocks, dim);
  const Vector big_diag = expand(tc.lambda_M_blocks, dim);
  const Matrix d_full = block_diagonal(d);
  const Matrix w = kron_identity(p, dim);
  const int nd = n * dim;

  tc.r_matrix = inv_alpha * d_full;
  tc.r_matrix.diagonal() += inv_alpha * (big_diag + m_diag) / 2.0;
  tc.q_matrix = Matrix::Zero(2 * nd, 2 * nd);
  tc.q_matrix.topLeftCorner(nd, nd) = rho * tc.r_matrix;
  tc.q_matrix.bottomRightCorner(nd, nd).setIdentity();

  const Vector bar = inv_alpha * (big_diag / theta - (big_diag + m_diag) / 2.0);
  Matrix kappa_mat = tc.r_matrix - rho * w;
  kappa_mat.diagonal() -= big_diag / (2.0 * params.eta) + bar.cwiseProduct(bar) / params.beta +
                          2.0 * bar + Vector::Constant(nd, rho);
  tc.kappa = lambda_min_sym(kappa_mat);
  if (!(tc.kappa > 0.0))
    throw PreconditionError("kappa is not positive although the condition on D holds", tc.kappa);

  tc.delta_c = (2.0 * tc.m - tc.gamma) * (1.0 - params.eta) - params.eta - params.beta;

  Matrix hd = d_full;
  hd.diagonal() += big_diag / theta;
  const double hd_norm = Eigen::JacobiSVD<Matrix>(hd).singularValues()(0);
  const double t1_base = rho * tc.lambda_w * tc.kappa / (2.0 * inv_alpha * inv_alpha * hd_norm * hd_norm);

  const Vector m_sq_scaled = big_diag.cwiseProduct(big_diag) / (rho * tc.lambda_w);
  auto evaluate = [&](double c1, double c2) {
    GridPoint gp;
    gp.c1 = c1;
    gp.c2 = c2;
    const double t1 = t1_base / (1.0 + c1);
    const double t2 = 1.0 / ((1.0 + 1.0 / c1) * (1.0 + c2));
    Matrix b_over_rho = tc.r_matrix;
    b_over_rho.diagonal() += (1.0 + 1.0 / c1) * (1.0 + 1.0 / c2) * m_sq_scaled;
    const double t3 = tc.delta_c / lambda_max_sym(b_over_rho);
    gp.value = std::min({t1, t2, t3});
    gp.active = gp.value == t1 ? 0 : (gp.value == t2 ? 1 : 2);
    return gp;
  };

  const double lo = std::log(params.c_min), hi = std::log(params.c_max);
  const double h = (hi - lo) / (params.grid - 1);
  GridPoint best;
  int best_i = 0, best_j = 0;
  for (int i = 0; i < params.grid; ++i)
    for (int j = 0; j < params.grid; ++j) {
      const auto gp = evaluate(std::exp(lo + i * h), std::exp(lo + j * h));
      if (gp.value > best.value) {
        best = gp;
        best_i = i;
        best_j = j;
      }
    }
  if (params.refine) {
    constexpr int kFine = 21;
    const double ci = lo + best_i * h, cj = lo + best_j * h;
    for (int a = 0; a < kFine; ++a)
      for (int b = 0; b < kFine; ++b) {
        const double l1 = std::clamp(ci - h + 2.0 * h * a / (kFine - 1), lo, hi);
        const double l2 = std::clamp(cj - h + 2.0 * h * b / (kFine - 1), lo, hi);
        const auto gp = evaluate(std::exp(l1), std::exp(l2));
        if (gp.value > best.value) best = gp;
      }
  }
  if (!(best.value > 0.0)) {
    std::ostringstream msg;
    msg << "no (c1, c2) on the grid gives a positive contraction factor (best " << best.value
        << ", delta_c " << tc.delta_c << ")";
    throw NumericFailure(msg.str());
  }
  tc.delta = best.value;
  tc.c1 = best.c1;
  tc.c2 = best.c2;
  tc.active_term = best.active;

  if (!params.exact_oracle) {
    const auto eb = smoothing_error_bounds(cfg.smoothing.mu, tc.M, n, dim, cfg.smoothing.batch, k_bound);
    tc.g1_sq = eb.g1_sq;
    tc.g2_sq = eb.g2_sq;
  }
  const double g1 = std::sqrt(tc.g1_sq), g2 = std::sqrt(tc.g2_sq);
  tc.g_offset = rho * (params.eta + (1.0 - params.eta) / tc.gamma) * tc.g2_sq +
                2.0 * (tc.g1_sq + tc.g2_sq) +
                2.0 * tc.delta * (1.0 + tc.c1) * (g1 + g2) * (g1 + g2) / tc.lambda_w;
  return tc;
}

nlohmann::json TheoremConstants::to_json() const {
  return {{"m", m},
          {"M", M},
          {"lambda_m_blocks", vector_json(lambda_m_blocks)},
          {"lambda_M_blocks", vector_json(lambda_M_blocks)},
          {"alpha_floor", alpha_floor},
          {"k_bound", k_bound},
          {"theta", theta},
          {"g1_sq", g1_sq},
          {"g2_sq", g2_sq},
          {"eta", eta},
          {"beta", beta},
          {"gamma", gamma},
          {"gamma_min", gamma_min},
          {"c1", c1},
          {"c2", c2},
          {"delta", delta},
          {"g_offset", g_offset},
          {"neighborhood", g_offset / delta},
          {"kappa", kappa},
          {"delta_c", delta_c},
          {"eq13_margin", eq13_margin},
          {"lambda_w", lambda_w},
          {"lambda_max_w", lambda_max_w},
          {"rho", rho},
          {"active_term", active_term}};
}

double k_bound_from_run(const Problem& problem, const RunRecord& run, double factor) {
  require(!run.snapshots.empty(), "k_bound_from_run needs recorded states");
  double worst = 0.0;
  for (const auto& snap : run.snapshots) {
    double sq = 0.0;
    for (int i = 0; i < problem.num_nodes(); ++i)
      sq += problem.node(i).gradient(snap.x[i]).squaredNorm();
    worst = std::max(worst, std::sqrt(sq));
  }
  return factor * worst;
}

QMetric::QMetric(const Problem& problem, const Matrix& p_matrix, const Vector& x_star,
                 double rho, Matrix r_matrix)
    : n_(problem.num_nodes()), d_(problem.dim()), rho_(rho), r_(std::move(r_matrix)) {
  require(p_matrix.rows() == n_, "weight matrix size mismatch");
  require(r_.rows() == n_ * d_ && r_.cols() == n_ * d_, "R must be Nd x Nd");
  require(x_star.size() == d_, "x_star dimension mismatch");
  const auto spec = spectral_summary(p_matrix);
  eigenvectors_ = spec.eigenvectors;
  inv_sqrt_ = Vector::Zero(n_);
  const double thr = 1e-9 * spec.lambda_max;
  for (int k = 0; k < n_; ++k) {
    if (spec.eigenvalues(k) > thr)
      inv_sqrt_(k) = 1.0 / std::sqrt(spec.eigenvalues(k));
    else
      null_ = eigenvectors_.col(k);
  }
  x_star_rows_ = x_star.transpose().replicate(n_, 1);
  Matrix grad_rows(n_, d_);
  for (int i = 0; i < n_; ++i) grad_rows.row(i) = problem.node(i).gradient(x_star).transpose();
  v_star_ = -(eigenvectors_ * inv_sqrt_.asDiagonal() * eigenvectors_.transpose()) * grad_rows;
}

Matrix QMetric::v_of(const Matrix& q_rows) const {
  const double leak = (null_.transpose() * q_rows).norm();
  if (leak > kConsistencyTol * std::max(1.0, q_rows.norm())) {
    std::ostringstream msg;
    msg << "dual has a consensus component of norm " << leak;
    throw NumericFailure(msg.str());
  }
  return eigenvectors_ * (inv_sqrt_.asDiagonal() * (eigenvectors_.transpose() * q_rows));
}

double QMetric::operator()(const std::vector<Vector>& x, const std::vector<Vector>& q) const {
  require(static_cast<int>(x.size()) == n_ && static_cast<int>(q.size()) == n_,
          "state count mismatch");
  const Vector e = stack(rows_of(x) - x_star_rows_);
  const Matrix dv = v_of(rows_of(q)) - v_star_;
  return rho_ * e.dot(r_ * e) + dv.squaredNorm();
}

double QMetric::operator()(const std::vector<NodeState>& states) const {
  std::vector<Vector> x, q;
  for (const auto& s : states) {
    x.push_back(s.x);
    q.push_back(s.q);
  }
  return (*this)(x, q);
}

double QMetric::operator()(const Snapshot& s) const { return (*this)(s.x, s.q); }

double q_distance(const std::vector<NodeState>& states, const Vector& x_star,
                  const Problem& problem, const Matrix& p_matrix, double rho,
                  const Matrix& r_matrix) {
  return QMetric(problem, p_matrix, x_star, rho, r_matrix)(states);
}

EnvelopeReport envelope_check(const std::vector<RunRecord>& runs,
                              const TheoremConstants& constants, const QMetric& metric,
                              bool assumption2_verified) {
  require(!runs.empty(), "envelope_check needs at least one run");
  std::size_t len = std::numeric_limits<std::size_t>::max();
  for (const auto& r : runs) {
    require(!r.snapshots.empty(), "envelope_check needs runs with recorded states");
    require(r.metadata.value("graph_digest", std::uint64_t{0}) ==
                    runs.front().metadata.value("graph_digest", std::uint64_t{0}) &&
                r.metadata.value("problem_digest", std::uint64_t{0}) ==
                    runs.front().metadata.value("problem_digest", std::uint64_t{0}),
            "envelope_check runs must share one scenario");
    len = std::min(len, r.snapshots.size());
  }

  EnvelopeReport rep;
  rep.seeds = static_cast<int>(runs.size());
  rep.seeds_sufficient = runs.size() >= 10;
  rep.assumption2_verified = assumption2_verified;
  rep.asymptote = constants.g_offset / constants.delta;
  rep.measured.assign(len, 0.0);
  for (const auto& r : runs)
    for (std::size_t k = 0; k < len; ++k) rep.measured[k] += metric(r.snapshots[k]);
  for (double& v : rep.measured) v /= static_cast<double>(runs.size());

  const double contraction = 1.0 - constants.delta;
  rep.bound.resize(len);
  double decay = 1.0;
  for (std::size_t k = 0; k < len; ++k) {
    rep.bound[k] = decay * rep.measured[0] + (1.0 - decay) * rep.asymptote;
    decay *= contraction;
  }
  const double slack = 1e-12 * std::max(1.0, rep.measured[0]);
  for (std::size_t k = 1; k < len; ++k)
    if (rep.measured[k] > rep.bound[k] + slack) ++rep.violations;
  rep.violation_fraction =
      len > 1 ? static_cast<double>(rep.violations) / static_cast<double>(len - 1) : 0.0;

  const std::size_t tail = std::max<std::size_t>(1, len / 10);
  for (std::size_t k = len - tail; k < len; ++k) rep.tail_average += rep.measured[k];
  rep.tail_average /= static_cast<double>(tail);
  rep.tail_within = rep.tail_average <= rep.asymptote + slack;
  return rep;
}

nlohmann::json EnvelopeReport::to_json() const {
  return {{"iterations", measured.size()},
          {"violations", violations},
          {"violation_fraction", violation_fraction},
          {"tail_average", tail_average},
          {"asymptote", asymptote},
          {"tail_within", tail_within},
          {"assumption2_verified", assumption2_verified},
          {"note", assumption2_verified ? "" : "hessian accuracy unverified"},
          {"seeds", seeds},
          {"seeds_sufficient", seeds_sufficient}};
}

void EnvelopeReport::write_csv(std::ostream& os) const {
  os << "k,measured,bound\n";
  for (std::size_t k = 0; k < measured.size(); ++k)
    os << k << ',' << format_double(measured[k]) << ',' << format_double(bound[k]) << '\n';
}

SlopeTrace slope_trace(const RunRecord& run) {
  SlopeTrace tr;
  const std::size_t rounds = run.slopes.size();
  if (rounds == 0) return tr;
  const std::size_t n = run.slopes.front().size();
  tr.per_node.assign(n, std::vector<double>(rounds, 0.0));
  for (std::size_t k = 0; k < rounds; ++k)
    for (std::size_t i = 0; i < n; ++i) tr.per_node[i][k] = run.slopes[k][i];

  const std::size_t window = std::max<std::size_t>(1, rounds / 10);
  tr.window_start = rounds - window;
  tr.final_window_min_abs = std::numeric_limits<double>::infinity();
  tr.per_node_final_min_abs.assign(n, std::numeric_limits<double>::infinity());
  for (std::size_t k = tr.window_start; k < rounds; ++k) {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = std::abs(run.slopes[k][i]);
      worst = std::max(worst, a);
      tr.per_node_final_min_abs[i] = std::min(tr.per_node_final_min_abs[i], a);
    }
    tr.final_window_min_abs = std::min(tr.final_window_min_abs, worst);
  }
  return tr;
}

nlohmann::json SlopeTrace::to_json() const {
  return {{"rounds", per_node.empty() ? 0 : per_node.front().size()},
          {"window_start", window_start},
          {"final_window_min_abs", final_window_min_abs},
          {"per_node_final_min_abs", per_node_final_min_abs}};
}

}  // namespace zopro
