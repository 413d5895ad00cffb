#include "zopro/objectives.hpp"
#include "zopro/seeding.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace zopro {
namespace {

Vector gaussian(Rng& rng, int d, double scale = 1.0) {
  Vector v(d);
  for (int k = 0; k < d; ++k) v(k) = scale * standard_normal(rng);
  return v;
}

NodeObjective one_sample(double u0, double u1, double label, double reg) {
  Matrix u(1, 2);
  u << u0, u1;
  Vector v(1);
  v << label;
  return NodeObjective::logistic(u, v, reg);
}

// A few logistic and quadratic objectives of varied shape.
std::vector<NodeObjective> sample_objectives() {
  std::vector<NodeObjective> out;
  const auto lp = make_logistic_problem(3, 4, 6, 0.7, 21);
  for (const auto& n : lp.nodes()) out.push_back(n);
  Rng rng(5);
  for (int k = 0; k < 3; ++k) {
    Matrix b(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) b(i, j) = standard_normal(rng);
    out.push_back(NodeObjective::quadratic(b * b.transpose() + 0.5 * Matrix::Identity(4, 4), gaussian(rng, 4)));
  }
  return out;
}

TEST(ObjectiveValue, LogisticAtOriginIsSampleCountTimesLog2) {
  const auto p = make_logistic_problem(4, 3, 5, 1.0, 2);
  for (const auto& n : p.nodes()) EXPECT_NEAR(n.value(Vector::Zero(3)), 5.0 * std::log(2.0), 1e-14);
}

TEST(ObjectiveValue, QuadraticHalfSquaredNorm) {
  const auto f = NodeObjective::quadratic(Matrix::Identity(2, 2), Vector::Zero(2));
  EXPECT_DOUBLE_EQ(f.value(Eigen::Vector2d(3, 4)), 12.5);
}

TEST(ObjectiveValue, SoftplusStableFarFromOrigin) {
  const auto f = one_sample(1, 0, 1, 1.0);
  EXPECT_NEAR(f.value(Eigen::Vector2d(10, 0)), 50.0 + std::log1p(std::exp(-10.0)), 1e-12);
  EXPECT_NEAR(f.value(Eigen::Vector2d(10, 0)), 50.0000454, 1e-7);
  // Large margins neither overflow nor lose the linear branch.
  EXPECT_TRUE(std::isfinite(f.value(Eigen::Vector2d(-1e4, 0))));
  EXPECT_NEAR(softplus(800.0), 800.0, 1e-12);
  EXPECT_NEAR(softplus(-800.0), 0.0, 1e-300);
}

TEST(ObjectiveValue, DimensionMismatchIsParameterError) {
  const auto f = NodeObjective::quadratic(Matrix::Identity(2, 2), Vector::Zero(2));
  EXPECT_THROW(f.value(Vector::Zero(3)), ParameterError);
  EXPECT_THROW(f.gradient(Vector::Zero(1)), ParameterError);
  EXPECT_THROW(f.hessian(Vector::Zero(1)), ParameterError);
}

TEST(ObjectiveGradient, Examples) {
  // The regularizer gradient vanishes at the origin.
  const auto g = one_sample(1, 0, 1, 0.3).gradient(Vector::Zero(2));
  EXPECT_NEAR(g(0), -0.5, 1e-15);
  EXPECT_NEAR(g(1), 0.0, 1e-15);
  const auto q = NodeObjective::quadratic(Matrix::Identity(2, 2), Vector::Ones(2));
  EXPECT_EQ(q.gradient(Vector::Ones(2)), Vector::Zero(2));
}

TEST(ObjectiveGradient, MatchesCentralDifferences) {
  Rng rng(1);
  const double h = 1e-6;
  for (const auto& f : sample_objectives())
    for (int t = 0; t < 100; ++t) {
      const Vector x = gaussian(rng, f.dim());
      const Vector g = f.gradient(x);
      Vector fd(f.dim());
      for (int k = 0; k < f.dim(); ++k) {
        Vector e = Vector::Zero(f.dim());
        e(k) = h;
        fd(k) = (f.value(x + e) - f.value(x - e)) / (2 * h);
      }
      EXPECT_LE((g - fd).norm(), 1e-5 * std::max(1.0, g.norm()));
    }
}

TEST(ObjectiveHessian, Examples) {
  Matrix a(2, 2);
  a << 2, 0.5, 0.5, 3;
  const auto q = NodeObjective::quadratic(a, Vector::Zero(2));
  EXPECT_EQ(q.hessian(Eigen::Vector2d(7, -2)), a);
  const Matrix h = one_sample(1, 0, 1, 0.3).hessian(Vector::Zero(2));
  EXPECT_NEAR(h(0, 0), 0.55, 1e-15);
  EXPECT_EQ(h(0, 1), 0.0);
  EXPECT_NEAR(h(1, 1), 0.3, 1e-15);
}

TEST(ObjectiveHessian, MatchesDifferencesOfGradient) {
  Rng rng(2);
  const double h = 1e-6;
  for (const auto& f : sample_objectives())
    for (int t = 0; t < 50; ++t) {
      const Vector x = gaussian(rng, f.dim());
      const Matrix hx = f.hessian(x);
      Matrix fd(f.dim(), f.dim());
      for (int k = 0; k < f.dim(); ++k) {
        Vector e = Vector::Zero(f.dim());
        e(k) = h;
        fd.col(k) = (f.gradient(x + e) - f.gradient(x - e)) / (2 * h);
      }
      EXPECT_LE((hx - fd).norm(), 1e-4 * std::max(1.0, hx.norm()));
    }
}

TEST(ConvexityBoundsTest, Examples) {
  const auto b = one_sample(1, 0, 1, 1.0).bounds();
  EXPECT_DOUBLE_EQ(b.m, 1.0);
  EXPECT_DOUBLE_EQ(b.M, 1.25);
  Matrix a = Matrix::Zero(2, 2);
  a.diagonal() << 2, 5;
  const auto qb = NodeObjective::quadratic(a, Vector::Zero(2)).bounds();
  EXPECT_NEAR(qb.m, 2.0, 1e-12);
  EXPECT_NEAR(qb.M, 5.0, 1e-12);
}

TEST(ConvexityBoundsTest, SandwichHessianAtRandomPoints) {
  Rng rng(3);
  for (const auto& f : sample_objectives()) {
    const auto b = f.bounds();
    ASSERT_GT(b.m, 0.0);
    ASSERT_LE(b.m, b.M);
    for (int t = 0; t < 100; ++t) {
      const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(f.hessian(gaussian(rng, f.dim(), 3.0))).eigenvalues();
      EXPECT_GE(ev.minCoeff(), b.m - 1e-10);
      EXPECT_LE(ev.maxCoeff(), b.M + 1e-10);
    }
  }
}

TEST(ConvexityBoundsTest, StrongConvexityAndSmoothnessCertificates) {
  Rng rng(4);
  for (const auto& f : sample_objectives()) {
    const auto b = f.bounds();
    for (int t = 0; t < 100; ++t) {
      const Vector x = gaussian(rng, f.dim(), 2.0), y = gaussian(rng, f.dim(), 2.0);
      const double lower = f.value(x) + f.gradient(x).dot(y - x) + 0.5 * b.m * (y - x).squaredNorm();
      EXPECT_GE(f.value(y), lower - 1e-9);
      EXPECT_LE((f.gradient(x) - f.gradient(y)).norm(), b.M * (x - y).norm() * (1 + 1e-12));
    }
  }
}

TEST(LogisticProblem, FullScaleShapeAndDeterminism) {
  const auto p = make_logistic_problem(50, 20, 5, 1.0, 9);
  ASSERT_EQ(p.num_nodes(), 50);
  EXPECT_EQ(p.dim(), 20);
  for (const auto& n : p.nodes()) {
    EXPECT_EQ(n.features().rows(), 5);
    EXPECT_DOUBLE_EQ(n.regularizer(), 1.0 / 50);
    for (int l = 0; l < 5; ++l) EXPECT_TRUE(n.labels()(l) == 1.0 || n.labels()(l) == -1.0);
  }
  const auto again = make_logistic_problem(50, 20, 5, 1.0, 9);
  EXPECT_EQ(p.digest(), again.digest());
  EXPECT_EQ(to_json(p).dump(), to_json(again).dump());
  EXPECT_NE(p.digest(), make_logistic_problem(50, 20, 5, 1.0, 10).digest());
}

TEST(LogisticProblem, GoldenFixture) {
  const auto p = make_logistic_problem(2, 1, 1, 1.0, 3);
  test::check_golden("logistic_n2_d1_q1_seed3.json", to_json(p).dump(2) + "\n");
}

TEST(LogisticProblem, JsonRoundTripPreservesDigest) {
  const auto p = make_logistic_problem(4, 3, 5, 2.0, 8);
  EXPECT_EQ(problem_from_json(to_json(p)).digest(), p.digest());
  const auto q = make_quadratic_problem(3, Matrix::Identity(2, 2) * 2.0, 1.5, 4);
  EXPECT_EQ(problem_from_json(to_json(q)).digest(), q.digest());
}

TEST(SolveReference, QuadraticsGiveMeanOfCenters) {
  const auto p = make_quadratic_problem(6, Matrix::Identity(3, 3), 2.0, 17);
  Vector mean = Vector::Zero(3);
  for (const auto& n : p.nodes()) mean += n.center() / 6.0;
  EXPECT_LE((solve_reference(p) - mean).norm(), 1e-12);
}

TEST(SolveReference, SymmetricLogisticDataGivesOrigin) {
  Rng rng(6);
  std::vector<NodeObjective> nodes;
  for (int i = 0; i < 3; ++i) {
    Matrix u(4, 3);
    Vector v(4);
    for (int l = 0; l < 2; ++l) {
      const Vector row = gaussian(rng, 3);
      const double label = l % 2 ? 1.0 : -1.0;
      u.row(2 * l) = row.transpose();
      v(2 * l) = label;
      u.row(2 * l + 1) = row.transpose();
      v(2 * l + 1) = -label;
    }
    nodes.push_back(NodeObjective::logistic(u, v, 0.3));
  }
  EXPECT_LE(solve_reference(Problem(nodes)).norm(), 1e-12);
}

TEST(SolveReference, OptimalityProbe) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto p = make_logistic_problem(8, 5, 5, 0.5, s);
    const double tol = 1e-10;
    const Vector x = solve_reference(p, tol);
    EXPECT_LE(p.total_gradient(x).norm(), tol);
    const double fx = p.total_value(x);
    for (int k = 0; k < p.dim(); ++k)
      for (double eps : {1e-4, -1e-4}) {
        Vector e = Vector::Zero(p.dim());
        e(k) = eps;
        EXPECT_LE(fx, p.total_value(x + e));
      }
  }
}

TEST(ProblemCtor, RejectsMixedDimensionsAndSingleNode) {
  const auto a = NodeObjective::quadratic(Matrix::Identity(2, 2), Vector::Zero(2));
  const auto b = NodeObjective::quadratic(Matrix::Identity(3, 3), Vector::Zero(3));
  EXPECT_THROW(Problem({a, b}), ParameterError);
  EXPECT_THROW(Problem({a}), ParameterError);
  EXPECT_THROW(NodeObjective::quadratic(-Matrix::Identity(2, 2), Vector::Zero(2)), ParameterError);
  Matrix u(1, 1);
  u << 1;
  Vector v(1);
  v << 0.5;
  EXPECT_THROW(NodeObjective::logistic(u, v, 1.0), ParameterError);
}

}  // namespace
}  // namespace zopro
