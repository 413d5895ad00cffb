#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace zopro {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Error hierarchy. The CLI maps ParameterError to exit code 2 and every
// NumericFailure subclass to exit code 3.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SpectralError : public NumericFailure {
 public:
  using NumericFailure::NumericFailure;
};

class SolverError : public NumericFailure {
 public:
  using NumericFailure::NumericFailure;
};

// Non-finite objective value at a probe point.
class NumericError : public NumericFailure {
 public:
  NumericError(const std::string& what, Vector probe)
      : NumericFailure(what), probe_(std::move(probe)) {}
  const Vector& probe() const { return probe_; }

 private:
  Vector probe_;
};

// H + D not safely positive definite.
class ConditioningError : public NumericFailure {
 public:
  ConditioningError(const std::string& what, double lambda_min)
      : NumericFailure(what), lambda_min_(lambda_min) {}
  double lambda_min() const { return lambda_min_; }

 private:
  double lambda_min_;
};

// A convergence precondition (the matrix condition on D or a parameter
// constraint) does not hold.
class PreconditionError : public NumericFailure {
 public:
  PreconditionError(const std::string& what, double margin)
      : NumericFailure(what), margin_(margin) {}
  double margin() const { return margin_; }

 private:
  double margin_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ParameterError(msg);
}

}  // namespace zopro
