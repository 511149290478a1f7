#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace dsl {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;
using VecRef = Eigen::Ref<const Eigen::VectorXd>;

inline double expit(double z) {
  // symmetric form avoids overflow for large |z|
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

inline double clamp_prob(double p, double lo, double hi) {
  if (p < lo) return lo;
  if (p > hi) return hi;
  return p;
}

/// Thrown when inputs violate a documented precondition.
class invalid_input : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical routine fails to produce a usable result.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown on filesystem read/write failures.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dsl
