#pragma once

#include "dsl/common.hpp"

namespace dsl {

struct LogisticModel {
  double intercept = 0.0;
  VectorXd coefficients;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  bool ridged = false;  // separation fallback was used
};

/// Maximum-likelihood logistic regression by Newton (IRLS) with
/// step-halving. On separation (unbounded linear predictors or a singular
/// information matrix) the fit restarts with an L2 penalty of 1e-6 on the
/// slopes.
LogisticModel fit_logistic(const MatrixXd& x, const VectorXi& y,
                           int max_iterations = 100, double tol = 1e-8);

/// P(W=w | x) under the model; eps_clip > 0 clips into
/// [eps_clip, 1 - eps_clip].
double predict_propensity(const LogisticModel& model, const VecRef& x, int w,
                          double eps_clip = 0.0);

/// Unpenalized log-likelihood at the given parameters (brute-force oracle
/// surface used in tests).
double logistic_loglik(const MatrixXd& x, const VectorXi& y, double intercept,
                       const VecRef& coefficients);

}  // namespace dsl
