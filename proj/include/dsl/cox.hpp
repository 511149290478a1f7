#pragma once

#include "dsl/common.hpp"
#include "dsl/data_model.hpp"
#include "dsl/step_function.hpp"

namespace dsl {

enum class CoxOutcome { event, censoring };

struct CoxFitDiagnostics {
  int iterations = 0;
  double grad_norm = 0.0;  // infinity norm at exit
  bool converged = false;
};

/// Proportional hazards model with a Breslow baseline cumulative hazard:
/// S(t | x) = exp(-Lambda0(t) * exp(coefficients' x)). Beyond the last
/// observed event time the baseline is held constant.
struct CoxModel {
  VectorXd coefficients;
  StepFunction baseline_cumhaz;  // nondecreasing, starts at 0
  CoxFitDiagnostics diagnostics;
};

/// Newton-Raphson maximization of the Breslow-ties partial likelihood with
/// step-halving (accepted steps never decrease the log-likelihood).
/// Convergence at gradient infinity-norm <= tol. For censoring fits the
/// event indicator is 1 - delta.
CoxModel fit_cox(const Dataset& arm_data, CoxOutcome outcome,
                 int max_iterations = 100, double tol = 1e-8);

double cox_survival(const CoxModel& model, const VecRef& x, double t);

/// Breslow-ties partial log-likelihood at the given coefficients (also the
/// brute-force oracle surface used in tests).
double cox_partial_loglik(const Dataset& arm_data, CoxOutcome outcome,
                          const VecRef& coefficients);

}  // namespace dsl
