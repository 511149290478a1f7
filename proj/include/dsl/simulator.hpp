#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "dsl/common.hpp"
#include "dsl/data_model.hpp"
#include "dsl/rng.hpp"

namespace dsl {

/// Evenly spaced coefficient vector from lo to hi (decreasing allowed).
VectorXd linspace_coeffs(double lo, double hi, int d);

/// n x d matrix of i.i.d. Uniform[-3,3] covariates, deterministic per seed.
MatrixXd gen_covariates(Eigen::Index n, int d, std::uint64_t seed);

/// Inverse-transform draw from the Weibull proportional hazards model with
/// cumulative hazard lambda * t^nu * exp(eta).
double sample_weibull_cox(double lambda, double nu, double eta, double uniform_draw);

/// Weibull-Cox survival and exponential censoring, logistic treatment.
struct Case1Params {
  Eigen::Index n = 0;
  int d = 0;
  double lambda = 0.1;    // Weibull scale
  double nu = 1.2;        // Weibull shape
  double lambda_c = 0.2;  // censoring rate scale
  VectorXd alpha;         // propensity
  VectorXd beta;          // baseline log-hazard
  VectorXd theta;         // treatment interaction
  VectorXd gamma;         // censoring log-hazard

  static Case1Params defaults(Eigen::Index n, int d);
  void validate() const;
};

/// Same survival/censoring mechanism as Case 1; the treatment assignment is
/// a nonlinear function of eta = alpha'x.
struct Case2Params {
  Eigen::Index n = 0;
  int d = 0;
  double lambda = 0.1;
  double nu = 1.2;
  double lambda_c = 0.2;
  VectorXd alpha;
  VectorXd beta;
  VectorXd theta;
  VectorXd gamma;

  static Case2Params defaults(Eigen::Index n, int d);
  void validate() const;
};

/// Non-proportional hazards with a time-varying treatment effect:
/// lambda(t) = lambda0 * exp{ g(x) + w * h(x) * sin(v(x) t) } with
/// g = beta'x, u = gamma'x, v = theta'x, h = 0.5 cos(u) + 0.2 u^2.
/// The censoring and propensity mechanisms reuse the Case 1 forms; the
/// paper reuses the symbol gamma for both the h-argument and the censoring
/// coefficients, kept apart here as gamma vs gamma_cens.
struct Case3Params {
  Eigen::Index n = 0;
  int d = 0;
  double lambda0 = 0.05;
  double lambda_c = 0.05;
  VectorXd beta;        // g
  VectorXd gamma;       // u (argument of h)
  VectorXd theta;       // v (sinusoid frequency)
  VectorXd alpha;       // propensity, Case 1 form
  VectorXd gamma_cens;  // censoring, Case 1 form

  static Case3Params defaults(Eigen::Index n, int d);
  void validate() const;
};

using Scenario = std::variant<Case1Params, Case2Params, Case3Params>;

int scenario_case(const Scenario& sc);        // 1, 2 or 3
Eigen::Index scenario_n(const Scenario& sc);
int scenario_dim(const Scenario& sc);
Scenario make_scenario(int case_id, Eigen::Index n, int d);

/// True propensity P(W=1 | X=x) for the scenario.
double true_propensity(const Scenario& sc, const VecRef& x);

/// True conditional survival of the event time, P(T > t | X=x, W=w).
/// Case 3 with w=1 integrates the hazard by adaptive quadrature (1e-8).
double true_survival(const Scenario& sc, const VecRef& x, double t, int w);

/// True conditional survival of the censoring time.
double true_censoring_survival(const Scenario& sc, const VecRef& x, double t);

/// Closed-form (Cases 1-2) or quadrature-based (Case 3) CATE on the
/// survival probability at time t.
double true_cate(const Scenario& sc, const VecRef& x, double t);

/// Incremental CATE evaluation over an ascending time grid; one pass of the
/// Case 3 integral instead of J independent quadratures.
VectorXd true_cate_grid(const Scenario& sc, const VecRef& x, const VectorXd& times);

/// Draws (W, T, C) given X=x under a scenario. Case 3 treated-arm event
/// times are sampled by inverting the cumulative hazard with a panel cache
/// that is reused across draws for the same x.
class ConditionalSampler {
 public:
  ConditionalSampler(const Scenario& sc, VectorXd x);

  struct Draw {
    int w;
    double t;
    double c;
    double u() const { return t < c ? t : c; }
    int delta() const { return t <= c ? 1 : 0; }
  };

  Draw draw(Rng& rng);
  double propensity() const { return propensity_; }
  int cap_breaches() const { return cap_breaches_; }

  /// Event time draw for a forced arm (used by arm-specific checks).
  double draw_event_time(Rng& rng, int w);
  double draw_censoring_time(Rng& rng);

 private:
  Scenario scenario_;
  VectorXd x_;
  double propensity_ = 0.0;
  // cached per-x quantities
  double eta_event_base_ = 0.0;   // beta'x (cases 1-2) or g(x) (case 3)
  double eta_event_treat_ = 0.0;  // beta'x + theta'x (cases 1-2)
  double eta_cens_ = 0.0;
  double h_ = 0.0;                // case 3
  double v_ = 0.0;                // case 3
  std::vector<double> panel_cumhaz_;  // case 3 prefix integrals
  double panel_width_ = 0.0;
  int cap_breaches_ = 0;

  double case3_cumhaz(double t);      // extends the prefix cache on demand
  double case3_invert(double target);  // bisection to 1e-10; NaN above cap
};

/// A generated dataset plus the latent times and generator provenance.
struct SimulatedDataset {
  Dataset dataset;
  Scenario scenario;
  VectorXd latent_t;
  VectorXd latent_c;
  int cap_breach_count = 0;  // case 3 inversion restarts
};

SimulatedDataset gen_case1(const Case1Params& params, std::uint64_t seed);
SimulatedDataset gen_case2(const Case2Params& params, std::uint64_t seed);
SimulatedDataset gen_case3(const Case3Params& params, std::uint64_t seed);
SimulatedDataset gen_scenario(const Scenario& sc, std::uint64_t seed);

}  // namespace dsl
