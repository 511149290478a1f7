#pragma once

#include <functional>
#include <string>

#include "dsl/common.hpp"
#include "dsl/cox.hpp"
#include "dsl/data_model.hpp"
#include "dsl/logistic.hpp"
#include "dsl/simulator.hpp"

namespace dsl {

enum class Misspec { none, wrong_s, wrong_e, wrong_g };

std::string misspec_name(Misspec m);
Misspec misspec_from_name(const std::string& name);

/// The nuisance triple (S^w, G^w, e^w). Outputs are clipped: survival and
/// censoring into [eps_clip, 1], propensity into [eps_clip, 1 - eps_clip].
/// Oracle sets use eps_clip = 0 so the identification and robustness
/// identities hold exactly (the fitted default 0.025 operationalizes the
/// positivity constants).
struct NuisanceSet {
  std::function<double(const VecRef& x, double t, int w)> survival;
  std::function<double(const VecRef& x, double t, int w)> censoring;
  std::function<double(const VecRef& x, int w)> propensity;
  double eps_clip = 0.0;
  std::string provenance;
  int nonconverged_fits = 0;
  bool logistic_ridged = false;
};

constexpr double kDefaultEpsClip = 0.025;

/// Per-arm Cox fits for the event and censoring distributions plus one
/// pooled logistic fit for the propensity score.
NuisanceSet fit_nuisance_set(const Dataset& train,
                             double eps_clip = kDefaultEpsClip);

/// Analytically true nuisance functions for a simulation scenario. A
/// misspecification tag replaces exactly one component with a fixed wrong
/// function: wrong_s and wrong_g use exp(-t / median_u) where median_u is
/// the median observed time under the scenario (computed once from a
/// fixed-seed draw); wrong_e sets e^1(x) = 0.5 everywhere.
NuisanceSet oracle_nuisance(const Scenario& sc, Misspec misspec = Misspec::none,
                            double eps_clip = 0.0);

/// Median observed time under the scenario, from a deterministic internal
/// draw. Exposed because the misspecified nuisance functions depend on it.
double scenario_median_u(const Scenario& sc);

}  // namespace dsl
