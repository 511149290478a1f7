#pragma once

#include <string>
#include <variant>
#include <vector>

#include "dsl/common.hpp"
#include "dsl/data_model.hpp"
#include "dsl/nuisance.hpp"
#include "dsl/simulator.hpp"

namespace dsl {

struct FittedNuisance {
  double eps_clip = kDefaultEpsClip;
};

struct OracleNuisance {
  Scenario scenario;
  Misspec misspec = Misspec::none;
  double eps_clip = 0.0;
};

using NuisanceSpec = std::variant<FittedNuisance, OracleNuisance>;

/// Cross-fitted pseudo-outcomes phi_i(t_j), one row per subject.
struct PseudoOutcomeMatrix {
  MatrixXd values;  // N x J
  TimeGrid grid;
  FoldAssignment folds;  // k = 0 when nuisances were not fitted per fold
  std::vector<std::string> fold_provenance;
  double eps_clip = 0.0;
  int nonconverged_fits = 0;

  /// Finite entries; and when clipping is active, the worst-case bound
  /// |phi| <= 1 + 2 / eps^2 implied by the clipped denominators.
  void check_invariants() const;
};

/// The doubly robust transform at a single time:
///   pi^w = S^w(x;t) + I(W=w)/e^w(x) * { Y(t)/G^w(x;t) - S^w(x;t) },
///   phi  = pi^1 - pi^0,    with Y(t) = I(u > t).
double pseudo_outcome_single(const SubjectRecord& record,
                             const NuisanceSet& nuisance, double t);

/// For each fold, nuisances are fitted on the complement and evaluated only
/// on the held-out fold, so no subject's pseudo-outcome uses a model fitted
/// on itself. With oracle nuisances there is nothing to fit and the folds
/// play no role.
PseudoOutcomeMatrix cross_fit_pseudo_outcomes(const Dataset& data,
                                              const TimeGrid& grid, int k,
                                              std::uint64_t seed,
                                              const NuisanceSpec& spec);

/// Conditional-bias identity check: the Monte Carlo mean of
/// phi_hat - phi_oracle given X=x against its analytic decomposition in
/// terms of the nuisance errors.
struct BiasCheckResult {
  double lhs = 0.0;    // Monte Carlo estimate of E[phi_hat - phi0 | X=x]
  double rhs = 0.0;    // analytic decomposition value
  double mc_se = 0.0;  // standard error of lhs
};

BiasCheckResult bias_decomposition_check(const Scenario& sc,
                                         const NuisanceSet& nuisance_hat,
                                         const VecRef& x, double t,
                                         Eigen::Index draws, std::uint64_t seed);

}  // namespace dsl
