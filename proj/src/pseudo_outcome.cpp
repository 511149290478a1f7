#include "dsl/pseudo_outcome.hpp"

#include <cmath>

namespace dsl {

void PseudoOutcomeMatrix::check_invariants() const {
  if (!values.allFinite()) {
    throw numeric_error("pseudo-outcome matrix has non-finite entries");
  }
  if (eps_clip > 0.0) {
    const double bound = 1.0 + 2.0 / (eps_clip * eps_clip);
    if (values.cwiseAbs().maxCoeff() > bound) {
      throw numeric_error("pseudo-outcome exceeds the clipped-denominator bound");
    }
  }
}

double pseudo_outcome_single(const SubjectRecord& record,
                             const NuisanceSet& nuisance, double t) {
  if (!(t >= 0.0)) throw invalid_input("pseudo_outcome_single: t must be nonnegative");
  const double y = record.u > t ? 1.0 : 0.0;
  double pi[2];
  for (int w = 0; w < 2; ++w) {
    const double s = nuisance.survival(record.x, t, w);
    double correction = 0.0;
    if (record.w == w) {
      const double g = nuisance.censoring(record.x, t, w);
      const double e = nuisance.propensity(record.x, w);
      correction = (y / g - s) / e;
    }
    pi[w] = s + correction;
  }
  return pi[1] - pi[0];
}

namespace {

void fill_rows(const Dataset& data, const std::vector<Eigen::Index>& rows,
               const NuisanceSet& set, const TimeGrid& grid, MatrixXd& out) {
  for (Eigen::Index i : rows) {
    const SubjectRecord rec = data.record(i);
    for (Eigen::Index j = 0; j < grid.j(); ++j) {
      out(i, j) = pseudo_outcome_single(rec, set, grid.times()[j]);
    }
  }
}

}  // namespace

PseudoOutcomeMatrix cross_fit_pseudo_outcomes(const Dataset& data,
                                              const TimeGrid& grid, int k,
                                              std::uint64_t seed,
                                              const NuisanceSpec& spec) {
  if (data.n() == 0) throw invalid_input("cross_fit_pseudo_outcomes: empty data");
  PseudoOutcomeMatrix out;
  out.grid = grid;
  out.values.resize(data.n(), grid.j());

  if (const auto* oracle = std::get_if<OracleNuisance>(&spec)) {
    NuisanceSet set = oracle_nuisance(oracle->scenario, oracle->misspec,
                                      oracle->eps_clip);
    std::vector<Eigen::Index> all(static_cast<std::size_t>(data.n()));
    for (Eigen::Index i = 0; i < data.n(); ++i) all[static_cast<std::size_t>(i)] = i;
    fill_rows(data, all, set, grid, out.values);
    out.eps_clip = set.eps_clip;
    out.fold_provenance.push_back(set.provenance);
    out.check_invariants();
    return out;
  }

  const auto& fitted = std::get<FittedNuisance>(spec);
  if (k < 2) {
    throw invalid_input("cross_fit_pseudo_outcomes: fitted nuisances need k >= 2");
  }
  out.folds = assign_folds(data.n(), k, seed);
  out.eps_clip = fitted.eps_clip;
  for (int fold = 0; fold < k; ++fold) {
    Dataset train = data.subset(out.folds.complement(fold));
    NuisanceSet set;
    try {
      set = fit_nuisance_set(train, fitted.eps_clip);
    } catch (const std::exception& e) {
      throw invalid_input("cross-fitting fold " + std::to_string(fold) + ": " +
                          e.what());
    }
    fill_rows(data, out.folds.members(fold), set, grid, out.values);
    out.fold_provenance.push_back("fold " + std::to_string(fold) +
                                  " fitted on complement (" + set.provenance + ")");
    out.nonconverged_fits += set.nonconverged_fits;
  }
  out.check_invariants();
  return out;
}

BiasCheckResult bias_decomposition_check(const Scenario& sc,
                                         const NuisanceSet& nuisance_hat,
                                         const VecRef& x, double t,
                                         Eigen::Index draws, std::uint64_t seed) {
  if (draws < 2) throw invalid_input("bias_decomposition_check: needs draws >= 2");
  NuisanceSet oracle = oracle_nuisance(sc, Misspec::none, 0.0);

  ConditionalSampler sampler(sc, x);
  Rng rng(seed);
  SubjectRecord rec;
  rec.x = x;
  double sum = 0.0, sumsq = 0.0;
  for (Eigen::Index i = 0; i < draws; ++i) {
    const auto d = sampler.draw(rng);
    rec.u = d.u();
    rec.delta = d.delta();
    rec.w = d.w;
    const double diff =
        pseudo_outcome_single(rec, nuisance_hat, t) - pseudo_outcome_single(rec, oracle, t);
    sum += diff;
    sumsq += diff * diff;
  }
  BiasCheckResult res;
  const double n = static_cast<double>(draws);
  res.lhs = sum / n;
  const double var = std::max(0.0, (sumsq - n * res.lhs * res.lhs) / (n - 1.0));
  res.mc_se = std::sqrt(var / n);

  res.rhs = 0.0;
  for (int w = 0; w < 2; ++w) {
    const double sign = (w == 1) ? 1.0 : -1.0;
    const double e_hat = nuisance_hat.propensity(x, w);
    const double e0 = oracle.propensity(x, w);
    const double s_hat = nuisance_hat.survival(x, t, w);
    const double s0 = oracle.survival(x, t, w);
    const double g_hat = nuisance_hat.censoring(x, t, w);
    const double g0 = oracle.censoring(x, t, w);
    res.rhs += sign * ((e_hat - e0) / e_hat * (s_hat - s0) +
                       (e0 / e_hat) * (s0 / g_hat) * (g0 - g_hat));
  }
  return res;
}

}  // namespace dsl
