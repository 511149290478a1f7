#include "dsl/nuisance.hpp"

#include <cmath>
#include <memory>
#include <vector>

namespace dsl {

std::string misspec_name(Misspec m) {
  switch (m) {
    case Misspec::none: return "none";
    case Misspec::wrong_s: return "wrong_s";
    case Misspec::wrong_e: return "wrong_e";
    case Misspec::wrong_g: return "wrong_g";
  }
  return "none";
}

Misspec misspec_from_name(const std::string& name) {
  if (name == "none") return Misspec::none;
  if (name == "wrong_s" || name == "wrong-s") return Misspec::wrong_s;
  if (name == "wrong_e" || name == "wrong-e") return Misspec::wrong_e;
  if (name == "wrong_g" || name == "wrong-g") return Misspec::wrong_g;
  throw invalid_input("unknown misspecification tag: " + name);
}

namespace {

double clip_surv(double s, double eps) {
  return clamp_prob(s, eps, 1.0);
}

}  // namespace

NuisanceSet fit_nuisance_set(const Dataset& train, double eps_clip) {
  if (!(eps_clip >= 0.0 && eps_clip < 0.5)) {
    throw invalid_input("fit_nuisance_set: eps_clip must lie in [0, 0.5)");
  }
  struct Models {
    CoxModel event[2];
    CoxModel cens[2];
    LogisticModel propensity;
  };
  auto models = std::make_shared<Models>();

  int nonconverged = 0;
  for (int w = 0; w < 2; ++w) {
    Dataset arm = train.arm(w);
    if (arm.n() == 0) {
      throw invalid_input("fit_nuisance_set: arm " + std::to_string(w) + " is empty");
    }
    const Eigen::Index events = (arm.delta().array() == 1).count();
    if (events == 0) {
      throw invalid_input("fit_nuisance_set: arm " + std::to_string(w) +
                          " has no events");
    }
    if (events == arm.n()) {
      throw invalid_input("fit_nuisance_set: arm " + std::to_string(w) +
                          " has no censorings");
    }
    models->event[w] = fit_cox(arm, CoxOutcome::event);
    models->cens[w] = fit_cox(arm, CoxOutcome::censoring);
    nonconverged += !models->event[w].diagnostics.converged;
    nonconverged += !models->cens[w].diagnostics.converged;
  }
  models->propensity = fit_logistic(train.x(), train.w());
  nonconverged += !models->propensity.converged;

  NuisanceSet set;
  set.eps_clip = eps_clip;
  set.provenance = "fitted";
  set.nonconverged_fits = nonconverged;
  set.logistic_ridged = models->propensity.ridged;
  set.survival = [models, eps_clip](const VecRef& x, double t, int w) {
    return clip_surv(cox_survival(models->event[w], x, t), eps_clip);
  };
  set.censoring = [models, eps_clip](const VecRef& x, double t, int w) {
    return clip_surv(cox_survival(models->cens[w], x, t), eps_clip);
  };
  set.propensity = [models, eps_clip](const VecRef& x, int w) {
    return predict_propensity(models->propensity, x, w, eps_clip);
  };
  return set;
}

double scenario_median_u(const Scenario& sc) {
  // fixed internal draw so the misspecified nuisance functions are a
  // deterministic property of the scenario
  Scenario probe = sc;
  std::visit([](auto& p) { p.n = 4000; }, probe);
  SimulatedDataset sim = gen_scenario(probe, 0x6d656469616eULL);
  std::vector<double> u(sim.dataset.u().data(), sim.dataset.u().data() + sim.dataset.n());
  return empirical_quantile(std::move(u), 0.5);
}

NuisanceSet oracle_nuisance(const Scenario& sc, Misspec misspec, double eps_clip) {
  if (!(eps_clip >= 0.0 && eps_clip < 0.5)) {
    throw invalid_input("oracle_nuisance: eps_clip must lie in [0, 0.5)");
  }
  auto scenario = std::make_shared<Scenario>(sc);

  NuisanceSet set;
  set.eps_clip = eps_clip;
  set.provenance = misspec == Misspec::none
                       ? "oracle(case" + std::to_string(scenario_case(sc)) + ")"
                       : "oracle(case" + std::to_string(scenario_case(sc)) + "," +
                             misspec_name(misspec) + ")";

  if (misspec == Misspec::wrong_s || misspec == Misspec::wrong_g) {
    const double scale = scenario_median_u(sc);
    auto wrong = [scale, eps_clip](const VecRef&, double t, int) {
      return std::max(eps_clip, std::exp(-t / scale));
    };
    if (misspec == Misspec::wrong_s) {
      set.survival = wrong;
    } else {
      set.censoring = wrong;
    }
  }
  if (misspec == Misspec::wrong_e) {
    set.propensity = [](const VecRef&, int) { return 0.5; };
  }

  if (!set.survival) {
    set.survival = [scenario, eps_clip](const VecRef& x, double t, int w) {
      return clip_surv(true_survival(*scenario, x, t, w), eps_clip);
    };
  }
  if (!set.censoring) {
    set.censoring = [scenario, eps_clip](const VecRef& x, double t, int) {
      return clip_surv(true_censoring_survival(*scenario, x, t), eps_clip);
    };
  }
  if (!set.propensity) {
    set.propensity = [scenario, eps_clip](const VecRef& x, int w) {
      const double p1 = true_propensity(*scenario, x);
      const double p = (w == 1) ? p1 : 1.0 - p1;
      return eps_clip > 0.0 ? clamp_prob(p, eps_clip, 1.0 - eps_clip) : p;
    };
  }
  return set;
}

}  // namespace dsl
