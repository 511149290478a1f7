#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "dsl/nuisance.hpp"
#include "dsl/rng.hpp"
#include "helpers.hpp"

using namespace dsl;

namespace {

Dataset make_dataset(const std::vector<double>& u, const std::vector<int>& delta,
                     const MatrixXd& x, const std::vector<int>& w) {
  std::vector<SubjectRecord> rows;
  for (std::size_t i = 0; i < u.size(); ++i) {
    SubjectRecord r;
    r.u = u[i];
    r.delta = delta[i];
    r.x = x.row(static_cast<Eigen::Index>(i)).transpose();
    r.w = w[i];
    rows.push_back(r);
  }
  return validate_dataset(rows, static_cast<int>(x.cols()));
}

// independent O(n^2) Breslow partial log-likelihood used as the grid-search
// oracle (no ties in the fixtures that use it)
double naive_partial_loglik(const Dataset& data, double beta) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if (data.delta()[i] != 1) continue;
    double denom = 0.0;
    for (Eigen::Index j = 0; j < data.n(); ++j) {
      if (data.u()[j] >= data.u()[i]) denom += std::exp(beta * data.x()(j, 0));
    }
    ll += beta * data.x()(i, 0) - std::log(denom);
  }
  return ll;
}

// independent logistic log-likelihood for the 2-D grid oracle
double naive_logistic_loglik(const MatrixXd& x, const VectorXi& y, double b0,
                             double b1) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double eta = b0 + b1 * x(i, 0);
    ll += y[i] * eta - std::log1p(std::exp(eta));
  }
  return ll;
}

}  // namespace

TEST_CASE("fit_cox: symmetric groups give a zero coefficient") {
  // identical event-time patterns in both groups; covariate = group label
  std::vector<double> u{1, 2, 3, 4, 1, 2, 3, 4};
  std::vector<int> delta{1, 1, 0, 1, 1, 1, 0, 1};
  MatrixXd x(8, 1);
  x << 0, 0, 0, 0, 1, 1, 1, 1;
  std::vector<int> w(8, 0);
  CoxModel m = fit_cox(make_dataset(u, delta, x, w), CoxOutcome::event);
  CHECK(std::abs(m.coefficients[0]) < 1e-6);
  CHECK(m.diagnostics.converged);
}

TEST_CASE("fit_cox: six-record fixture matches the grid-search oracle") {
  std::vector<double> u{0.7, 1.3, 2.1, 3.4, 4.2, 5.9};
  std::vector<int> delta{1, 0, 1, 1, 0, 1};
  MatrixXd x(6, 1);
  x << 0.5, -1.2, 0.8, -0.3, 1.4, 0.1;
  std::vector<int> w(6, 0);
  Dataset data = make_dataset(u, delta, x, w);

  double best_beta = 0.0, best_ll = -1e300;
  for (double b = -5.0; b <= 5.0 + 1e-12; b += 1e-4) {
    const double ll = naive_partial_loglik(data, b);
    if (ll > best_ll) {
      best_ll = ll;
      best_beta = b;
    }
  }
  CoxModel m = fit_cox(data, CoxOutcome::event);
  CHECK(m.diagnostics.converged);
  CHECK(std::abs(m.coefficients[0] - best_beta) <= 2e-4);
}

TEST_CASE("fit_cox: recovers the generating coefficients on case 1 data") {
  Case1Params p = Case1Params::defaults(12000, 30);
  SimulatedDataset sim = gen_case1(p, 301);
  Dataset control = sim.dataset.arm(0);
  REQUIRE(control.n() > 4500);
  CoxModel m = fit_cox(control, CoxOutcome::event);
  CHECK(m.diagnostics.converged);
  CHECK((m.coefficients - p.beta).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("fit_cox: zero events is an error; censoring fit flips delta") {
  std::vector<double> u{1, 2, 3};
  std::vector<int> delta{0, 0, 0};
  MatrixXd x = MatrixXd::Zero(3, 1);
  std::vector<int> w(3, 0);
  Dataset data = make_dataset(u, delta, x, w);
  CHECK_THROWS_AS(fit_cox(data, CoxOutcome::event), invalid_input);
  CHECK_NOTHROW(fit_cox(data, CoxOutcome::censoring));  // all "events" there
}

TEST_CASE("cox_survival: exact at t=0, baseline at x=0, plateau past last event") {
  Rng rng(11);
  std::vector<double> u;
  std::vector<int> delta, w;
  MatrixXd x(60, 2);
  for (int i = 0; i < 60; ++i) {
    u.push_back(rng.exponential(0.4));
    delta.push_back(rng.bernoulli(0.7) ? 1 : 0);
    x(i, 0) = rng.uniform(-1, 1);
    x(i, 1) = rng.uniform(-1, 1);
    w.push_back(0);
  }
  CoxModel m = fit_cox(make_dataset(u, delta, x, w), CoxOutcome::event);

  VectorXd probe(2);
  probe << 0.3, -0.8;
  CHECK(cox_survival(m, probe, 0.0) == 1.0);

  VectorXd zero = VectorXd::Zero(2);
  for (double t : {0.5, 1.0, 2.0}) {
    CHECK(cox_survival(m, zero, t) ==
          doctest::Approx(std::exp(-m.baseline_cumhaz(t))));
  }

  const double last = *std::max_element(u.begin(), u.end());
  CHECK(cox_survival(m, probe, last + 1.0) ==
        doctest::Approx(cox_survival(m, probe, last + 100.0)));
}

TEST_CASE("cox_survival: null-coefficient Breslow curve tracks Kaplan-Meier") {
  Rng rng(13);
  std::vector<double> u;
  std::vector<int> delta, w;
  MatrixXd x(500, 3);
  for (int i = 0; i < 500; ++i) {
    u.push_back(rng.exponential(0.5));
    delta.push_back(rng.bernoulli(0.65) ? 1 : 0);
    for (int c = 0; c < 3; ++c) x(i, c) = rng.uniform(-2, 2);
    w.push_back(0);
  }
  Dataset data = make_dataset(u, delta, x, w);
  // zero Newton iterations keeps beta = 0: the Breslow baseline becomes the
  // Nelson-Aalen estimator
  CoxModel null_fit = fit_cox(data, CoxOutcome::event, /*max_iterations=*/0);
  CHECK(null_fit.coefficients.cwiseAbs().maxCoeff() == 0.0);
  StepFunction km = kaplan_meier(data);

  VectorXd zero = VectorXd::Zero(3);
  double sup = 0.0;
  for (double t = 0.0; t < 8.0; t += 0.01) {
    sup = std::max(sup, std::abs(cox_survival(null_fit, zero, t) - km(t)));
  }
  CHECK(sup < 0.02);
}

TEST_CASE("cox_survival property: nonincreasing in t, 1 at t=0") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 20 + static_cast<int>(rng.below(60));
    std::vector<double> u;
    std::vector<int> delta, w;
    MatrixXd x(n, 2);
    for (int i = 0; i < n; ++i) {
      u.push_back(rng.exponential(1.0));
      delta.push_back(rng.bernoulli(0.5) ? 1 : 0);
      x(i, 0) = rng.uniform(-1, 1);
      x(i, 1) = rng.uniform(-1, 1);
      w.push_back(0);
    }
    if (std::none_of(delta.begin(), delta.end(), [](int d) { return d == 1; })) {
      delta[0] = 1;
    }
    CoxModel m = fit_cox(make_dataset(u, delta, x, w), CoxOutcome::event);
    VectorXd probe(2);
    probe << rng.uniform(-2, 2), rng.uniform(-2, 2);
    CHECK(cox_survival(m, probe, 0.0) == 1.0);
    double prev = 1.0;
    for (double t = 0.0; t < 6.0; t += 0.1) {
      const double s = cox_survival(m, probe, t);
      CHECK(s <= prev + 1e-15);
      prev = s;
    }
  }
}

TEST_CASE("fit_logistic: balanced null data") {
  Rng rng(23);
  const int n = 400;
  MatrixXd x(n, 3);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) x(i, c) = rng.uniform(-3, 3);
  }
  // exactly half treated, assignment independent of x
  std::vector<int> labels(n, 0);
  for (int i = 0; i < n / 2; ++i) labels[i] = 1;
  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  VectorXi y(n);
  for (int i = 0; i < n; ++i) y[perm[i]] = labels[i];

  LogisticModel m = fit_logistic(x, y);
  CHECK(m.converged);

  // observed-information standard errors
  MatrixXd z(n, 4);
  z.col(0).setOnes();
  z.rightCols(3) = x;
  VectorXd wdiag(n);
  for (int i = 0; i < n; ++i) {
    const double p = expit(m.intercept + m.coefficients.dot(x.row(i)));
    wdiag[i] = p * (1.0 - p);
  }
  const MatrixXd info = z.transpose() * wdiag.asDiagonal() * z;
  const MatrixXd cov = info.inverse();
  CHECK(std::abs(m.intercept) < 3.0 * std::sqrt(cov(0, 0)));
  for (int c = 0; c < 3; ++c) {
    CHECK(std::abs(m.coefficients[c]) < 3.0 * std::sqrt(cov(c + 1, c + 1)));
  }
}

TEST_CASE("fit_logistic: 20-point fixture matches the 2-D likelihood grid") {
  Rng rng(29);
  const int n = 20;
  MatrixXd x(n, 1);
  VectorXi y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform(-2, 2);
    y[i] = rng.bernoulli(expit(0.4 + 0.9 * x(i, 0))) ? 1 : 0;
  }
  REQUIRE((y.array() == 1).count() > 0);
  REQUIRE((y.array() == 0).count() > 0);

  // coarse grid then local refinement, both on the independent likelihood
  double best0 = 0.0, best1 = 0.0, best_ll = -1e300;
  for (double b0 = -3.0; b0 <= 3.0 + 1e-12; b0 += 0.005) {
    for (double b1 = -3.0; b1 <= 3.0 + 1e-12; b1 += 0.005) {
      const double ll = naive_logistic_loglik(x, y, b0, b1);
      if (ll > best_ll) {
        best_ll = ll;
        best0 = b0;
        best1 = b1;
      }
    }
  }
  const double c0 = best0, c1 = best1;
  for (double b0 = c0 - 0.01; b0 <= c0 + 0.01 + 1e-12; b0 += 1e-4) {
    for (double b1 = c1 - 0.01; b1 <= c1 + 0.01 + 1e-12; b1 += 1e-4) {
      const double ll = naive_logistic_loglik(x, y, b0, b1);
      if (ll > best_ll) {
        best_ll = ll;
        best0 = b0;
        best1 = b1;
      }
    }
  }

  LogisticModel m = fit_logistic(x, y);
  CHECK(m.converged);
  CHECK(std::abs(m.intercept - best0) < 1e-3);
  CHECK(std::abs(m.coefficients[0] - best1) < 1e-3);
}

TEST_CASE("fit_logistic: single class is an error; separation falls back to ridge") {
  MatrixXd x(4, 1);
  x << -2, -1, 1, 2;
  VectorXi ones = VectorXi::Ones(4);
  CHECK_THROWS_AS(fit_logistic(x, ones), invalid_input);

  VectorXi sep(4);
  sep << 0, 0, 1, 1;  // perfectly separated
  LogisticModel m = fit_logistic(x, sep);
  CHECK(m.ridged);
  CHECK(std::isfinite(m.intercept));
  CHECK(std::isfinite(m.coefficients[0]));
}

TEST_CASE("predict_propensity: complement, clipping, zero model") {
  LogisticModel m;
  m.intercept = 0.7;
  m.coefficients = VectorXd::Zero(2);
  m.coefficients << 0.5, -1.0;
  m.converged = true;
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    VectorXd x(2);
    x << rng.uniform(-3, 3), rng.uniform(-3, 3);
    CHECK(predict_propensity(m, x, 1) + predict_propensity(m, x, 0) ==
          doctest::Approx(1.0));
  }

  LogisticModel extreme;
  extreme.intercept = 50.0;
  extreme.coefficients = VectorXd::Zero(1);
  VectorXd x1 = VectorXd::Zero(1);
  CHECK(predict_propensity(extreme, x1, 1, 0.025) == 0.975);
  CHECK(predict_propensity(extreme, x1, 0, 0.025) == 0.025);

  LogisticModel zero;
  zero.intercept = 0.0;
  zero.coefficients = VectorXd::Zero(1);
  CHECK(predict_propensity(zero, x1, 1) == 0.5);
}

TEST_CASE("propensity fit tracks the true case 1 scores") {
  Case1Params p = Case1Params::defaults(5000, 30);
  SimulatedDataset sim = gen_case1(p, 401);
  LogisticModel m = fit_logistic(sim.dataset.x(), sim.dataset.w());
  double abs_err = 0.0;
  for (Eigen::Index i = 0; i < sim.dataset.n(); ++i) {
    const VectorXd x = sim.dataset.x_row(i).transpose();
    abs_err += std::abs(predict_propensity(m, x, 1) - expit(p.alpha.dot(x)));
  }
  CHECK(abs_err / static_cast<double>(sim.dataset.n()) <= 0.03);
}

TEST_CASE("oracle_nuisance: exact case 1 formulas and misspec replacements") {
  Case1Params p = Case1Params::defaults(100, 8);
  Scenario sc{p};
  NuisanceSet oracle = oracle_nuisance(sc);
  Rng rng(37);
  for (int trial = 0; trial < 30; ++trial) {
    VectorXd x(8);
    for (int c = 0; c < 8; ++c) x[c] = rng.uniform(-3, 3);
    const double t = rng.uniform(0.0, 15.0);
    for (int w = 0; w < 2; ++w) {
      const double eta = p.beta.dot(x) + (w ? p.theta.dot(x) : 0.0);
      CHECK(oracle.survival(x, t, w) ==
            doctest::Approx(std::exp(-p.lambda * std::pow(t, p.nu) * std::exp(eta))));
    }
    CHECK(oracle.censoring(x, t, 0) ==
          doctest::Approx(std::exp(-p.lambda_c * std::exp(p.gamma.dot(x)) * t)));
    CHECK(oracle.propensity(x, 1) == doctest::Approx(expit(p.alpha.dot(x))));
  }

  NuisanceSet wrong_e = oracle_nuisance(sc, Misspec::wrong_e);
  VectorXd x = VectorXd::Ones(8);
  CHECK(wrong_e.propensity(x, 1) == 0.5);
  CHECK(wrong_e.propensity(x, 0) == 0.5);

  const double med = scenario_median_u(sc);
  NuisanceSet wrong_s = oracle_nuisance(sc, Misspec::wrong_s);
  CHECK(wrong_s.survival(x, 2.0, 1) == doctest::Approx(std::exp(-2.0 / med)));
  CHECK(wrong_s.censoring(x, 2.0, 1) ==
        doctest::Approx(oracle.censoring(x, 2.0, 1)));
  NuisanceSet wrong_g = oracle_nuisance(sc, Misspec::wrong_g);
  CHECK(wrong_g.censoring(x, 2.0, 0) == doctest::Approx(std::exp(-2.0 / med)));
}

TEST_CASE("oracle_nuisance property sweep: monotone, complementary, in range") {
  Scenario sc{Case2Params::defaults(100, 6)};
  NuisanceSet oracle = oracle_nuisance(sc);
  Rng rng(41);
  for (int trial = 0; trial < 1000; ++trial) {
    VectorXd x(6);
    for (int c = 0; c < 6; ++c) x[c] = rng.uniform(-3, 3);
    const double t1 = rng.uniform(0.0, 10.0);
    const double t2 = t1 + rng.uniform(0.0, 10.0);
    const int w = rng.bernoulli(0.5);
    const double s1 = oracle.survival(x, t1, w), s2 = oracle.survival(x, t2, w);
    const double g1 = oracle.censoring(x, t1, w), g2 = oracle.censoring(x, t2, w);
    CHECK(s2 <= s1 + 1e-12);
    CHECK(g2 <= g1 + 1e-12);
    CHECK((s1 >= 0.0 && s1 <= 1.0));
    CHECK((g1 >= 0.0 && g1 <= 1.0));
    CHECK(oracle.propensity(x, 0) + oracle.propensity(x, 1) == doctest::Approx(1.0));
  }
}

TEST_CASE("fit_nuisance_set: degenerate arms are rejected by name") {
  Rng rng(43);
  std::vector<double> u;
  std::vector<int> delta, w;
  MatrixXd x(40, 2);
  for (int i = 0; i < 40; ++i) {
    u.push_back(rng.exponential(0.5));
    x(i, 0) = rng.uniform(-1, 1);
    x(i, 1) = rng.uniform(-1, 1);
    w.push_back(i % 2);
    delta.push_back(i % 2 == 1 ? 0 : (rng.bernoulli(0.5) ? 1 : 0));  // arm 1 all censored
  }
  delta[0] = 1;
  Dataset data = make_dataset(u, delta, x, w);
  CHECK_THROWS_WITH_AS(fit_nuisance_set(data), doctest::Contains("arm 1"),
                       invalid_input);
}

TEST_CASE("fit_nuisance_set: clipping ranges and complement identity hold") {
  Case1Params p = Case1Params::defaults(600, 5);
  SimulatedDataset sim = gen_case1(p, 53);
  NuisanceSet set = fit_nuisance_set(sim.dataset);
  Rng rng(59);
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Index i = static_cast<Eigen::Index>(rng.below(sim.dataset.n()));
    const VectorXd x = sim.dataset.x_row(i).transpose();
    const double t = rng.uniform(0.0, 30.0);
    const int w = rng.bernoulli(0.5);
    const double s = set.survival(x, t, w);
    const double g = set.censoring(x, t, w);
    const double e = set.propensity(x, w);
    CHECK((s >= set.eps_clip && s <= 1.0));
    CHECK((g >= set.eps_clip && g <= 1.0));
    CHECK((e >= set.eps_clip && e <= 1.0 - set.eps_clip));
    CHECK(set.propensity(x, 0) + set.propensity(x, 1) == doctest::Approx(1.0));
  }
}

TEST_CASE("fit_nuisance_set: fitted survival tracks the truth at the median time") {
  Case1Params p = Case1Params::defaults(5000, 30);
  SimulatedDataset sim = gen_case1(p, 61);
  NuisanceSet set = fit_nuisance_set(sim.dataset);
  CHECK(set.nonconverged_fits == 0);

  std::vector<double> uvec(sim.dataset.u().data(),
                           sim.dataset.u().data() + sim.dataset.n());
  const double t_med = empirical_quantile(uvec, 0.5);

  Rng rng(67);
  double worst = 0.0, total = 0.0;
  for (int probe = 0; probe < 100; ++probe) {
    const Eigen::Index i = static_cast<Eigen::Index>(rng.below(sim.dataset.n()));
    const VectorXd x = sim.dataset.x_row(i).transpose();
    const double fitted = set.survival(x, t_med, 1);
    const double truth = true_survival(Scenario{p}, x, t_med, 1);
    worst = std::max(worst, std::abs(fitted - truth));
    total += std::abs(fitted - truth);
  }
  // the max over 100 probes has a noise floor near 0.15 at this n and d;
  // the mean is the stable summary of fit quality here
  CHECK(total / 100.0 <= 0.05);
  CHECK(worst <= 0.25);
}
