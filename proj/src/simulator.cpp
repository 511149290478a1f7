#include "dsl/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dsl/quadrature.hpp"

namespace dsl {

namespace {

constexpr double kCase3TimeCap = 1e3;     // hard cap for hazard inversion
constexpr double kCase3BisectTol = 1e-10;
constexpr double kCase3MaxPanelWidth = 0.25;
constexpr int kCase3MaxResample = 1000000;

void check_coeff(const VectorXd& v, int d, const char* name) {
  if (v.size() != d) {
    throw invalid_input(std::string("coefficient vector ") + name +
                        " has wrong length");
  }
  if (!v.allFinite()) {
    throw invalid_input(std::string("coefficient vector ") + name +
                        " has non-finite entries");
  }
}

}  // namespace

VectorXd linspace_coeffs(double lo, double hi, int d) {
  if (d < 2) throw invalid_input("linspace_coeffs: d must be >= 2");
  VectorXd v(d);
  for (int i = 0; i < d; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(d - 1);
  }
  v[d - 1] = hi;  // exact endpoint
  return v;
}

MatrixXd gen_covariates(Eigen::Index n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw invalid_input("gen_covariates: n and d must be >= 1");
  Rng rng(seed);
  MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) x(i, c) = rng.uniform(-3.0, 3.0);
  }
  return x;
}

double sample_weibull_cox(double lambda, double nu, double eta, double uniform_draw) {
  if (!(lambda > 0.0) || !(nu > 0.0)) {
    throw invalid_input("sample_weibull_cox: lambda and nu must be positive");
  }
  if (!(uniform_draw > 0.0 && uniform_draw < 1.0)) {
    throw invalid_input("sample_weibull_cox: uniform draw must lie in (0,1)");
  }
  return std::pow(-std::log(uniform_draw) / (lambda * std::exp(eta)), 1.0 / nu);
}

Case1Params Case1Params::defaults(Eigen::Index n, int d) {
  Case1Params p;
  p.n = n;
  p.d = d;
  p.alpha = linspace_coeffs(-1.0, 1.0, d);
  p.beta = linspace_coeffs(0.4, -0.2, d);
  p.theta = linspace_coeffs(0.3, -0.1, d);
  p.gamma = linspace_coeffs(0.3, -0.3, d);
  return p;
}

void Case1Params::validate() const {
  if (n < 1 || d < 1) throw invalid_input("Case1Params: n and d must be >= 1");
  if (!(lambda > 0.0 && nu > 0.0 && lambda_c > 0.0)) {
    throw invalid_input("Case1Params: rates must be positive");
  }
  check_coeff(alpha, d, "alpha");
  check_coeff(beta, d, "beta");
  check_coeff(theta, d, "theta");
  check_coeff(gamma, d, "gamma");
}

Case2Params Case2Params::defaults(Eigen::Index n, int d) {
  Case2Params p;
  p.n = n;
  p.d = d;
  p.alpha = linspace_coeffs(-1.0, 1.0, d);
  p.beta = linspace_coeffs(0.4, -0.2, d);
  p.theta = linspace_coeffs(0.3, -0.1, d);
  p.gamma = linspace_coeffs(0.3, -0.3, d);
  return p;
}

void Case2Params::validate() const {
  if (n < 1 || d < 1) throw invalid_input("Case2Params: n and d must be >= 1");
  if (!(lambda > 0.0 && nu > 0.0 && lambda_c > 0.0)) {
    throw invalid_input("Case2Params: rates must be positive");
  }
  check_coeff(alpha, d, "alpha");
  check_coeff(beta, d, "beta");
  check_coeff(theta, d, "theta");
  check_coeff(gamma, d, "gamma");
}

Case3Params Case3Params::defaults(Eigen::Index n, int d) {
  Case3Params p;
  p.n = n;
  p.d = d;
  p.beta = linspace_coeffs(-0.3, 0.5, d);
  p.gamma = linspace_coeffs(-0.2, 0.3, d);
  p.theta = linspace_coeffs(-0.2, 0.4, d);
  p.alpha = linspace_coeffs(-1.0, 1.0, d);
  p.gamma_cens = linspace_coeffs(0.3, -0.3, d);
  return p;
}

void Case3Params::validate() const {
  if (n < 1 || d < 1) throw invalid_input("Case3Params: n and d must be >= 1");
  if (!(lambda0 > 0.0 && lambda_c > 0.0)) {
    throw invalid_input("Case3Params: rates must be positive");
  }
  check_coeff(beta, d, "beta");
  check_coeff(gamma, d, "gamma");
  check_coeff(theta, d, "theta");
  check_coeff(alpha, d, "alpha");
  check_coeff(gamma_cens, d, "gamma_cens");
}

int scenario_case(const Scenario& sc) {
  return static_cast<int>(sc.index()) + 1;
}

Eigen::Index scenario_n(const Scenario& sc) {
  return std::visit([](const auto& p) { return p.n; }, sc);
}

int scenario_dim(const Scenario& sc) {
  return std::visit([](const auto& p) { return p.d; }, sc);
}

Scenario make_scenario(int case_id, Eigen::Index n, int d) {
  switch (case_id) {
    case 1: return Case1Params::defaults(n, d);
    case 2: return Case2Params::defaults(n, d);
    case 3: return Case3Params::defaults(n, d);
    default: throw invalid_input("case must be 1, 2 or 3");
  }
}

double true_propensity(const Scenario& sc, const VecRef& x) {
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        const double eta = p.alpha.dot(x);
        if constexpr (std::is_same_v<P, Case2Params>) {
          const double logit = 0.5 + 0.45 * std::tanh(eta / 1.2) +
                               0.25 * (eta > 0.0 ? 1.0 : 0.0) -
                               0.15 * (eta < 1.0 ? 1.0 : 0.0) +
                               0.1 * std::sin(eta * eta / 3.0);
          return expit(logit);
        } else {
          return expit(eta);
        }
      },
      sc);
}

namespace {

// e^{h sin(v s)} integrated from a to b with adaptive quadrature
double case3_integral(double h, double v, double a, double b, double abs_tol) {
  return integrate_adaptive(
      [h, v](double s) { return std::exp(h * std::sin(v * s)); }, a, b, abs_tol);
}

double case3_h(const Case3Params& p, const VecRef& x) {
  const double u = p.gamma.dot(x);
  return 0.5 * std::cos(u) + 0.2 * u * u;
}

}  // namespace

double true_survival(const Scenario& sc, const VecRef& x, double t, int w) {
  if (!(t >= 0.0)) throw invalid_input("true_survival: t must be nonnegative");
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, Case3Params>) {
          const double base = p.lambda0 * std::exp(p.beta.dot(x));
          if (w == 0) return std::exp(-base * t);
          const double h = case3_h(p, x);
          const double v = p.theta.dot(x);
          return std::exp(-base * case3_integral(h, v, 0.0, t, 1e-8));
        } else {
          const double eta = p.beta.dot(x) + (w == 1 ? p.theta.dot(x) : 0.0);
          return std::exp(-p.lambda * std::pow(t, p.nu) * std::exp(eta));
        }
      },
      sc);
}

double true_censoring_survival(const Scenario& sc, const VecRef& x, double t) {
  if (!(t >= 0.0)) throw invalid_input("true_censoring_survival: t must be nonnegative");
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, Case3Params>) {
          return std::exp(-p.lambda_c * std::exp(p.gamma_cens.dot(x)) * t);
        } else {
          return std::exp(-p.lambda_c * std::exp(p.gamma.dot(x)) * t);
        }
      },
      sc);
}

double true_cate(const Scenario& sc, const VecRef& x, double t) {
  return true_survival(sc, x, t, 1) - true_survival(sc, x, t, 0);
}

VectorXd true_cate_grid(const Scenario& sc, const VecRef& x, const VectorXd& times) {
  VectorXd out(times.size());
  if (const auto* p = std::get_if<Case3Params>(&sc)) {
    const double base = p->lambda0 * std::exp(p->beta.dot(x));
    const double h = case3_h(*p, x);
    const double v = p->theta.dot(x);
    double acc = 0.0, prev = 0.0;
    for (Eigen::Index j = 0; j < times.size(); ++j) {
      const double t = times[j];
      if (!(t >= prev)) throw invalid_input("true_cate_grid: times must ascend");
      acc += case3_integral(h, v, prev, t, 1e-8);
      out[j] = std::exp(-base * acc) - std::exp(-base * t);
      prev = t;
    }
    return out;
  }
  for (Eigen::Index j = 0; j < times.size(); ++j) {
    out[j] = true_cate(sc, x, times[j]);
  }
  return out;
}

ConditionalSampler::ConditionalSampler(const Scenario& sc, VectorXd x)
    : scenario_(sc), x_(std::move(x)) {
  if (x_.size() != scenario_dim(sc)) {
    throw invalid_input("ConditionalSampler: covariate dimension mismatch");
  }
  propensity_ = true_propensity(sc, x_);
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, Case3Params>) {
          eta_event_base_ = p.beta.dot(x_);
          eta_cens_ = p.gamma_cens.dot(x_);
          h_ = case3_h(p, x_);
          v_ = p.theta.dot(x_);
          const double abs_v = std::abs(v_);
          panel_width_ = abs_v > 1e-12
                             ? std::min(kCase3MaxPanelWidth, M_PI / abs_v)
                             : kCase3MaxPanelWidth;
          panel_cumhaz_.push_back(0.0);
        } else {
          eta_event_base_ = p.beta.dot(x_);
          eta_event_treat_ = eta_event_base_ + p.theta.dot(x_);
          eta_cens_ = p.gamma.dot(x_);
        }
      },
      scenario_);
}

double ConditionalSampler::case3_cumhaz(double t) {
  // raw integral of e^{h sin(v s)}; the lambda0 e^g factor is applied by
  // callers
  const std::size_t need = static_cast<std::size_t>(std::ceil(t / panel_width_));
  while (panel_cumhaz_.size() <= need) {
    const double a = panel_width_ * static_cast<double>(panel_cumhaz_.size() - 1);
    panel_cumhaz_.push_back(
        panel_cumhaz_.back() +
        gauss_legendre_16(
            [this](double s) { return std::exp(h_ * std::sin(v_ * s)); }, a,
            a + panel_width_));
  }
  const std::size_t k = static_cast<std::size_t>(t / panel_width_);
  const double a = panel_width_ * static_cast<double>(k);
  return panel_cumhaz_[k] +
         gauss_legendre_16(
             [this](double s) { return std::exp(h_ * std::sin(v_ * s)); }, a, t);
}

double ConditionalSampler::case3_invert(double target) {
  // march panels until the prefix covers the target or the cap is reached
  while (panel_cumhaz_.back() < target &&
         panel_width_ * static_cast<double>(panel_cumhaz_.size() - 1) < kCase3TimeCap) {
    case3_cumhaz(panel_width_ * static_cast<double>(panel_cumhaz_.size()));
  }
  if (panel_cumhaz_.back() < target) {
    return std::numeric_limits<double>::quiet_NaN();  // bracket above cap
  }
  auto it = std::lower_bound(panel_cumhaz_.begin(), panel_cumhaz_.end(), target);
  std::size_t k = static_cast<std::size_t>(it - panel_cumhaz_.begin());
  if (k == 0) return 0.0;
  double lo = panel_width_ * static_cast<double>(k - 1);
  double hi = panel_width_ * static_cast<double>(k);
  while (hi - lo > kCase3BisectTol) {
    const double mid = 0.5 * (lo + hi);
    if (case3_cumhaz(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double ConditionalSampler::draw_event_time(Rng& rng, int w) {
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, Case3Params>) {
          const double base = p.lambda0 * std::exp(eta_event_base_);
          if (w == 0) return rng.exponential(base);
          for (int attempt = 0; attempt < kCase3MaxResample; ++attempt) {
            const double target = rng.exponential(1.0) / base;
            const double t = case3_invert(target);
            if (std::isfinite(t)) return t;
            ++cap_breaches_;
          }
          throw numeric_error(
              "case 3 hazard inversion: resample limit exhausted below cap");
        } else {
          const double eta = (w == 1) ? eta_event_treat_ : eta_event_base_;
          return sample_weibull_cox(p.lambda, p.nu, eta, rng.uniform01());
        }
      },
      scenario_);
}

double ConditionalSampler::draw_censoring_time(Rng& rng) {
  return std::visit(
      [&](const auto& p) -> double {
        return rng.exponential(p.lambda_c * std::exp(eta_cens_));
      },
      scenario_);
}

ConditionalSampler::Draw ConditionalSampler::draw(Rng& rng) {
  Draw d;
  d.w = rng.bernoulli(propensity_) ? 1 : 0;
  d.t = draw_event_time(rng, d.w);
  d.c = draw_censoring_time(rng);
  return d;
}

namespace {

SimulatedDataset gen_impl(const Scenario& sc, std::uint64_t seed) {
  const Eigen::Index n = scenario_n(sc);
  const int d = scenario_dim(sc);
  MatrixXd x = gen_covariates(n, d, derive_seed(seed, 1));
  Rng rng(derive_seed(seed, 2));

  VectorXd u(n), latent_t(n), latent_c(n);
  VectorXi delta(n), w(n);
  int breaches = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    ConditionalSampler sampler(sc, x.row(i).transpose());
    const auto draw = sampler.draw(rng);
    w[i] = draw.w;
    latent_t[i] = draw.t;
    latent_c[i] = draw.c;
    u[i] = draw.u();
    delta[i] = draw.delta();
    breaches += sampler.cap_breaches();
  }
  SimulatedDataset out{Dataset(std::move(x), std::move(u), std::move(delta), std::move(w)),
                       sc, std::move(latent_t), std::move(latent_c), breaches};
  return out;
}

}  // namespace

SimulatedDataset gen_case1(const Case1Params& params, std::uint64_t seed) {
  params.validate();
  return gen_impl(params, seed);
}

SimulatedDataset gen_case2(const Case2Params& params, std::uint64_t seed) {
  params.validate();
  return gen_impl(params, seed);
}

SimulatedDataset gen_case3(const Case3Params& params, std::uint64_t seed) {
  params.validate();
  return gen_impl(params, seed);
}

SimulatedDataset gen_scenario(const Scenario& sc, std::uint64_t seed) {
  std::visit([](const auto& p) { p.validate(); }, sc);
  return gen_impl(sc, seed);
}

}  // namespace dsl
