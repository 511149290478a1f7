#include "dsl/cox.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace dsl {

namespace {

struct CoxWorkspace {
  MatrixXd x;            // rows sorted by descending time
  VectorXd time;         // descending
  std::vector<int> status;
  std::vector<std::size_t> group_start;  // tie-group boundaries in sorted order
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  Eigen::Index n_events = 0;
};

CoxWorkspace prepare(const Dataset& data, CoxOutcome outcome) {
  CoxWorkspace ws;
  ws.n = data.n();
  ws.d = data.dim();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(ws.n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const VectorXd& u = data.u();
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return u[a] > u[b]; });

  ws.x.resize(ws.n, ws.d);
  ws.time.resize(ws.n);
  ws.status.resize(static_cast<std::size_t>(ws.n));
  for (Eigen::Index r = 0; r < ws.n; ++r) {
    const Eigen::Index i = order[static_cast<std::size_t>(r)];
    ws.x.row(r) = data.x().row(i);
    ws.time[r] = u[i];
    const int ev = data.delta()[i];
    const int st = (outcome == CoxOutcome::event) ? ev : 1 - ev;
    ws.status[static_cast<std::size_t>(r)] = st;
    ws.n_events += st;
  }
  // boundaries of equal-time groups in the descending order
  std::size_t i = 0;
  while (i < static_cast<std::size_t>(ws.n)) {
    ws.group_start.push_back(i);
    std::size_t j = i;
    while (j < static_cast<std::size_t>(ws.n) &&
           ws.time[static_cast<Eigen::Index>(j)] == ws.time[static_cast<Eigen::Index>(i)]) {
      ++j;
    }
    i = j;
  }
  ws.group_start.push_back(static_cast<std::size_t>(ws.n));
  return ws;
}

// one pass over risk sets: log-likelihood, optionally gradient and Hessian
double cox_pass(const CoxWorkspace& ws, const VecRef& beta, VectorXd* grad,
                MatrixXd* hess) {
  const VectorXd eta = ws.x * beta;
  const double m = eta.size() ? eta.maxCoeff() : 0.0;  // overflow guard

  double ll = 0.0;
  double s0 = 0.0;
  VectorXd s1 = VectorXd::Zero(ws.d);
  MatrixXd s2;
  if (grad) grad->setZero(ws.d);
  if (hess) {
    hess->setZero(ws.d, ws.d);
    s2.setZero(ws.d, ws.d);
  }

  for (std::size_t g = 0; g + 1 < ws.group_start.size(); ++g) {
    const std::size_t lo = ws.group_start[g];
    const std::size_t hi = ws.group_start[g + 1];
    int dk = 0;
    double eta_events = 0.0;
    VectorXd x_events;
    if (grad) x_events = VectorXd::Zero(ws.d);
    for (std::size_t r = lo; r < hi; ++r) {
      const Eigen::Index ri = static_cast<Eigen::Index>(r);
      const double wgt = std::exp(eta[ri] - m);
      s0 += wgt;
      if (grad) s1.noalias() += wgt * ws.x.row(ri).transpose();
      if (hess) {
        s2.selfadjointView<Eigen::Lower>().rankUpdate(ws.x.row(ri).transpose(), wgt);
      }
      if (ws.status[r]) {
        ++dk;
        eta_events += eta[ri];
        if (grad) x_events += ws.x.row(ri).transpose();
      }
    }
    if (dk == 0) continue;
    ll += eta_events - dk * (std::log(s0) + m);
    if (grad) {
      const VectorXd xbar = s1 / s0;
      grad->noalias() += x_events - dk * xbar;
      if (hess) {
        MatrixXd s2full = s2.selfadjointView<Eigen::Lower>();
        hess->noalias() += dk * (s2full / s0 - xbar * xbar.transpose());
      }
    }
  }
  return ll;
}

StepFunction breslow_baseline(const CoxWorkspace& ws, const VecRef& beta) {
  const VectorXd eta = ws.x * beta;
  const double m = eta.size() ? eta.maxCoeff() : 0.0;
  std::vector<double> knots, jumps;
  double s0 = 0.0;
  for (std::size_t g = 0; g + 1 < ws.group_start.size(); ++g) {
    const std::size_t lo = ws.group_start[g];
    const std::size_t hi = ws.group_start[g + 1];
    int dk = 0;
    for (std::size_t r = lo; r < hi; ++r) {
      s0 += std::exp(eta[static_cast<Eigen::Index>(r)] - m);
      dk += ws.status[r];
    }
    if (dk > 0) {
      knots.push_back(ws.time[static_cast<Eigen::Index>(lo)]);
      jumps.push_back(dk * std::exp(-m) / s0);
    }
  }
  // groups were visited in descending time; accumulate ascending
  std::reverse(knots.begin(), knots.end());
  std::reverse(jumps.begin(), jumps.end());
  std::vector<double> cum(jumps.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < jumps.size(); ++i) {
    acc += jumps[i];
    cum[i] = acc;
  }
  return StepFunction(std::move(knots), std::move(cum), 0.0);
}

}  // namespace

double cox_partial_loglik(const Dataset& arm_data, CoxOutcome outcome,
                          const VecRef& coefficients) {
  CoxWorkspace ws = prepare(arm_data, outcome);
  return cox_pass(ws, coefficients, nullptr, nullptr);
}

CoxModel fit_cox(const Dataset& arm_data, CoxOutcome outcome, int max_iterations,
                 double tol) {
  if (arm_data.n() == 0) throw invalid_input("fit_cox: empty data");
  CoxWorkspace ws = prepare(arm_data, outcome);
  if (ws.n_events == 0) {
    throw invalid_input(outcome == CoxOutcome::event
                            ? "fit_cox: no events in data"
                            : "fit_cox: no censorings in data");
  }

  VectorXd beta = VectorXd::Zero(ws.d);
  VectorXd grad(ws.d);
  MatrixXd hess(ws.d, ws.d);
  double ll = cox_pass(ws, beta, &grad, &hess);

  CoxFitDiagnostics diag;
  for (int it = 0; it < max_iterations; ++it) {
    diag.grad_norm = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
    if (diag.grad_norm <= tol) {
      diag.converged = true;
      break;
    }
    diag.iterations = it + 1;

    Eigen::LDLT<MatrixXd> ldlt(hess);
    VectorXd direction;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      direction = ldlt.solve(grad);
    } else {
      MatrixXd ridged = hess;
      ridged.diagonal().array() += 1e-8 * (1.0 + hess.diagonal().maxCoeff());
      direction = ridged.ldlt().solve(grad);
    }

    // step-halving keeps the partial likelihood monotone; the slack term
    // admits steps whose improvement sits below double precision
    const double slack = 1e-10 * (std::abs(ll) + 1.0);
    double step = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      VectorXd cand = beta + step * direction;
      const double cand_ll = cox_pass(ws, cand, nullptr, nullptr);
      if (std::isfinite(cand_ll) && cand_ll >= ll - slack) {
        beta = std::move(cand);
        ll = cand_ll;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no ascent direction left at floating precision
    ll = cox_pass(ws, beta, &grad, &hess);
  }
  if (!diag.converged) {
    diag.grad_norm = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
    diag.converged = diag.grad_norm <= tol;
  }

  CoxModel model;
  model.coefficients = std::move(beta);
  model.baseline_cumhaz = breslow_baseline(ws, model.coefficients);
  model.diagnostics = diag;
  return model;
}

double cox_survival(const CoxModel& model, const VecRef& x, double t) {
  if (!(t >= 0.0)) throw invalid_input("cox_survival: t must be nonnegative");
  const double cumhaz = model.baseline_cumhaz(t);
  return std::exp(-cumhaz * std::exp(model.coefficients.dot(x)));
}

}  // namespace dsl
