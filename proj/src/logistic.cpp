#include "dsl/logistic.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace dsl {

namespace {

// log(1 + e^z) without overflow
double log1pexp(double z) {
  if (z > 35.0) return z;
  if (z < -35.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

double penalized_loglik(const MatrixXd& z, const VectorXd& y, const VectorXd& b,
                        double ridge) {
  const VectorXd eta = z * b;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    ll += y[i] * eta[i] - log1pexp(eta[i]);
  }
  if (ridge > 0.0) {
    ll -= 0.5 * ridge * b.tail(b.size() - 1).squaredNorm();  // intercept free
  }
  return ll;
}

bool newton_fit(const MatrixXd& z, const VectorXd& y, double ridge,
                int max_iterations, double tol, VectorXd& b, LogisticModel& out) {
  const Eigen::Index p = z.cols();
  double ll = penalized_loglik(z, y, b, ridge);
  for (int it = 0; it < max_iterations; ++it) {
    const VectorXd eta = z * b;
    VectorXd prob(eta.size()), wdiag(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      prob[i] = expit(eta[i]);
      wdiag[i] = prob[i] * (1.0 - prob[i]);
    }
    VectorXd grad = z.transpose() * (y - prob);
    if (ridge > 0.0) grad.tail(p - 1) -= ridge * b.tail(p - 1);
    out.grad_norm = grad.cwiseAbs().maxCoeff();
    if (out.grad_norm <= tol) {
      out.converged = true;
      return true;
    }
    out.iterations = it + 1;

    MatrixXd hess = z.transpose() * wdiag.asDiagonal() * z;
    if (ridge > 0.0) {
      hess.diagonal().tail(p - 1).array() += ridge;
    }
    Eigen::LDLT<MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      return false;  // information matrix degenerate: caller applies ridge
    }
    const VectorXd direction = ldlt.solve(grad);

    // slack admits steps whose improvement is below double precision
    const double slack = 1e-10 * (std::abs(ll) + 1.0);
    double step = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      VectorXd cand = b + step * direction;
      const double cand_ll = penalized_loglik(z, y, cand, ridge);
      if (std::isfinite(cand_ll) && cand_ll >= ll - slack) {
        b = std::move(cand);
        ll = cand_ll;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return true;  // converged to floating precision
    if (ridge == 0.0 && (z * b).cwiseAbs().maxCoeff() > 30.0) {
      return false;  // fitted logits diverging: treat as separation
    }
  }
  return true;
}

}  // namespace

double logistic_loglik(const MatrixXd& x, const VectorXi& y, double intercept,
                       const VecRef& coefficients) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double eta = intercept + coefficients.dot(x.row(i));
    ll += y[i] * eta - log1pexp(eta);
  }
  return ll;
}

LogisticModel fit_logistic(const MatrixXd& x, const VectorXi& y,
                           int max_iterations, double tol) {
  const Eigen::Index n = x.rows();
  if (n == 0 || y.size() != n) throw invalid_input("fit_logistic: bad shapes");
  const Eigen::Index ones = (y.array() == 1).count();
  if (ones == 0 || ones == n) {
    throw invalid_input("fit_logistic: both classes must be present");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[i] != 0 && y[i] != 1) throw invalid_input("fit_logistic: labels must be 0/1");
  }

  MatrixXd z(n, x.cols() + 1);
  z.col(0).setOnes();
  z.rightCols(x.cols()) = x;
  const VectorXd yd = y.cast<double>();

  LogisticModel model;
  VectorXd b = VectorXd::Zero(z.cols());
  if (!newton_fit(z, yd, 0.0, max_iterations, tol, b, model)) {
    model = LogisticModel{};
    model.ridged = true;
    b.setZero();
    newton_fit(z, yd, 1e-6, max_iterations, tol, b, model);
    model.ridged = true;
  }
  model.intercept = b[0];
  model.coefficients = b.tail(b.size() - 1);
  return model;
}

double predict_propensity(const LogisticModel& model, const VecRef& x, int w,
                          double eps_clip) {
  if (w != 0 && w != 1) throw invalid_input("predict_propensity: w must be 0 or 1");
  const double p1 = expit(model.intercept + model.coefficients.dot(x));
  const double p = (w == 1) ? p1 : 1.0 - p1;
  if (eps_clip > 0.0) return clamp_prob(p, eps_clip, 1.0 - eps_clip);
  return p;
}

}  // namespace dsl
