#include "dsl/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dsl/rng.hpp"

namespace dsl {

Dataset::Dataset(MatrixXd x, VectorXd u, VectorXi delta, VectorXi w)
    : x_(std::move(x)), u_(std::move(u)), delta_(std::move(delta)), w_(std::move(w)) {
  const Eigen::Index n = u_.size();
  if (x_.rows() != n || delta_.size() != n || w_.size() != n) {
    throw invalid_input("Dataset: column lengths disagree");
  }
}

Dataset Dataset::arm(int w) const {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < n(); ++i) {
    if (w_[i] == w) rows.push_back(i);
  }
  return subset(rows);
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  MatrixXd xs(m, dim());
  VectorXd us(m);
  VectorXi ds(m), ws(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = rows[static_cast<std::size_t>(r)];
    xs.row(r) = x_.row(i);
    us[r] = u_[i];
    ds[r] = delta_[i];
    ws[r] = w_[i];
  }
  return Dataset(std::move(xs), std::move(us), std::move(ds), std::move(ws));
}

Dataset validate_dataset(const std::vector<SubjectRecord>& raw_records, int d) {
  if (raw_records.empty()) {
    throw invalid_input("validate_dataset: empty input");
  }
  if (d <= 0) {
    throw invalid_input("validate_dataset: covariate dimension must be positive");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(raw_records.size());
  MatrixXd x(n, d);
  VectorXd u(n);
  VectorXi delta(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const SubjectRecord& r = raw_records[static_cast<std::size_t>(i)];
    const std::string at = " at index " + std::to_string(i);
    if (!(r.u >= 0.0) || !std::isfinite(r.u)) {
      throw invalid_input("negative follow-up" + at);
    }
    if (r.delta != 0 && r.delta != 1) {
      throw invalid_input("event indicator not binary" + at);
    }
    if (r.w != 0 && r.w != 1) {
      throw invalid_input("treatment not binary" + at);
    }
    if (r.x.size() != d) {
      throw invalid_input("covariate dimension mismatch" + at + ": expected " +
                          std::to_string(d) + ", got " + std::to_string(r.x.size()));
    }
    if (!r.x.allFinite()) {
      throw invalid_input("non-finite covariate" + at);
    }
    x.row(i) = r.x.transpose();
    u[i] = r.u;
    delta[i] = r.delta;
    w[i] = r.w;
  }
  return Dataset(std::move(x), std::move(u), std::move(delta), std::move(w));
}

TimeGrid::TimeGrid(VectorXd times) : times_(std::move(times)) {
  if (times_.size() < 1) {
    throw invalid_input("TimeGrid: needs at least one time");
  }
  if (!(times_[0] > 0.0)) {
    throw invalid_input("TimeGrid: times must be strictly positive");
  }
  for (Eigen::Index i = 1; i < times_.size(); ++i) {
    if (!(times_[i - 1] < times_[i])) {
      throw invalid_input("TimeGrid: times must be strictly increasing");
    }
  }
}

double empirical_quantile(std::vector<double> v, double p) {
  if (v.empty()) throw invalid_input("empirical_quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw invalid_input("empirical_quantile: p outside [0,1]");
  std::sort(v.begin(), v.end());
  const double h = p * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= v.size()) return v.back();
  const double frac = h - static_cast<double>(lo);
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

TimeGrid build_time_grid(const Dataset& dataset, int j, double q_lo, double q_hi) {
  if (j < 1) throw invalid_input("build_time_grid: j must be >= 1");
  if (dataset.n() == 0) throw invalid_input("build_time_grid: empty dataset");
  if (!(q_lo > 0.0 && q_lo < q_hi && q_hi < 1.0)) {
    throw invalid_input("build_time_grid: need 0 < q_lo < q_hi < 1");
  }
  std::vector<double> u(dataset.u().data(), dataset.u().data() + dataset.n());
  const double u_min = *std::min_element(u.begin(), u.end());
  const double u_max = *std::max_element(u.begin(), u.end());
  if (u_min == u_max) {
    throw invalid_input("build_time_grid: all observed times identical");
  }
  if (j == 1) {
    // single-point grids sit at the observed median; (q_lo, q_hi) are unused
    VectorXd t(1);
    t[0] = empirical_quantile(u, 0.5);
    return TimeGrid(std::move(t));
  }
  const double lo = empirical_quantile(u, q_lo);
  const double hi = empirical_quantile(u, q_hi);
  if (!(lo < hi)) {
    throw invalid_input("build_time_grid: degenerate quantile range");
  }
  VectorXd t(j);
  for (int i = 0; i < j; ++i) {
    t[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(j - 1);
  }
  return TimeGrid(std::move(t));
}

std::vector<Eigen::Index> FoldAssignment::members(int fold) const {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(static_cast<Eigen::Index>(i));
  }
  return out;
}

std::vector<Eigen::Index> FoldAssignment::complement(int fold) const {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(static_cast<Eigen::Index>(i));
  }
  return out;
}

FoldAssignment assign_folds(Eigen::Index n, int k, std::uint64_t seed) {
  if (k < 2) throw invalid_input("assign_folds: k must be >= 2");
  if (static_cast<Eigen::Index>(k) > n) {
    throw invalid_input("assign_folds: k exceeds record count");
  }
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng(seed);
  rng.shuffle(perm);

  FoldAssignment fa;
  fa.k = k;
  fa.fold_of.assign(static_cast<std::size_t>(n), -1);
  const Eigen::Index base = n / k;
  const Eigen::Index rem = n % k;
  std::size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    const Eigen::Index size = base + (f < rem ? 1 : 0);
    for (Eigen::Index s = 0; s < size; ++s) {
      fa.fold_of[static_cast<std::size_t>(perm[pos++])] = f;
    }
  }
  return fa;
}

StepFunction kaplan_meier(const Dataset& dataset, std::optional<int> arm) {
  const Dataset* data = &dataset;
  Dataset restricted;
  if (arm.has_value()) {
    restricted = dataset.arm(*arm);
    data = &restricted;
  }
  const Eigen::Index n = data->n();
  if (n == 0) {
    throw invalid_input("kaplan_meier: no records in requested arm");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const VectorXd& u = data->u();
  const VectorXi& delta = data->delta();
  // events sort before censorings at tied times
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (u[a] != u[b]) return u[a] < u[b];
    return delta[a] > delta[b];
  });

  std::vector<double> knots, values;
  double surv = 1.0;
  Eigen::Index at_risk = n;
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = u[order[i]];
    Eigen::Index events = 0, leaving = 0;
    std::size_t jdx = i;
    while (jdx < order.size() && u[order[jdx]] == t) {
      events += delta[order[jdx]];
      ++leaving;
      ++jdx;
    }
    if (events > 0) {
      surv *= 1.0 - static_cast<double>(events) / static_cast<double>(at_risk);
      knots.push_back(t);
      values.push_back(surv);
    }
    at_risk -= leaving;
    i = jdx;
  }
  return StepFunction::survival_curve(std::move(knots), std::move(values));
}

}  // namespace dsl
