#pragma once

#include <optional>
#include <vector>

#include "dsl/common.hpp"
#include "dsl/step_function.hpp"

namespace dsl {

/// One observation: follow-up time, event indicator, covariates, treatment.
struct SubjectRecord {
  double u = 0.0;  // follow-up time, min(event, censoring)
  int delta = 0;   // 1 = event observed, 0 = censored
  VectorXd x;      // covariates, length d
  int w = 0;       // treatment arm in {0,1}
};

/// Validated observed-data sample, stored columnar. Immutable after
/// construction; safe to share across threads.
class Dataset {
 public:
  Dataset() = default;
  Dataset(MatrixXd x, VectorXd u, VectorXi delta, VectorXi w);

  Eigen::Index n() const { return u_.size(); }
  Eigen::Index dim() const { return x_.cols(); }

  const MatrixXd& x() const { return x_; }
  const VectorXd& u() const { return u_; }
  const VectorXi& delta() const { return delta_; }
  const VectorXi& w() const { return w_; }

  Eigen::MatrixXd::ConstRowXpr x_row(Eigen::Index i) const { return x_.row(i); }

  SubjectRecord record(Eigen::Index i) const {
    return SubjectRecord{u_[i], delta_[i], x_.row(i).transpose(), w_[i]};
  }

  /// Records in one treatment arm (copy).
  Dataset arm(int w) const;

  /// Subset by row indices (copy), preserving order.
  Dataset subset(const std::vector<Eigen::Index>& rows) const;

  Eigen::Index count_arm(int w) const { return (w_.array() == w).count(); }

 private:
  MatrixXd x_;
  VectorXd u_;
  VectorXi delta_;
  VectorXi w_;
};

/// Checks every record against the Dataset invariants and assembles the
/// columnar store. Errors name the first offending record index.
Dataset validate_dataset(const std::vector<SubjectRecord>& raw_records, int d);

/// Strictly increasing evaluation times t_1 < ... < t_J, all positive.
class TimeGrid {
 public:
  explicit TimeGrid(VectorXd times);
  TimeGrid() = default;

  const VectorXd& times() const { return times_; }
  Eigen::Index j() const { return times_.size(); }
  double t_min() const { return times_[0]; }
  double t_max() const { return times_[times_.size() - 1]; }

 private:
  VectorXd times_;
};

/// Empirical quantile of a sample with linear interpolation between order
/// statistics (the R type-7 rule).
double empirical_quantile(std::vector<double> sorted_or_not, double p);

/// J equally spaced times between the q_lo and q_hi empirical quantiles of
/// the pooled observed times; J=1 uses the median and ignores (q_lo, q_hi).
TimeGrid build_time_grid(const Dataset& dataset, int j, double q_lo = 0.2,
                         double q_hi = 0.8);

/// Partition of record indices into k nearly equal folds.
struct FoldAssignment {
  std::vector<int> fold_of;  // record index -> fold id in [0, k)
  int k = 0;

  std::vector<Eigen::Index> members(int fold) const;
  std::vector<Eigen::Index> complement(int fold) const;
};

/// Uniformly random permutation split into k nearly equal folds;
/// deterministic given the seed.
FoldAssignment assign_folds(Eigen::Index n, int k, std::uint64_t seed);

/// Product-limit estimator. With an arm given, restricted to that arm.
/// Ties: events are processed before censorings at equal times.
StepFunction kaplan_meier(const Dataset& dataset,
                          std::optional<int> arm = std::nullopt);

}  // namespace dsl
