#pragma once

#include <algorithm>
#include <vector>

#include "dsl/common.hpp"

namespace dsl {

/// Right-continuous step function: f(t) = value_before_first for t < knots[0],
/// f(t) = values[i] on [knots[i], knots[i+1]), and the last value from the
/// last knot onward. Carrier for Kaplan-Meier curves and Breslow baselines.
class StepFunction {
 public:
  StepFunction() : value_before_first_(0.0) {}

  StepFunction(std::vector<double> knots, std::vector<double> values,
               double value_before_first)
      : knots_(std::move(knots)),
        values_(std::move(values)),
        value_before_first_(value_before_first) {
    if (knots_.size() != values_.size()) {
      throw invalid_input("StepFunction: knots and values differ in length");
    }
    for (std::size_t i = 1; i < knots_.size(); ++i) {
      if (!(knots_[i - 1] < knots_[i])) {
        throw invalid_input("StepFunction: knots must be strictly increasing");
      }
    }
  }

  /// A survival-type curve: values in [0,1] and nonincreasing.
  static StepFunction survival_curve(std::vector<double> knots,
                                     std::vector<double> values) {
    StepFunction f(std::move(knots), std::move(values), 1.0);
    double prev = 1.0;
    for (double v : f.values_) {
      if (v < 0.0 || v > 1.0 || v > prev + 1e-12) {
        throw invalid_input(
            "StepFunction: survival curve must be nonincreasing in [0,1]");
      }
      prev = v;
    }
    return f;
  }

  double operator()(double t) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    if (it == knots_.begin()) return value_before_first_;
    return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
  }

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  double value_before_first() const { return value_before_first_; }
  bool empty() const { return knots_.empty(); }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  double value_before_first_;
};

}  // namespace dsl
