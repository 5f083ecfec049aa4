#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace herlab {

struct RegressionPoint {
  std::string task;
  double precision = 0.0;
  double accuracy = 0.0;
  double success = 0.0;
};

struct RegressionTerm {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double t = 0.0;
};

struct RegressionFit {
  RegressionTerm precision;
  RegressionTerm accuracy;
  std::vector<RegressionTerm> intercepts;  // one per task, in first-seen order
  std::size_t n_points = 0;
  std::size_t dof = 0;
  double sigma2 = 0.0;  // residual variance
};

/// Ordinary least squares of success on precision, accuracy and one indicator
/// intercept per task. Throws SingularDesignError when the design is rank
/// deficient, precision or accuracy takes fewer than two distinct values, or
/// there are fewer than tasks + 3 points.
RegressionFit fit_task_regression(std::span<const RegressionPoint> points);

}  // namespace herlab
