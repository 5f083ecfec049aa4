#include "herlab/regression.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "herlab/error.hpp"

namespace herlab {
namespace {

RegressionTerm term(std::string name, double estimate, double variance) {
  RegressionTerm t;
  t.name = std::move(name);
  t.estimate = estimate;
  t.std_error = std::sqrt(std::max(0.0, variance));
  if (t.std_error > 0.0) {
    t.t = estimate / t.std_error;
  } else {
    t.t = estimate == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), estimate);
  }
  return t;
}

}  // namespace

RegressionFit fit_task_regression(std::span<const RegressionPoint> points) {
  std::vector<std::string> tasks;
  std::set<double> precisions;
  std::set<double> accuracies;
  for (const auto& p : points) {
    if (std::find(tasks.begin(), tasks.end(), p.task) == tasks.end()) tasks.push_back(p.task);
    precisions.insert(p.precision);
    accuracies.insert(p.accuracy);
  }
  if (precisions.size() < 2) throw SingularDesignError("precision is constant across points");
  if (accuracies.size() < 2) throw SingularDesignError("accuracy is constant across points");
  if (points.size() < tasks.size() + 3) {
    throw SingularDesignError("regression needs at least tasks + 3 points (have " +
                              std::to_string(points.size()) + " points over " +
                              std::to_string(tasks.size()) + " tasks)");
  }

  const auto n = static_cast<Eigen::Index>(points.size());
  const auto k = static_cast<Eigen::Index>(tasks.size() + 2);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, k);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = points[static_cast<std::size_t>(i)];
    X(i, 0) = p.precision;
    X(i, 1) = p.accuracy;
    const auto task = std::find(tasks.begin(), tasks.end(), p.task) - tasks.begin();
    X(i, 2 + task) = 1.0;
    y[i] = p.success;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    throw SingularDesignError("design matrix has rank " + std::to_string(qr.rank()) + " < " +
                              std::to_string(k) + " (precision or accuracy collinear with task intercepts)");
  }
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd residual = y - X * beta;

  RegressionFit fit;
  fit.n_points = points.size();
  fit.dof = static_cast<std::size_t>(n - k);
  fit.sigma2 = residual.squaredNorm() / static_cast<double>(fit.dof);
  const Eigen::MatrixXd covariance = fit.sigma2 * (X.transpose() * X).inverse();
  fit.precision = term("precision", beta[0], covariance(0, 0));
  fit.accuracy = term("accuracy", beta[1], covariance(1, 1));
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto c = static_cast<Eigen::Index>(t + 2);
    fit.intercepts.push_back(term("task:" + tasks[t], beta[c], covariance(c, c)));
  }
  return fit;
}

}  // namespace herlab
