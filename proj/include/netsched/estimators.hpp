#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>

#include "netsched/asymptotics.hpp"
#include "netsched/empirical.hpp"

namespace netsched {

// Estimator output: a pmf over S, plus the M(n) atom index when the estimate
// is an atom (-1 otherwise, e.g. for the mean).
struct Estimate {
  int atom = -1;
  Eigen::VectorXd pmf;
};

// Deterministic map from the conditional law of the data given (x, y) -- the
// row T_m^y(., x) -- to an estimate. x and y are passed alongside the row so
// that hold-last-data style estimators do not need to invert it.
class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual Estimate estimate(const Eigen::VectorXd& row, int x, int y) const = 0;
  virtual std::string name() const = 0;
};

// Highest-probability atom; ties resolve to the lowest canonical index.
int map_estimate(const Eigen::VectorXd& row);

std::unique_ptr<Estimator> make_map_estimator(const EmpiricalSpace& space);
std::unique_ptr<Estimator> make_mean_estimator(const EmpiricalSpace& space);
std::unique_ptr<Estimator> make_identity_estimator(const EmpiricalSpace& space);
std::unique_ptr<Estimator> make_infinite_population_estimator(
    const EmpiricalSpace& space, MeanFieldOperator op);

// Factory by config name: map | mean | identity | infinite_population.
// The infinite-population estimator needs the local kernel it propagates.
std::unique_ptr<Estimator> make_estimator(const std::string& name,
                                          const EmpiricalSpace& space,
                                          const LocalKernel* local = nullptr);

}  // namespace netsched
