#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "netsched/empirical.hpp"

namespace netsched {

// Per-step cost c(m, mhat, a) on probability views, with a declared upper
// bound c_max used by the truncation index and in tail bounds.
class CostModel {
 public:
  using Fn = std::function<double(const Eigen::VectorXd& m,
                                  const Eigen::VectorXd& mhat, int a)>;

  CostModel(std::string name, Fn fn, double c_max);

  double operator()(const Eigen::VectorXd& m, const Eigen::VectorXd& mhat,
                    int a) const {
    return fn_(m, mhat, a);
  }
  double c_max() const { return c_max_; }
  const std::string& name() const { return name_; }

  // |<labels,m>| * |<labels,m> - <labels,mhat>| + fee*a. With n=1 this is the
  // weighted absolute error between states.
  static CostModel weighted_abs(const StateSpace& states, double fee);

  // KL(m || mhat) + fee*a, natural log, 0*log0 = 0. Zero mhat entries facing
  // positive m mass are floored at 1/(10n) and mhat renormalized; that floor
  // also caps c_max. The floor is recorded in artifact metadata.
  static CostModel kl_plus_fee(const EmpiricalSpace& space, double fee);

  // (m - mhat)^T (m - mhat) + fee*a.
  static CostModel quadratic_fee(double fee);

  // Explicit table c[m][mhat][a] over M(n) atom indices.
  static CostModel from_table(const EmpiricalSpace& space,
                              std::vector<double> table /* ((m*|M|)+mh)*2+a */);

  double table_lookup(const EmpiricalSpace& space, int m, int mhat,
                      int a) const;

 private:
  std::string name_;
  Fn fn_;
  double c_max_;
};

// Exhaustive max of c over M(n)^2 x {0,1}; the fallback when no c_max is
// supplied (finite domain, so the max is exact).
double compute_c_max(const CostModel::Fn& fn, const EmpiricalSpace& space);

}  // namespace netsched
