#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "netsched/local_kernel.hpp"

namespace netsched {

class CostModel;

// The infinite-population map T-bar(p)(s') = sum_s p(s) T(s'|s,p). For
// decoupled dynamics this is the fixed matrix acting on p.
class MeanFieldOperator {
 public:
  using LocalAtFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd& p)>;

  static MeanFieldOperator decoupled(Eigen::MatrixXd local);
  static MeanFieldOperator coupled(LocalAtFn local_at);

  bool is_decoupled() const { return !local_at_; }
  Eigen::MatrixXd local_at(const Eigen::VectorXd& p) const;

  // One application of T-bar. Output is exactly a simplex point (up to the
  // input's own round-off); no renormalization happens here.
  Eigen::VectorXd step(const Eigen::VectorXd& p) const;

 private:
  Eigen::MatrixXd shared_;
  LocalAtFn local_at_;
};

Eigen::VectorXd mean_field_step(const Eigen::VectorXd& p,
                                const MeanFieldOperator& op);

// (t-1)-fold composition applied to the time-1 estimate.
Eigen::VectorXd infinite_population_estimate(const Eigen::VectorXd& m1, int t,
                                             const MeanFieldOperator& op);

// gamma*K_c / ((1-gamma)(1-gamma*K_p)) * noise_term. Throws when
// gamma*K_p >= 1 ("Assumption 4 violated").
double certainty_threshold(double k_c, double k_p, double gamma,
                           double noise_term);

struct LipschitzEstimates {
  double k_t = 0.0;  // kernel sensitivity in m
  double k_c = 0.0;  // cost growth per unit estimation error
  double k_p = 0.0;  // mean-field contraction factor
  int grid_resolution = 0;
};

// Max finite-difference ratios over a simplex grid. These are lower bounds on
// the true constants; the grid resolution is reported with them.
LipschitzEstimates estimate_lipschitz_constants(const MeanFieldOperator& op,
                                                const CostModel& cost,
                                                int num_states,
                                                int grid_resolution);

struct ThresholdReport {
  int n = 0;
  double k_c = 0.0;
  double k_p = 0.0;
  double gamma = 0.0;
  double c_fit = 0.0;
  double threshold = 0.0;
  double collection_cost = 0.0;
  bool recommend_estimate_only = false;

  std::string to_json() const;
};

// One-step empirical fit of the constant in the deviation recursion
// E||m_{t+1} - mhat_{t+1}|| <= K_p ||m_t - mhat_t|| + C/sqrt(n), using
// coupled starts (mhat_1 = m_1) on a decoupled chain.
double fit_deviation_constant(const Eigen::MatrixXd& local, int n,
                              const Eigen::VectorXd& m1, std::int64_t paths,
                              std::uint64_t seed, double k_p = 1.0,
                              int horizon = 1);

}  // namespace netsched
