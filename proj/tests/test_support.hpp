#pragma once

#include <memory>
#include <vector>

#include "netsched/cost_model.hpp"
#include "netsched/estimators.hpp"
#include "netsched/planning.hpp"
#include "netsched/rng.hpp"
#include "netsched/transition_kernel.hpp"

namespace netsched::testing {

inline StateSpace numbered_states(int count) {
  std::vector<double> labels;
  for (int i = 0; i < count; ++i) labels.push_back(static_cast<double>(i));
  return StateSpace(std::move(labels));
}

inline Eigen::MatrixXd random_stochastic(int size, SplitMix64& rng) {
  Eigen::MatrixXd m(size, size);
  for (int i = 0; i < size; ++i) {
    double sum = 0.0;
    for (int j = 0; j < size; ++j) {
      m(i, j) = rng.uniform() + 0.05;
      sum += m(i, j);
    }
    m.row(i) /= sum;
  }
  return m;
}

// A self-contained planning instance. The space sits behind a stable address
// so estimators can hold references to it.
struct Instance {
  std::unique_ptr<EmpiricalSpace> space;
  std::unique_ptr<TransitionKernel> kernel;
  std::unique_ptr<CostModel> cost;
  std::unique_ptr<Estimator> estimator;
  double q = 1.0;
  double gamma = 0.9;

  PlanningProblem problem() const {
    return PlanningProblem{kernel.get(), space.get(), cost.get(),
                           estimator.get(), q, gamma};
  }
};

// Random decoupled instance with a random nonnegative cost table and the
// highest-probability-atom estimator.
inline Instance random_instance(int num_states, int n, double q, double gamma,
                                std::uint64_t seed, double cost_scale = 1.0,
                                double fee_bias = 0.0) {
  SplitMix64 rng(seed);
  Instance inst;
  inst.space = std::make_unique<EmpiricalSpace>(numbered_states(num_states), n);
  inst.kernel = std::make_unique<TransitionKernel>(build_kernel_exact(
      LocalKernel::decoupled(random_stochastic(num_states, rng)),
      *inst.space));
  std::vector<double> table(
      static_cast<std::size_t>(inst.space->size()) * inst.space->size() * 2);
  for (std::size_t i = 0; i < table.size(); ++i)
    table[i] = cost_scale * rng.uniform() +
               fee_bias * static_cast<double>(i % 2);
  inst.cost = std::make_unique<CostModel>(
      CostModel::from_table(*inst.space, std::move(table)));
  inst.estimator = make_map_estimator(*inst.space);
  inst.q = q;
  inst.gamma = gamma;
  return inst;
}

}  // namespace netsched::testing
