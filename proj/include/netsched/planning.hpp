#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "netsched/cost_model.hpp"
#include "netsched/estimators.hpp"
#include "netsched/transition_kernel.hpp"

namespace netsched {

// Smallest k with gamma^k <= (1-gamma)*epsilon / (2*c_max). Degenerate inputs
// (epsilon already >= 2*c_max/(1-gamma)) yield k=0 and set the flag.
int truncation_index(double epsilon, double gamma, double c_max,
                     bool* degenerate = nullptr);

struct PlanningProblem {
  const TransitionKernel* kernel = nullptr;
  const EmpiricalSpace* space = nullptr;
  const CostModel* cost = nullptr;
  const Estimator* estimator = nullptr;
  double credibility = 1.0;  // q
  double gamma = 0.9;
};

// chat(x,y,a): expected per-step cost given the last credible data x and y
// elapsed steps, with the estimate produced from the row T^y(., x).
double expected_step_cost(const PlanningProblem& problem, int x, int y, int a);

struct ValueTable {
  int num_x = 0;
  int k = 0;
  int anchor = 0;
  std::vector<double> v0, v1, v;   // index (x*(k+1) + y)
  std::vector<std::uint8_t> action;
  int iterations = 0;
  double residual = 0.0;

  std::size_t idx(int x, int y) const {
    return static_cast<std::size_t>(x) * (k + 1) + y;
  }
  double value(int x, int y) const { return v[idx(x, y)]; }
  double value0(int x, int y) const { return v0[idx(x, y)]; }
  double value1(int x, int y) const { return v1[idx(x, y)]; }
  int action_at(int x, int y) const { return action[idx(x, y)]; }

  // First y with a collect action for the given x; -1 when none.
  int first_collect(int x) const;

  void save_csv(const EmpiricalSpace& space, const std::filesystem::path& path,
                const std::map<std::string, std::string>& metadata = {}) const;
};

struct ValueIterationOptions {
  double tol = 1e-9;
  // <0: derive from the contraction bound ceil(log(tol(1-gamma)/c_max)/log g).
  int max_iterations = -1;
  // Wrap-around atom m* used at y=k; <0 selects the default (atom 0, the
  // first atom of the canonical enumeration).
  int anchor = -1;
};

// Fixed point of the truncated Bellman equation on M(n) x {0..k}. Throws
// NumericalError when the residual does not reach tol within the budget.
ValueTable value_iteration(const PlanningProblem& problem, int k,
                           const ValueIterationOptions& options = {});

// Greedy actions, ties to a=0 (matches the weak inequality in the policy).
std::vector<std::uint8_t> extract_strategy(const ValueTable& table);

// Exact optimal expected discounted cost over all history-dependent
// strategies for a small horizon, by exhaustive enumeration of observation
// histories with a Bayes-filtered belief. Independent of the (x,y) recursion:
// beliefs are propagated by filtering, never read from kernel powers.
struct OracleLimits {
  int max_atoms = 20;
  int max_horizon = 8;
};
double bellman_oracle_small(const PlanningProblem& problem, int initial_atom,
                            int horizon, const OracleLimits& limits = {});

}  // namespace netsched
