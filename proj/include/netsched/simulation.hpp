#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netsched/cost_model.hpp"
#include "netsched/estimators.hpp"
#include "netsched/local_kernel.hpp"
#include "netsched/rng.hpp"
#include "netsched/transition_kernel.hpp"

namespace netsched {

// Decision rule queried by the simulators: action for the current (x, y).
using StrategyFn = std::function<int(int x_atom, int y)>;

struct ChainModel {
  const EmpiricalSpace* space = nullptr;
  const LocalKernel* local = nullptr;
  double credibility = 1.0;
  int delay = 0;  // fixed observation delay tau
};

// Optional joint noise generator for exchangeable-but-not-iid experiments:
// returns one noise value per node.
struct PathwiseDynamics {
  DynamicsFn f;
  std::function<std::vector<double>(int n, SplitMix64&)> joint_noise;
};

// Node-level world for the Markov-chain branch. Separate RNG streams drive
// node noises and the credibility channel.
class ChainWorld {
 public:
  ChainWorld(const ChainModel& model, const EmpiricalDistribution& m1,
             std::uint64_t seed);
  ChainWorld(const ChainModel& model, const EmpiricalDistribution& m1,
             std::uint64_t seed, PathwiseDynamics dynamics);

  // Advance all nodes, run the credibility channel when a=1, update (x, y).
  void step(int action);

  int t() const { return t_; }
  const EmpiricalDistribution& data() const { return m_; }
  int data_atom() const { return m_atom_; }
  int x_atom() const { return x_atom_; }
  int y() const { return y_; }
  bool last_observation_blank() const { return last_blank_; }

  // Per-node transition counts, for model-based learning.
  const Eigen::MatrixXi& transition_counts() const { return counts_; }
  std::int64_t collect_attempts() const { return collect_attempts_; }
  std::int64_t credible_deliveries() const { return credible_deliveries_; }

 private:
  void refresh_atom();

  const ChainModel& model_;
  std::optional<PathwiseDynamics> dynamics_;
  std::vector<int> nodes_;
  EmpiricalDistribution m_;
  int m_atom_ = 0;
  int x_atom_ = 0;
  int y_ = 0;
  int t_ = 1;
  bool last_blank_ = false;
  SplitMix64 noise_rng_;
  SplitMix64 channel_rng_;
  std::deque<std::pair<int, int>> pending_;  // (due time, atom) delayed data
  Eigen::MatrixXi counts_;
  std::int64_t collect_attempts_ = 0;
  std::int64_t credible_deliveries_ = 0;
};

struct EvaluationReport {
  double mean = 0.0;
  double std_error = 0.0;
  double tail_bound = 0.0;  // gamma^H c_max/(1-gamma)
  std::int64_t paths = 0;
  int horizon = 0;
};

struct EvaluationOptions {
  double gamma = 0.9;
  int horizon = 0;        // 0: derive from tail_tolerance
  double tail_tolerance = 0.0;  // 0: default 1e-6 * c_max/(1-gamma)
  std::int64_t paths = 1000;
  std::uint64_t seed = 1;
  int threads = 0;        // 0: hardware concurrency
};

// Monte-Carlo estimate of the discounted cost of a strategy on the chain
// world. Deterministic for a fixed seed regardless of thread count.
EvaluationReport evaluate_strategy_chain(
    const ChainModel& model, const TransitionKernel& kernel,
    const CostModel& cost, const Estimator& estimator,
    const StrategyFn& strategy, int initial_atom,
    const EvaluationOptions& options);

// Empirical one-step transition row from a fixed m (Monte-Carlo kernel
// estimate; also the fallback when M(n) is over the enumeration cap). The
// pathwise overload drives explicit dynamics with a joint noise generator,
// the only construction available under exchangeable-but-not-iid noises.
Eigen::VectorXd estimate_kernel_row_mc(const ChainModel& model,
                                       const EmpiricalDistribution& m,
                                       std::int64_t samples,
                                       std::uint64_t seed);
Eigen::VectorXd estimate_kernel_row_mc(const ChainModel& model,
                                       const PathwiseDynamics& dynamics,
                                       const EmpiricalDistribution& m,
                                       std::int64_t samples,
                                       std::uint64_t seed);

enum class NoiseKind { kGaussian, kUniform, kExponentialCentered };

struct LinearWorldModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd weights;   // n x D: per-node eigenvector weights v^{i,d}
  double node_variance = 1.0;
  NoiseKind kind = NoiseKind::kGaussian;
  double credibility = 1.0;
  int state_dim() const { return static_cast<int>(A.rows()); }
  int nodes() const { return static_cast<int>(weights.rows()); }
};

// Mode-vector world: m' = A m + wbar, with wbar assembled from per-node
// noises through the eigenvector weights.
class LinearWorld {
 public:
  LinearWorld(const LinearWorldModel& model, const Eigen::VectorXd& m1,
              std::uint64_t seed);

  void step(int action);

  const Eigen::VectorXd& data() const { return m_; }
  const Eigen::VectorXd& x() const { return x_; }
  int y() const { return y_; }
  Eigen::VectorXd last_noise() const { return wbar_; }

 private:
  const LinearWorldModel& model_;
  Eigen::VectorXd m_, x_, wbar_;
  int y_ = 0;
  SplitMix64 noise_rng_;
  SplitMix64 channel_rng_;
};

// Trace row schema shared by export and offline replay.
struct TraceRow {
  int t = 0;
  std::vector<int> counts;
  int action = 0;
  bool blank = true;
  int x_atom = 0;
  int y = 0;
  double cost = 0.0;
};

void save_trace_csv(const std::filesystem::path& path,
                    const std::vector<TraceRow>& rows,
                    const std::map<std::string, std::string>& metadata = {});
std::vector<TraceRow> load_trace_csv(const std::filesystem::path& path);

// Roll one seeded trajectory under a strategy and log it.
std::vector<TraceRow> record_chain_trace(const ChainModel& model,
                                         const TransitionKernel& kernel,
                                         const CostModel& cost,
                                         const Estimator& estimator,
                                         const StrategyFn& strategy,
                                         int initial_atom, int steps,
                                         std::uint64_t seed);

}  // namespace netsched
