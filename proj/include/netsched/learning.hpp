#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "netsched/planning.hpp"
#include "netsched/rng.hpp"

namespace netsched {

// Truncated planning state machine shared by planning and learning. Holds no
// model knowledge: the next state is a pure function of (x, y, observation).
struct VirtualMdpConfig {
  int num_x = 0;        // |M(n)|
  int k = 0;
  int anchor = 0;       // m*
  double credibility = 1.0;
  double gamma = 0.9;
};

// blank & y<k -> (x, y+1); blank & y=k -> (m*, 0); data -> (data, 0).
std::pair<int, int> virtual_step(int x, int y, const std::optional<int>& obs,
                                 const VirtualMdpConfig& cfg);

// visits^(-exponent); the default exponent 1 is the inverse-visit-count rule.
double learning_rate(std::int64_t visits, double exponent = 1.0);

struct QTable {
  int num_x = 0;
  int k = 0;
  std::vector<double> q;               // ((x*(k+1))+y)*2 + a
  std::vector<std::int64_t> visits;

  QTable() = default;
  QTable(int num_x_, int k_)
      : num_x(num_x_), k(k_),
        q(static_cast<std::size_t>(num_x_) * (k_ + 1) * 2, 0.0),
        visits(static_cast<std::size_t>(num_x_) * (k_ + 1) * 2, 0) {}

  std::size_t idx(int x, int y, int a) const {
    return (static_cast<std::size_t>(x) * (k + 1) + y) * 2 + a;
  }
  double value(int x, int y, int a) const { return q[idx(x, y, a)]; }
  double min_value(int x, int y) const {
    return std::min(q[idx(x, y, 0)], q[idx(x, y, 1)]);
  }
  int greedy(int x, int y) const {
    return q[idx(x, y, 0)] <= q[idx(x, y, 1)] ? 0 : 1;
  }

  void save_csv(const std::filesystem::path& path,
                const std::map<std::string, std::string>& metadata = {}) const;
  static QTable load_csv(const std::filesystem::path& path);
};

// One tabular update: Q <- (1-alpha) Q + alpha (c + gamma min_a' Q(next, a')).
// Reads the frozen table `prev`, writes into `next_table`.
void q_update(const QTable& prev, QTable& next_table, int x, int y, int a,
              double observed_cost, std::pair<int, int> next_state,
              double alpha, double gamma);

// One sampled transition for a queried (x,y,a): an immediate cost draw and an
// observation draw consistent with the model's cost and observation laws.
class SampleEnv {
 public:
  struct Sample {
    double cost = 0.0;
    std::optional<int> obs;  // empty = blank
  };
  virtual ~SampleEnv() = default;
  virtual Sample sample(int x, int y, int a, SplitMix64& rng) = 0;
};

// True-model environment: draws m ~ T^y(.|x), prices it against the
// configured estimator, then pushes one more kernel step for the observation.
class KernelSampleEnv : public SampleEnv {
 public:
  KernelSampleEnv(const PlanningProblem& problem, int k);
  Sample sample(int x, int y, int a, SplitMix64& rng) override;

 private:
  const PlanningProblem& problem_;
  int k_;
  std::vector<Eigen::MatrixXd> cdf_by_y_;  // cumulative rows of T^y
  Eigen::MatrixXd cdf_step_;               // cumulative rows of T
  std::vector<Estimate> estimate_cache_;   // per (x,y)
};

// Offline environment replaying logged (x,y,a) -> (cost, obs) samples.
class TraceReplayEnv : public SampleEnv {
 public:
  void add(int x, int y, int a, double cost, std::optional<int> obs);
  Sample sample(int x, int y, int a, SplitMix64& rng) override;
  std::int64_t size() const { return total_; }

 private:
  std::map<std::tuple<int, int, int>, std::vector<Sample>> samples_;
  std::int64_t total_ = 0;
};

struct TrainOptions {
  std::int64_t sweeps = 100000;
  double lr_exponent = 1.0;
  double drift_threshold = 1e-4;  // sup-norm drift, averaged over the window
  int drift_window = 100;
  std::uint64_t seed = 1;
  int probe_x = -1;  // when >= 0, record min_a Q(probe) once per curve_stride
  int probe_y = -1;
  std::int64_t curve_stride = 100;
};

struct TrainResult {
  QTable table;
  std::int64_t sweeps_run = 0;
  double last_drift = 0.0;
  bool converged = false;  // drift threshold met within the budget
  std::vector<std::pair<std::int64_t, double>> curve;

  void save_curve_csv(const std::filesystem::path& path,
                      const std::map<std::string, std::string>& metadata = {})
      const;
};

// Synchronized sweeps: every (x,y,a) is updated each sweep from the frozen
// previous table, with per-entry deterministic RNG streams. Bit-reproducible
// for a fixed seed.
TrainResult train_synchronized(SampleEnv& env, const VirtualMdpConfig& cfg,
                               const TrainOptions& options);

// Damped expected updates (exact cost and exact observation law); the
// known-model counterpart of train_synchronized.
TrainResult train_expected(const PlanningProblem& problem,
                           const VirtualMdpConfig& cfg,
                           const TrainOptions& options);

// Build an offline environment from a logged trajectory: each row yields one
// (x, y, a) -> (cost, next observation) sample, the observation read off the
// following row's delivery flag.
struct TraceRowView {
  int x_atom = 0;
  int y = 0;
  int action = 0;
  double cost = 0.0;
  bool next_blank = true;
  int next_x_atom = 0;
};
TraceReplayEnv replay_env_from_rows(const std::vector<TraceRowView>& rows);

// Model-based route for decoupled i.i.d. dynamics: estimate T(s'|s) and the
// credibility from counts, then hand the rebuilt kernel to planning.
struct ModelEstimate {
  Eigen::MatrixXd local;          // row-normalized transition counts
  double credibility = 1.0;       // credible deliveries / collect attempts
  std::int64_t transition_samples = 0;
  std::int64_t collect_attempts = 0;
};
ModelEstimate estimate_decoupled_model(const Eigen::MatrixXi& transition_counts,
                                       std::int64_t credible_deliveries,
                                       std::int64_t collect_attempts);

}  // namespace netsched
