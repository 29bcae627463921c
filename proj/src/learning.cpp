#include "netsched/learning.hpp"

#include <cmath>
#include <deque>

#include "netsched/csv.hpp"
#include "netsched/errors.hpp"

namespace netsched {

std::pair<int, int> virtual_step(int x, int y, const std::optional<int>& obs,
                                 const VirtualMdpConfig& cfg) {
  if (y < 0 || y > cfg.k) throw ConfigError("elapsed time outside [0,k]");
  if (obs.has_value()) return {*obs, 0};
  if (y < cfg.k) return {x, y + 1};
  return {cfg.anchor, 0};
}

double learning_rate(std::int64_t visits, double exponent) {
  if (visits < 1) throw ConfigError("visit count starts at 1");
  return std::pow(static_cast<double>(visits), -exponent);
}

void q_update(const QTable& prev, QTable& next_table, int x, int y, int a,
              double observed_cost, std::pair<int, int> next_state,
              double alpha, double gamma) {
  double target = observed_cost +
                  gamma * prev.min_value(next_state.first, next_state.second);
  std::size_t i = prev.idx(x, y, a);
  next_table.q[i] = (1.0 - alpha) * prev.q[i] + alpha * target;
}

void QTable::save_csv(const std::filesystem::path& path,
                      const std::map<std::string, std::string>& metadata)
    const {
  CsvWriter w(path, metadata, {"x_index", "y", "a", "Q", "visits"});
  for (int x = 0; x < num_x; ++x)
    for (int y = 0; y <= k; ++y)
      for (int a = 0; a < 2; ++a)
        w.row({std::to_string(x), std::to_string(y), std::to_string(a),
               CsvWriter::num(q[idx(x, y, a)]),
               std::to_string(visits[idx(x, y, a)])});
}

QTable QTable::load_csv(const std::filesystem::path& path) {
  CsvContent content = read_csv(path);
  int max_x = 0, max_y = 0;
  for (const auto& row : content.rows) {
    max_x = std::max(max_x, std::stoi(row[0]));
    max_y = std::max(max_y, std::stoi(row[1]));
  }
  QTable table(max_x + 1, max_y);
  for (const auto& row : content.rows) {
    int x = std::stoi(row[0]), y = std::stoi(row[1]), a = std::stoi(row[2]);
    table.q[table.idx(x, y, a)] = std::stod(row[3]);
    table.visits[table.idx(x, y, a)] = std::stoll(row[4]);
  }
  return table;
}

KernelSampleEnv::KernelSampleEnv(const PlanningProblem& problem, int k)
    : problem_(problem), k_(k) {
  problem_.kernel->ensure_powers(k + 1);
  const int num = problem_.space->size();
  cdf_by_y_.reserve(static_cast<std::size_t>(k) + 1);
  for (int y = 0; y <= k; ++y) {
    Eigen::MatrixXd cdf = problem_.kernel->power(y);
    for (int i = 0; i < num; ++i)
      for (int j = 1; j < num; ++j) cdf(i, j) += cdf(i, j - 1);
    cdf_by_y_.push_back(std::move(cdf));
  }
  cdf_step_ = problem_.kernel->matrix();
  for (int i = 0; i < num; ++i)
    for (int j = 1; j < num; ++j) cdf_step_(i, j) += cdf_step_(i, j - 1);

  estimate_cache_.reserve(static_cast<std::size_t>(num) * (k + 1));
  for (int x = 0; x < num; ++x)
    for (int y = 0; y <= k; ++y) {
      Eigen::VectorXd row = problem_.kernel->power(y).row(x);
      estimate_cache_.push_back(problem_.estimator->estimate(row, x, y));
    }
}

namespace {

int sample_cdf_row(const Eigen::MatrixXd& cdf, int row, double u) {
  const int n = static_cast<int>(cdf.cols());
  int lo = 0, hi = n - 1;
  while (lo < hi) {
    int mid = (lo + hi) / 2;
    if (cdf(row, mid) > u)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

}  // namespace

SampleEnv::Sample KernelSampleEnv::sample(int x, int y, int a,
                                          SplitMix64& rng) {
  const Estimate& est =
      estimate_cache_[static_cast<std::size_t>(x) * (k_ + 1) + y];
  int m = sample_cdf_row(cdf_by_y_[static_cast<std::size_t>(y)], x,
                         rng.uniform());
  double cost = (*problem_.cost)(problem_.space->pmf(m), est.pmf, a);
  Sample s;
  s.cost = cost;
  if (a == 1 && rng.uniform() < problem_.credibility)
    s.obs = sample_cdf_row(cdf_step_, m, rng.uniform());
  return s;
}

void TraceReplayEnv::add(int x, int y, int a, double cost,
                         std::optional<int> obs) {
  samples_[{x, y, a}].push_back(Sample{cost, obs});
  ++total_;
}

SampleEnv::Sample TraceReplayEnv::sample(int x, int y, int a,
                                         SplitMix64& rng) {
  auto it = samples_.find({x, y, a});
  if (it == samples_.end() || it->second.empty())
    throw ConfigError("trace has no samples for the queried state-action");
  return it->second[static_cast<std::size_t>(
      rng.uniform_below(it->second.size()))];
}

void TrainResult::save_curve_csv(
    const std::filesystem::path& path,
    const std::map<std::string, std::string>& metadata) const {
  CsvWriter w(path, metadata, {"sweep", "probe_min_q"});
  for (const auto& [sweep, value] : curve)
    w.row({std::to_string(sweep), CsvWriter::num(value)});
}

namespace {

void record_probe(const TrainOptions& options, const QTable& table,
                  std::int64_t sweep,
                  std::vector<std::pair<std::int64_t, double>>& curve) {
  if (options.probe_x < 0 || options.probe_y < 0) return;
  if (sweep % options.curve_stride != 0 && sweep != options.sweeps) return;
  curve.emplace_back(sweep,
                     table.min_value(options.probe_x, options.probe_y));
}

}  // namespace

TrainResult train_synchronized(SampleEnv& env, const VirtualMdpConfig& cfg,
                               const TrainOptions& options) {
  if (cfg.num_x < 1) throw ConfigError("virtual MDP needs num_x >= 1");
  const int num_x = cfg.num_x;
  const int ky = cfg.k + 1;

  QTable table(num_x, cfg.k);
  QTable next = table;

  // One persistent stream per state-action pair: updates are independent of
  // sweep traversal order and of any parallel execution.
  std::vector<SplitMix64> streams;
  streams.reserve(static_cast<std::size_t>(num_x) * ky * 2);
  for (int x = 0; x < num_x; ++x)
    for (int y = 0; y < ky; ++y)
      for (int a = 0; a < 2; ++a)
        streams.emplace_back(derive_stream(
            options.seed, static_cast<std::uint64_t>(x),
            static_cast<std::uint64_t>(y), static_cast<std::uint64_t>(a)));

  TrainResult result;
  std::deque<double> drift_window;
  bool converged = false;
  std::int64_t sweep = 0;
  record_probe(options, table, 0, result.curve);
  while (sweep < options.sweeps && !converged) {
    ++sweep;
    double drift = 0.0;
    for (int x = 0; x < num_x; ++x)
      for (int y = 0; y < ky; ++y)
        for (int a = 0; a < 2; ++a) {
          std::size_t i = table.idx(x, y, a);
          SplitMix64& rng = streams[i];
          SampleEnv::Sample s = env.sample(x, y, a, rng);
          std::int64_t visits = ++next.visits[i];
          double alpha = learning_rate(visits, options.lr_exponent);
          auto next_state = virtual_step(x, y, s.obs, cfg);
          q_update(table, next, x, y, a, s.cost, next_state, alpha,
                   cfg.gamma);
          drift = std::max(drift, std::abs(next.q[i] - table.q[i]));
        }
    table.q = next.q;
    table.visits = next.visits;
    result.last_drift = drift;
    drift_window.push_back(drift);
    if (static_cast<int>(drift_window.size()) > options.drift_window)
      drift_window.pop_front();
    if (static_cast<int>(drift_window.size()) == options.drift_window) {
      double worst = 0.0;
      for (double d : drift_window) worst = std::max(worst, d);
      if (worst < options.drift_threshold) converged = true;
    }
    record_probe(options, table, sweep, result.curve);
  }
  result.sweeps_run = sweep;
  result.converged = converged;
  result.table = std::move(table);
  return result;
}

TrainResult train_expected(const PlanningProblem& problem,
                           const VirtualMdpConfig& cfg,
                           const TrainOptions& options) {
  const int num_x = problem.space->size();
  const int ky = cfg.k + 1;
  const double q = problem.credibility;
  problem.kernel->ensure_powers(cfg.k + 1);

  // Exact expected per-step costs once up front.
  std::vector<double> chat(static_cast<std::size_t>(num_x) * ky * 2);
  for (int x = 0; x < num_x; ++x)
    for (int y = 0; y < ky; ++y)
      for (int a = 0; a < 2; ++a)
        chat[(static_cast<std::size_t>(x) * ky + y) * 2 + a] =
            expected_step_cost(problem, x, y, a);

  QTable table(num_x, cfg.k);
  QTable next = table;
  TrainResult result;
  std::deque<double> drift_window;
  bool converged = false;
  std::int64_t sweep = 0;
  record_probe(options, table, 0, result.curve);
  while (sweep < options.sweeps && !converged) {
    ++sweep;
    double alpha = learning_rate(sweep, options.lr_exponent);
    double drift = 0.0;
    Eigen::VectorXd v0(num_x);
    for (int x = 0; x < num_x; ++x) v0[x] = table.min_value(x, 0);
    for (int y = 0; y < ky; ++y) {
      Eigen::VectorXd reset = problem.kernel->power(y + 1) * v0;
      for (int x = 0; x < num_x; ++x) {
        auto blank_next = virtual_step(x, y, std::nullopt, cfg);
        double cont_blank =
            table.min_value(blank_next.first, blank_next.second);
        for (int a = 0; a < 2; ++a) {
          std::size_t i = table.idx(x, y, a);
          double expected_next =
              a == 0 ? cont_blank
                     : (1.0 - q) * cont_blank + q * reset[x];
          double target =
              chat[(static_cast<std::size_t>(x) * ky + y) * 2 + a] +
              cfg.gamma * expected_next;
          next.q[i] = (1.0 - alpha) * table.q[i] + alpha * target;
          ++next.visits[i];
          drift = std::max(drift, std::abs(next.q[i] - table.q[i]));
        }
      }
    }
    table.q = next.q;
    table.visits = next.visits;
    result.last_drift = drift;
    drift_window.push_back(drift);
    if (static_cast<int>(drift_window.size()) > options.drift_window)
      drift_window.pop_front();
    if (static_cast<int>(drift_window.size()) == options.drift_window) {
      double worst = 0.0;
      for (double d : drift_window) worst = std::max(worst, d);
      if (worst < options.drift_threshold) converged = true;
    }
    record_probe(options, table, sweep, result.curve);
  }
  result.sweeps_run = sweep;
  result.converged = converged;
  result.table = std::move(table);
  return result;
}

TraceReplayEnv replay_env_from_rows(const std::vector<TraceRowView>& rows) {
  TraceReplayEnv env;
  for (const auto& row : rows) {
    std::optional<int> obs;
    if (!row.next_blank) obs = row.next_x_atom;
    env.add(row.x_atom, row.y, row.action, row.cost, obs);
  }
  return env;
}

ModelEstimate estimate_decoupled_model(const Eigen::MatrixXi& transition_counts,
                                       std::int64_t credible_deliveries,
                                       std::int64_t collect_attempts) {
  ModelEstimate est;
  est.local = Eigen::MatrixXd::Zero(transition_counts.rows(),
                                    transition_counts.cols());
  est.transition_samples = transition_counts.sum();
  est.collect_attempts = collect_attempts;
  for (int s = 0; s < transition_counts.rows(); ++s) {
    double row_total = transition_counts.row(s).sum();
    if (row_total == 0.0) {
      // Unvisited state: fall back to staying put.
      est.local(s, s) = 1.0;
      continue;
    }
    for (int ss = 0; ss < transition_counts.cols(); ++ss)
      est.local(s, ss) = transition_counts(s, ss) / row_total;
  }
  est.credibility =
      collect_attempts > 0
          ? static_cast<double>(credible_deliveries) / collect_attempts
          : 1.0;
  return est;
}

}  // namespace netsched
