#include "netsched/simulation.hpp"

#include <cmath>
#include <future>
#include <thread>

#include "netsched/csv.hpp"
#include "netsched/errors.hpp"

namespace netsched {
namespace {

int sample_row(const Eigen::MatrixXd& matrix, int row, double u) {
  double acc = 0.0;
  int last = static_cast<int>(matrix.cols()) - 1;
  for (int j = 0; j < matrix.cols(); ++j) {
    acc += matrix(row, j);
    if (u < acc) return j;
  }
  return last;
}

}  // namespace

ChainWorld::ChainWorld(const ChainModel& model, const EmpiricalDistribution& m1,
                       std::uint64_t seed)
    : model_(model),
      m_(m1),
      noise_rng_(derive_stream(seed, 0x6e6f6973)),
      channel_rng_(derive_stream(seed, 0x6368616e)) {
  const auto& space = *model_.space;
  if (m1.n != space.population()) throw ConfigError("population mismatch");
  nodes_.reserve(static_cast<std::size_t>(m1.n));
  for (int s = 0; s < space.states().size(); ++s)
    for (int c = 0; c < m1.counts[static_cast<std::size_t>(s)]; ++c)
      nodes_.push_back(s);
  counts_ = Eigen::MatrixXi::Zero(space.states().size(),
                                  space.states().size());
  refresh_atom();
  x_atom_ = m_atom_;  // o_1 = m_1
  y_ = 0;
}

ChainWorld::ChainWorld(const ChainModel& model, const EmpiricalDistribution& m1,
                       std::uint64_t seed, PathwiseDynamics dynamics)
    : ChainWorld(model, m1, seed) {
  dynamics_ = std::move(dynamics);
}

void ChainWorld::refresh_atom() {
  std::vector<int> counts(static_cast<std::size_t>(model_.space->states().size()),
                          0);
  for (int s : nodes_) ++counts[static_cast<std::size_t>(s)];
  m_.counts = counts;
  m_.n = static_cast<int>(nodes_.size());
  m_atom_ = model_.space->index_of_counts(m_.counts);
}

void ChainWorld::step(int action) {
  const auto& space = *model_.space;
  const int num_states = space.states().size();

  // Advance every node with fresh noise, conditioned on the current data.
  if (dynamics_) {
    std::vector<double> noises =
        dynamics_->joint_noise(static_cast<int>(nodes_.size()), noise_rng_);
    if (noises.size() != nodes_.size())
      throw ConfigError("joint noise generator returned wrong count");
    Eigen::VectorXd pmf = m_.pmf();
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      double target =
          dynamics_->f(space.states().label(nodes_[i]), pmf, noises[i]);
      if (!space.states().contains(target))
        throw ConfigError("dynamics leaves state space");
      int next = space.states().index_of(target);
      ++counts_(nodes_[i], next);
      nodes_[i] = next;
    }
  } else {
    const Eigen::MatrixXd& rows = model_.local->at(m_atom_);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      int next = sample_row(rows, nodes_[i], noise_rng_.uniform());
      ++counts_(nodes_[i], next);
      nodes_[i] = next;
    }
  }
  refresh_atom();
  ++t_;

  // Credibility channel; a failed collection is indistinguishable from no
  // collection at the observation level.
  bool credible = false;
  if (action == 1) {
    ++collect_attempts_;
    credible = channel_rng_.uniform() < model_.credibility;
    if (credible) ++credible_deliveries_;
  }

  if (credible) {
    if (model_.delay == 0) {
      x_atom_ = m_atom_;
      y_ = 0;
      last_blank_ = false;
      return;
    }
    pending_.emplace_back(t_ + model_.delay, m_atom_);
  }
  if (!pending_.empty() && pending_.front().first <= t_) {
    x_atom_ = pending_.front().second;
    y_ = model_.delay;  // data generated delay steps ago
    pending_.pop_front();
    last_blank_ = false;
    return;
  }
  last_blank_ = true;
  ++y_;
}

Eigen::VectorXd estimate_kernel_row_mc(const ChainModel& model,
                                       const EmpiricalDistribution& m,
                                       std::int64_t samples,
                                       std::uint64_t seed) {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(model.space->size());
  for (std::int64_t i = 0; i < samples; ++i) {
    ChainWorld world(model, m, derive_stream(seed, static_cast<std::uint64_t>(i)));
    world.step(0);
    row[world.data_atom()] += 1.0;
  }
  return row / static_cast<double>(samples);
}

Eigen::VectorXd estimate_kernel_row_mc(const ChainModel& model,
                                       const PathwiseDynamics& dynamics,
                                       const EmpiricalDistribution& m,
                                       std::int64_t samples,
                                       std::uint64_t seed) {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(model.space->size());
  for (std::int64_t i = 0; i < samples; ++i) {
    ChainWorld world(model, m,
                     derive_stream(seed, static_cast<std::uint64_t>(i)),
                     dynamics);
    world.step(0);
    row[world.data_atom()] += 1.0;
  }
  return row / static_cast<double>(samples);
}

namespace {

struct RunningStats {
  double mean = 0.0, m2 = 0.0;
  std::int64_t count = 0;
  void add(double x) {
    ++count;
    double d = x - mean;
    mean += d / count;
    m2 += d * (x - mean);
  }
  double variance() const { return count > 1 ? m2 / (count - 1) : 0.0; }
};

}  // namespace

EvaluationReport evaluate_strategy_chain(
    const ChainModel& model, const TransitionKernel& kernel,
    const CostModel& cost, const Estimator& estimator,
    const StrategyFn& strategy, int initial_atom,
    const EvaluationOptions& options) {
  const auto& space = *model.space;
  double cmax = cost.c_max();
  double tail_tol = options.tail_tolerance > 0.0
                        ? options.tail_tolerance
                        : 1e-6 * cmax / (1.0 - options.gamma);
  int horizon = options.horizon;
  if (horizon <= 0) {
    double need = tail_tol * (1.0 - options.gamma) / std::max(cmax, 1e-300);
    horizon = need >= 1.0 ? 1
                          : static_cast<int>(std::ceil(std::log(need) /
                                                       std::log(options.gamma)));
  }
  kernel.ensure_powers(horizon);

  // Estimates per (x, y) are deterministic; cache lazily per path batch.
  std::vector<Estimate> cache(
      static_cast<std::size_t>(space.size()) * (horizon + 1));
  std::vector<char> cached(cache.size(), 0);
  std::mutex cache_mutex;
  auto estimate_at = [&](int x, int y) -> Estimate {
    std::size_t i = static_cast<std::size_t>(x) * (horizon + 1) + y;
    {
      std::lock_guard<std::mutex> lock(cache_mutex);
      if (cached[i]) return cache[i];
    }
    Eigen::VectorXd row = kernel.power(y).row(x);
    Estimate e = estimator.estimate(row, x, y);
    std::lock_guard<std::mutex> lock(cache_mutex);
    cache[i] = e;
    cached[i] = 1;
    return e;
  };

  auto run_path = [&](std::int64_t path) {
    ChainWorld world(model, space.at(initial_atom),
                     derive_stream(options.seed, static_cast<std::uint64_t>(path)));
    double discounted = 0.0;
    double discount = 1.0;
    for (int t = 1; t <= horizon; ++t) {
      int x = world.x_atom();
      int y = std::min(world.y(), horizon);
      Estimate est = estimate_at(x, y);
      int a = strategy(x, y);
      discounted +=
          discount * cost(space.pmf(world.data_atom()), est.pmf, a);
      discount *= options.gamma;
      world.step(a);
    }
    return discounted;
  };

  int threads = options.threads > 0
                    ? options.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, 16));
  RunningStats stats;
  if (threads == 1 || options.paths < 64) {
    for (std::int64_t p = 0; p < options.paths; ++p) stats.add(run_path(p));
  } else {
    std::vector<std::future<std::vector<double>>> futures;
    std::int64_t chunk = (options.paths + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      std::int64_t lo = w * chunk;
      std::int64_t hi = std::min<std::int64_t>(options.paths, lo + chunk);
      if (lo >= hi) break;
      futures.push_back(std::async(std::launch::async, [&, lo, hi] {
        std::vector<double> values;
        values.reserve(static_cast<std::size_t>(hi - lo));
        for (std::int64_t p = lo; p < hi; ++p) values.push_back(run_path(p));
        return values;
      }));
    }
    for (auto& f : futures)
      for (double v : f.get()) stats.add(v);
  }

  EvaluationReport report;
  report.mean = stats.mean;
  report.std_error =
      stats.count > 1 ? std::sqrt(stats.variance() / stats.count) : 0.0;
  report.tail_bound =
      std::pow(options.gamma, horizon) * cmax / (1.0 - options.gamma);
  report.paths = stats.count;
  report.horizon = horizon;
  return report;
}

LinearWorld::LinearWorld(const LinearWorldModel& model,
                         const Eigen::VectorXd& m1, std::uint64_t seed)
    : model_(model),
      m_(m1),
      x_(m1),
      wbar_(Eigen::VectorXd::Zero(model.state_dim())),
      noise_rng_(derive_stream(seed, 0x6c696e)),
      channel_rng_(derive_stream(seed, 0x6c6368)) {
  if (m1.size() != model.state_dim()) throw ConfigError("dimension mismatch");
  if (model.weights.cols() != model.state_dim())
    throw ConfigError("weights must have one column per mode");
}

void LinearWorld::step(int action) {
  const int n = model_.nodes();
  const double sd = std::sqrt(model_.node_variance);
  wbar_.setZero();
  for (int i = 0; i < n; ++i) {
    double w;
    switch (model_.kind) {
      case NoiseKind::kGaussian:
        w = sd * noise_rng_.normal();
        break;
      case NoiseKind::kUniform:
        // Zero-mean uniform with the requested variance.
        w = sd * std::sqrt(3.0) * (2.0 * noise_rng_.uniform() - 1.0);
        break;
      case NoiseKind::kExponentialCentered:
        w = sd * (-std::log(noise_rng_.uniform_pos()) - 1.0);
        break;
      default:
        throw ConfigError("unknown noise kind");
    }
    wbar_ += model_.weights.row(i).transpose() * w;
  }
  wbar_ /= static_cast<double>(n);
  m_ = model_.A * m_ + wbar_;

  bool credible =
      action == 1 && channel_rng_.uniform() < model_.credibility;
  if (credible) {
    x_ = m_;
    y_ = 0;
  } else {
    ++y_;
  }
}

void save_trace_csv(const std::filesystem::path& path,
                    const std::vector<TraceRow>& rows,
                    const std::map<std::string, std::string>& metadata) {
  CsvWriter w(path, metadata,
              {"t", "m_counts", "a", "o_blank", "x_index", "y", "cost"});
  for (const auto& r : rows) {
    std::string counts;
    for (std::size_t i = 0; i < r.counts.size(); ++i) {
      if (i) counts += ' ';
      counts += std::to_string(r.counts[i]);
    }
    w.row({std::to_string(r.t), counts, std::to_string(r.action),
           std::to_string(r.blank ? 1 : 0), std::to_string(r.x_atom),
           std::to_string(r.y), CsvWriter::num(r.cost)});
  }
}

std::vector<TraceRow> load_trace_csv(const std::filesystem::path& path) {
  CsvContent content = read_csv(path);
  std::vector<TraceRow> rows;
  rows.reserve(content.rows.size());
  for (const auto& cells : content.rows) {
    if (cells.size() != 7) throw ConfigError("trace row must have 7 columns");
    TraceRow r;
    r.t = std::stoi(cells[0]);
    std::stringstream ss(cells[1]);
    int c;
    while (ss >> c) r.counts.push_back(c);
    r.action = std::stoi(cells[2]);
    r.blank = std::stoi(cells[3]) != 0;
    r.x_atom = std::stoi(cells[4]);
    r.y = std::stoi(cells[5]);
    r.cost = std::stod(cells[6]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<TraceRow> record_chain_trace(const ChainModel& model,
                                         const TransitionKernel& kernel,
                                         const CostModel& cost,
                                         const Estimator& estimator,
                                         const StrategyFn& strategy,
                                         int initial_atom, int steps,
                                         std::uint64_t seed) {
  const auto& space = *model.space;
  kernel.ensure_powers(steps);
  ChainWorld world(model, space.at(initial_atom), seed);
  std::vector<TraceRow> rows;
  rows.reserve(static_cast<std::size_t>(steps));
  for (int t = 1; t <= steps; ++t) {
    TraceRow r;
    r.t = t;
    r.counts = world.data().counts;
    r.x_atom = world.x_atom();
    r.y = world.y();
    Eigen::VectorXd row = kernel.power(std::min(r.y, steps)).row(r.x_atom);
    Estimate est = estimator.estimate(row, r.x_atom, r.y);
    r.action = strategy(r.x_atom, r.y);
    r.cost = cost(space.pmf(world.data_atom()), est.pmf, r.action);
    world.step(r.action);
    r.blank = world.last_observation_blank();
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace netsched
