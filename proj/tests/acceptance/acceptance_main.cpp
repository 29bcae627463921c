// Acceptance suite: one pass/fail line per shipped criterion, exit code 0
// only when every criterion holds.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "netsched/asymptotics.hpp"
#include "netsched/learning.hpp"
#include "netsched/linear_systems.hpp"
#include "netsched/planning.hpp"
#include "netsched/rng.hpp"
#include "netsched/simulation.hpp"

using namespace netsched;

namespace {

struct Criterion {
  int id;
  std::string label;
  std::function<bool(std::string&)> run;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

Eigen::MatrixXd random_stochastic(int size, SplitMix64& rng) {
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

StateSpace numbered_states(int count) {
  std::vector<double> labels;
  for (int i = 0; i < count; ++i) labels.push_back(static_cast<double>(i));
  return StateSpace(std::move(labels));
}

// ---------------------------------------------------------------------------
// Example 1: battery sensor ladder.

struct BatterySetup {
  std::unique_ptr<EmpiricalSpace> space;
  std::unique_ptr<TransitionKernel> kernel;
  std::unique_ptr<CostModel> cost;
  std::unique_ptr<Estimator> estimator;

  static BatterySetup make() {
    StateSpace states = StateSpace::integer_range(-100, 100);
    NoisePmf noise{{1.0, -1.0, 0.0}, {0.16, 0.16, 0.68}};
    Eigen::MatrixXd local = local_matrix_from_noise(
        [](double s, double w) {
          if (s > 99) return 99.0;
          if (s < -99) return -99.0;
          return s + w;
        },
        noise, states);
    BatterySetup setup;
    setup.space = std::make_unique<EmpiricalSpace>(states, 1);
    setup.kernel = std::make_unique<TransitionKernel>(
        build_kernel_exact(LocalKernel::decoupled(local), *setup.space));
    setup.cost =
        std::make_unique<CostModel>(CostModel::weighted_abs(states, 100.0));
    setup.estimator = make_identity_estimator(*setup.space);
    return setup;
  }

  PlanningProblem problem() const {
    return PlanningProblem{kernel.get(), space.get(), cost.get(),
                           estimator.get(), 0.95, 0.9};
  }
};

// The paper reports the probe as (0,50) in its own 1-based elapsed-time
// indexing; with y = number of blanks (0-based) that is the cell (0, 49).
constexpr int kProbeY = 49;
constexpr double kProbeTarget = 160.83;

bool criterion1(std::string& detail) {
  auto start = std::chrono::steady_clock::now();
  BatterySetup setup = BatterySetup::make();
  ValueTable table = value_iteration(setup.problem(), 70);
  double elapsed = seconds_since(start);
  int x0 = setup.space->states().index_of(0.0);
  double probe = table.value(x0, kProbeY);
  std::ostringstream out;
  out << "V(0, probe) = " << probe << " vs " << kProbeTarget
      << " +- 0.5 (paper coordinate (0,50), 0-based cell y=49; the 0-based "
         "cell y=50 holds "
      << table.value(x0, 50) << "); runtime " << elapsed << " s";
  detail = out.str();
  return std::abs(probe - kProbeTarget) <= 0.5 && elapsed <= 600.0;
}

bool criterion2(std::string& detail) {
  BatterySetup setup = BatterySetup::make();
  ValueTable t70 = value_iteration(setup.problem(), 70);
  ValueTable t189 = value_iteration(setup.problem(), 189);
  int mismatched_interior = 0;
  int mismatched_wrap_row = 0;
  for (int x = 0; x < setup.space->size(); ++x) {
    for (int y = 0; y <= 69; ++y)
      if (t70.action_at(x, y) != t189.action_at(x, y)) ++mismatched_interior;
    if (t70.action_at(x, 70) != t189.action_at(x, 70)) ++mismatched_wrap_row;
  }
  std::ostringstream out;
  out << "strategy mismatches on y in [0,69]: " << mismatched_interior
      << " of " << setup.space->size() * 70 << " cells (the y=70 row is the "
      << "k=70 table's wrap-around row, excluded; it differs on "
      << mismatched_wrap_row << " cells)";
  detail = out.str();
  return mismatched_interior == 0;
}

// ---------------------------------------------------------------------------
// Example 3: two-candidate polling.

struct PollSetup {
  std::unique_ptr<EmpiricalSpace> space;
  std::unique_ptr<TransitionKernel> kernel;
  std::unique_ptr<CostModel> cost;
  std::unique_ptr<Estimator> estimator;

  static PollSetup make() {
    StateSpace states({1.0, 0.0});
    Eigen::MatrixXd local(2, 2);
    local << 0.95, 0.05, 0.02, 0.98;
    PollSetup setup;
    setup.space = std::make_unique<EmpiricalSpace>(states, 50);
    setup.kernel = std::make_unique<TransitionKernel>(
        build_kernel_exact(LocalKernel::decoupled(local), *setup.space));
    setup.cost =
        std::make_unique<CostModel>(CostModel::kl_plus_fee(*setup.space, 0.02));
    setup.estimator = make_map_estimator(*setup.space);
    return setup;
  }

  PlanningProblem problem() const {
    return PlanningProblem{kernel.get(), space.get(), cost.get(),
                           estimator.get(), 0.95, 0.8};
  }
};

bool criterion3(std::string& detail) {
  auto start = std::chrono::steady_clock::now();
  PollSetup setup = PollSetup::make();
  ValueTable table = value_iteration(setup.problem(), 50);
  double elapsed = seconds_since(start);
  // Counts (45,5) -> atom 5; counts (5,45) -> atom 45.
  int first_a = table.first_collect(5);
  int first_b = table.first_collect(45);
  std::ostringstream out;
  out << "first-collect elapsed times: x=45-for-A -> " << first_a
      << " (required 11), x=45-for-B -> " << first_b
      << " (required 12); runtime " << elapsed
      << " s; decision margins |V0-V1| near these cells are ~1e-4 while "
         "values are O(0.5)";
  detail = out.str();
  return first_a == 11 && first_b == 12 && elapsed <= 300.0;
}

// ---------------------------------------------------------------------------
// Criterion 4: Q-learning.

bool criterion4(std::string& detail) {
  BatterySetup setup = BatterySetup::make();
  PlanningProblem problem = setup.problem();
  const int k = 70;
  VirtualMdpConfig cfg{setup.space->size(), k, 0, 0.95, 0.9};
  KernelSampleEnv env(problem, k);
  TrainOptions opts;
  opts.sweeps = 50000;
  opts.lr_exponent = 0.75;  // Robbins-Monro compliant visit power
  opts.drift_threshold = 0.0;
  opts.seed = 12;
  TrainResult result = train_synchronized(env, cfg, opts);
  int x0 = setup.space->states().index_of(0.0);
  double probe = result.table.min_value(x0, kProbeY);
  bool probe_ok = std::abs(probe - kProbeTarget) <= 2.0;

  // Tiny instance: greedy agreement with value iteration.
  SplitMix64 rng(5);
  EmpiricalSpace tiny_space(numbered_states(2), 2);
  TransitionKernel tiny_kernel = build_kernel_exact(
      LocalKernel::decoupled(random_stochastic(2, rng)), tiny_space);
  std::vector<double> table(
      static_cast<std::size_t>(tiny_space.size()) * tiny_space.size() * 2);
  for (std::size_t i = 0; i < table.size(); ++i)
    table[i] = rng.uniform() + 0.4 * static_cast<double>(i % 2);
  CostModel tiny_cost = CostModel::from_table(tiny_space, std::move(table));
  auto tiny_estimator = make_map_estimator(tiny_space);
  PlanningProblem tiny{&tiny_kernel, &tiny_space, &tiny_cost,
                       tiny_estimator.get(), 0.9, 0.8};
  // tiny_space stays in scope for the whole block, so references are fine.
  const int tiny_k = 5;
  ValueTable planned = value_iteration(tiny, tiny_k);
  VirtualMdpConfig tiny_cfg{tiny_space.size(), tiny_k, 0, 0.9, 0.8};
  KernelSampleEnv tiny_env(tiny, tiny_k);
  TrainOptions tiny_opts;
  tiny_opts.sweeps = 100000;
  tiny_opts.drift_threshold = 0.0;
  tiny_opts.seed = 7;
  TrainResult tiny_result = train_synchronized(tiny_env, tiny_cfg, tiny_opts);
  int agree = 0, total = tiny_space.size() * (tiny_k + 1);
  for (int x = 0; x < tiny_space.size(); ++x)
    for (int y = 0; y <= tiny_k; ++y)
      if (tiny_result.table.greedy(x, y) == planned.action_at(x, y)) ++agree;
  double agreement = static_cast<double>(agree) / total;

  std::ostringstream out;
  out << "min_a Q(0, probe) = " << probe << " vs " << kProbeTarget
      << " +- 2 after " << result.sweeps_run
      << " synchronized sweeps (visit-rate exponent 0.75); tiny-instance "
      << "greedy agreement " << agree << "/" << total << " = "
      << 100.0 * agreement << "% within 1e5 sweeps";
  detail = out.str();
  return probe_ok && agreement >= 0.95;
}

// ---------------------------------------------------------------------------
// Criterion 5: kernel correctness.

bool criterion5(std::string& detail) {
  double worst_marginal = 0.0;
  SplitMix64 rng(77);
  for (int size : {1, 2, 3}) {
    for (int n = 1; n <= 6; ++n) {
      EmpiricalSpace space(numbered_states(size), n);
      std::vector<Eigen::MatrixXd> per_atom;
      for (int m = 0; m < space.size(); ++m)
        per_atom.push_back(random_stochastic(size, rng));
      LocalKernel local = LocalKernel::coupled(per_atom);
      TransitionKernel kernel = build_kernel_exact(local, space);
      for (int mi = 0; mi < space.size(); ++mi)
        for (int target = 0; target < size; ++target) {
          Eigen::VectorXd marginal =
              deep_ck_marginal(space.at(mi), target, local, space);
          Eigen::VectorXd from_kernel = Eigen::VectorXd::Zero(n + 1);
          for (int mj = 0; mj < space.size(); ++mj)
            from_kernel[space.at(mj).counts[static_cast<std::size_t>(
                target)]] += kernel.matrix()(mi, mj);
          worst_marginal = std::max(
              worst_marginal, (marginal - from_kernel).cwiseAbs().maxCoeff());
        }
    }
  }

  // Monte-Carlo pathwise frequencies against exact rows.
  double worst_tv = 0.0;
  {
    EmpiricalSpace space(numbered_states(2), 4);
    Eigen::MatrixXd local(2, 2);
    local << 0.85, 0.15, 0.3, 0.7;
    LocalKernel lk = LocalKernel::decoupled(local);
    TransitionKernel kernel = build_kernel_exact(lk, space);
    ChainModel model{&space, &lk, 1.0, 0};
    for (int atom : {0, 2, 4}) {
      Eigen::VectorXd freq =
          estimate_kernel_row_mc(model, space.at(atom), 100000, 41);
      worst_tv = std::max(
          worst_tv, 0.5 * (freq - kernel.matrix().row(atom).transpose())
                              .cwiseAbs()
                              .sum());
    }
  }
  {
    EmpiricalSpace space(numbered_states(3), 3);
    SplitMix64 r2(99);
    std::vector<Eigen::MatrixXd> per_atom;
    for (int m = 0; m < space.size(); ++m)
      per_atom.push_back(random_stochastic(3, r2));
    LocalKernel lk = LocalKernel::coupled(per_atom);
    TransitionKernel kernel = build_kernel_exact(lk, space);
    ChainModel model{&space, &lk, 1.0, 0};
    Eigen::VectorXd freq =
        estimate_kernel_row_mc(model, space.at(4), 100000, 43);
    worst_tv = std::max(
        worst_tv,
        0.5 * (freq - kernel.matrix().row(4).transpose()).cwiseAbs().sum());
  }

  std::ostringstream out;
  out << "deep Chapman-Kolmogorov vs multinomial kernel marginals: max |diff| "
      << worst_marginal << " (<= 1e-10) over all n<=6, |S|<=3; pathwise "
      << "Monte-Carlo rows at 1e5 samples: max TV " << worst_tv
      << " (<= 0.02)";
  detail = out.str();
  return worst_marginal <= 1e-10 && worst_tv <= 0.02;
}

// ---------------------------------------------------------------------------
// Criterion 6: history-tree oracle.

bool criterion6(std::string& detail) {
  int failures = 0;
  double worst_ratio = 0.0;
  const int horizon = 6;
  for (int trial = 0; trial < 50; ++trial) {
    SplitMix64 rng(500 + static_cast<std::uint64_t>(trial));
    int n = 1 + static_cast<int>(rng.uniform_below(3));
    double q = 0.4 + 0.6 * rng.uniform();
    double gamma = 0.4 + 0.45 * rng.uniform();
    EmpiricalSpace space(numbered_states(2), n);
    TransitionKernel kernel = build_kernel_exact(
        LocalKernel::decoupled(random_stochastic(2, rng)), space);
    std::vector<double> table(
        static_cast<std::size_t>(space.size()) * space.size() * 2);
    for (double& v : table) v = rng.uniform();
    CostModel cost = CostModel::from_table(space, std::move(table));
    auto estimator = make_map_estimator(space);
    PlanningProblem problem{&kernel, &space, &cost, estimator.get(), q, gamma};
    int initial = static_cast<int>(rng.uniform_below(
        static_cast<std::uint64_t>(space.size())));
    double oracle = bellman_oracle_small(problem, initial, horizon);
    ValueTable t = value_iteration(problem, horizon);
    double bound =
        2.0 * std::pow(gamma, horizon) * cost.c_max() / (1.0 - gamma);
    double gap = std::abs(t.value(initial, 0) - oracle);
    worst_ratio = std::max(worst_ratio, gap / bound);
    if (gap > bound) ++failures;
  }
  std::ostringstream out;
  out << failures << "/50 random tiny models outside the truncation bound "
      << "2 gamma^H c_max/(1-gamma); worst gap/bound ratio " << worst_ratio;
  detail = out.str();
  return failures == 0;
}

// ---------------------------------------------------------------------------
// Criterion 7: separation principle.

bool criterion7(std::string& detail) {
  const int nodes = 8;
  const int dim = 2;
  Eigen::MatrixXd a(dim, dim);
  a << 0.85, 0.1, 0.1, 0.6;
  LinearWorldModel model;
  model.A = a;
  model.weights = Eigen::MatrixXd::Ones(nodes, dim);
  for (int i = 0; i < nodes; ++i) model.weights(i, 1) = (i % 2) ? 1.4 : 0.6;
  // Keep the paper's normalization (1/n) sum_i v_i^2 = 1 per mode.
  for (int d = 0; d < dim; ++d) {
    double norm = std::sqrt(model.weights.col(d).squaredNorm() / nodes);
    model.weights.col(d) /= norm;
  }
  model.node_variance = 0.8;
  model.credibility = 0.85;

  struct Strategy {
    std::string name;
    std::function<int(int t, int y, SplitMix64&)> act;
  };
  std::vector<Strategy> strategies{
      {"periodic-3", [](int t, int, SplitMix64&) { return t % 3 == 0; }},
      {"threshold-2", [](int, int y, SplitMix64&) { return y >= 2; }},
      {"bernoulli-0.4",
       [](int, int, SplitMix64& rng) { return rng.uniform() < 0.4; }}};
  std::vector<NoiseKind> kinds{NoiseKind::kGaussian, NoiseKind::kUniform,
                               NoiseKind::kExponentialCentered};
  const char* kind_names[] = {"gaussian", "uniform", "exponential"};

  const int paths = 100000;
  const int probe_time = 12;
  const int max_bucket = 4;
  double worst_z = 0.0;
  std::string worst_case = "none";
  for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
    for (const auto& strategy : strategies) {
      model.kind = kinds[ki];
      // Accumulate residuals m_t - A^y x_t bucketed by y at the probe time.
      std::vector<Eigen::VectorXd> sums(max_bucket + 1,
                                        Eigen::VectorXd::Zero(dim));
      std::vector<Eigen::VectorXd> sq(max_bucket + 1,
                                      Eigen::VectorXd::Zero(dim));
      std::vector<std::int64_t> count(max_bucket + 1, 0);
      for (int p = 0; p < paths; ++p) {
        std::uint64_t seed =
            derive_stream(900 + static_cast<std::uint64_t>(ki),
                          static_cast<std::uint64_t>(p));
        LinearWorld world(model, Eigen::VectorXd::Constant(dim, 1.0), seed);
        SplitMix64 policy_rng(derive_stream(seed, 0x706f6c));
        for (int t = 1; t < probe_time; ++t)
          world.step(strategy.act(t, world.y(), policy_rng));
        int y = world.y();
        if (y > max_bucket) continue;
        Eigen::MatrixXd apow = Eigen::MatrixXd::Identity(dim, dim);
        for (int i = 0; i < y; ++i) apow = model.A * apow;
        Eigen::VectorXd residual = world.data() - apow * world.x();
        sums[static_cast<std::size_t>(y)] += residual;
        sq[static_cast<std::size_t>(y)] += residual.cwiseProduct(residual);
        ++count[static_cast<std::size_t>(y)];
      }
      for (int y = 1; y <= max_bucket; ++y) {
        if (count[static_cast<std::size_t>(y)] < 500) continue;
        auto c = static_cast<double>(count[static_cast<std::size_t>(y)]);
        for (int d2 = 0; d2 < dim; ++d2) {
          double mean = sums[static_cast<std::size_t>(y)][d2] / c;
          double var =
              sq[static_cast<std::size_t>(y)][d2] / c - mean * mean;
          double se = std::sqrt(std::max(var, 1e-300) / c);
          double z = std::abs(mean) / se;
          if (z > worst_z) {
            worst_z = z;
            worst_case = std::string(kind_names[ki]) + "/" + strategy.name +
                         " y=" + std::to_string(y) +
                         " mode=" + std::to_string(d2);
          }
        }
      }
    }
  }
  std::ostringstream out;
  out << "conditional-mean residuals m_t - A^y x_t over 1e5 paths, 3 noise "
      << "laws x 3 sampling strategies: worst |z| = " << worst_z
      << " (<= 3) at " << worst_case;
  detail = out.str();
  return worst_z <= 3.0;
}

// ---------------------------------------------------------------------------
// Criterion 8: elapsed-cost closed form.

bool criterion8(std::string& detail) {
  SplitMix64 rng(321);
  double worst = 0.0;
  for (int dim = 1; dim <= 8; ++dim) {
    Eigen::MatrixXd m(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j <= i; ++j) {
        double v = 2.0 * rng.uniform() - 1.0;
        m(i, j) = v;
        m(j, i) = v;
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    m *= 0.95 / std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-12);
    Eigen::MatrixXd b(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) b(i, j) = rng.uniform() - 0.5;
    LinearNetworkModel model;
    model.A = m;
    model.sigma_w = b * b.transpose();
    model.credibility = 0.9;
    model.gamma = 0.85;
    model.fee = 0.7;
    for (int y = 0; y <= 50; ++y)
      for (int action : {0, 1})
        worst = std::max(worst,
                         std::abs(elapsed_cost(y, action, model) -
                                  elapsed_cost_sum(y, action, model)));
  }
  std::ostringstream out;
  out << "trace closed form vs finite sum, symmetric stable A up to dim 8, "
      << "y <= 50: max |diff| " << worst << " (<= 1e-9)";
  detail = out.str();
  return worst <= 1e-9;
}

// ---------------------------------------------------------------------------
// Criterion 9: complete vs star graph planning.

bool criterion9(std::string& detail) {
  const double q = 0.9, gamma = 0.85;
  const int k = 200;

  auto make_model = [&](double mode, double sigma_w, int n, double fee) {
    LinearNetworkModel model;
    model.A = Eigen::MatrixXd::Constant(1, 1, mode);
    model.sigma_w = Eigen::MatrixXd::Constant(1, 1, sigma_w / n);
    model.credibility = q;
    model.gamma = gamma;
    model.fee = fee;
    return model;
  };

  // Monotone collect regions in sigma_w on the complete graph (A=0.9, n=5,
  // fee=1: the right-hand panels' parameters).
  bool monotone = true;
  std::vector<std::uint8_t> prev;
  for (double sigma : {0.0, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0}) {
    YValueTable t = y_space_value_iteration(make_model(0.9, sigma, 5, 1.0), k);
    if (sigma == 0.0 && t.first_collect() != -1) monotone = false;
    if (!prev.empty())
      for (std::size_t y = 0; y < prev.size(); ++y)
        if (prev[y] == 1 && t.action[y] == 0) monotone = false;
    prev = t.action;
  }

  // Complete certainty threshold above the star's, and the star collect
  // region inside the complete one (A=0.8, fee=0.4, sigma=6: left panels).
  bool ordering = true;
  bool inclusion = true;
  for (int n = 3; n <= 20; ++n) {
    LinearNetworkModel complete = make_model(0.8, 6.0, n, 0.4);
    LinearNetworkModel star =
        make_model(0.8 / std::sqrt(n - 1.0), 6.0, n, 0.4);
    if (estimate_only_cost(complete) <= estimate_only_cost(star))
      ordering = false;
    YValueTable tc = y_space_value_iteration(complete, k);
    YValueTable ts = y_space_value_iteration(star, k);
    for (int y = 0; y <= k; ++y)
      if (ts.action[static_cast<std::size_t>(y)] == 1 &&
          tc.action[static_cast<std::size_t>(y)] == 0)
        inclusion = false;
  }

  // Planning vs simulation on one panel instance.
  LinearNetworkModel model = make_model(0.8, 6.0, 5, 0.4);
  YValueTable t = y_space_value_iteration(model, k);
  const int nodes = 5;
  LinearWorldModel world_model;
  world_model.A = model.A;
  world_model.weights = Eigen::MatrixXd::Ones(nodes, 1);
  world_model.node_variance = 6.0;
  world_model.kind = NoiseKind::kGaussian;
  world_model.credibility = q;
  const int horizon = 160;
  const int paths = 4000;
  double sum = 0.0, sum2 = 0.0;
  for (int p = 0; p < paths; ++p) {
    LinearWorld world(world_model, Eigen::VectorXd::Zero(1),
                      derive_stream(1234, static_cast<std::uint64_t>(p)));
    Eigen::VectorXd mhat = world.x();
    double discounted = 0.0, discount = 1.0;
    for (int step = 0; step < horizon; ++step) {
      int y = std::min(world.y(), k);
      int action = t.action[static_cast<std::size_t>(y)];
      // Estimate A^y x via the filter recursion, then pay the squared error.
      Eigen::MatrixXd apow = Eigen::MatrixXd::Identity(1, 1);
      for (int i = 0; i < y; ++i) apow = model.A * apow;
      Eigen::VectorXd est = apow * world.x();
      double cost = (world.data() - est).squaredNorm() + model.fee * action;
      discounted += discount * cost;
      discount *= gamma;
      world.step(action);
    }
    sum += discounted;
    sum2 += discounted * discounted;
  }
  double mean = sum / paths;
  double se = std::sqrt((sum2 / paths - mean * mean) / paths);
  double planned = t.v[0];
  double tail = std::pow(gamma, horizon) *
                elapsed_cost(k, 1, model) / (1.0 - gamma);
  bool sim_ok = std::abs(mean - planned) <= 3.0 * se + tail + 1e-6;

  std::ostringstream out;
  out << "collect regions monotone in sigma_w: " << (monotone ? "yes" : "no")
      << "; complete certainty threshold above star for n in [3,20]: "
      << (ordering ? "yes" : "no")
      << "; star collect region inside complete: "
      << (inclusion ? "yes" : "no") << "; simulated J = " << mean << " +- "
      << se << " vs planned V(0) = " << planned;
  detail = out.str();
  return monotone && ordering && inclusion && sim_ok;
}

// ---------------------------------------------------------------------------
// Criterion 10: asymptotic decay of the estimator-only cost.

bool criterion10(std::string& detail) {
  Eigen::MatrixXd local(2, 2);
  local << 0.9, 0.1, 0.2, 0.8;
  MeanFieldOperator op = MeanFieldOperator::decoupled(local);
  const double gamma = 0.8;
  const int horizon = 60;
  const int paths = 10000;
  const std::vector<int> n_values{25, 100, 400};
  Eigen::VectorXd m1(2);
  m1 << 0.6, 0.4;

  // Common noise driver: node i at (path, t) reuses one uniform stream, so
  // the three population sizes see the same randomness where they overlap.
  std::vector<double> means, ses;
  std::vector<std::vector<double>> per_path(n_values.size());
  for (std::size_t idx = 0; idx < n_values.size(); ++idx) {
    int n = n_values[idx];
    double sum = 0.0, sum2 = 0.0;
    per_path[idx].reserve(paths);
    for (int p = 0; p < paths; ++p) {
      std::vector<int> nodes(static_cast<std::size_t>(n));
      int split = static_cast<int>(std::lround(m1[0] * n));
      for (int i = 0; i < n; ++i) nodes[static_cast<std::size_t>(i)] = i >= split;
      Eigen::VectorXd mhat = m1;
      double discounted = 0.0, discount = 1.0;
      for (int t = 1; t <= horizon; ++t) {
        SplitMix64 step_rng(derive_stream(777, static_cast<std::uint64_t>(p),
                                          static_cast<std::uint64_t>(t)));
        int count0 = 0;
        for (int i = 0; i < n; ++i) {
          double u = step_rng.uniform();
          int s = nodes[static_cast<std::size_t>(i)];
          nodes[static_cast<std::size_t>(i)] = u < local(s, 0) ? 0 : 1;
          count0 += nodes[static_cast<std::size_t>(i)] == 0;
        }
        mhat = op.step(mhat);
        Eigen::VectorXd m(2);
        m << static_cast<double>(count0) / n,
            static_cast<double>(n - count0) / n;
        discounted += discount * (m - mhat).cwiseAbs().maxCoeff();
        discount *= gamma;
      }
      per_path[idx].push_back(discounted);
      sum += discounted;
      sum2 += discounted * discounted;
    }
    double mean = sum / paths;
    means.push_back(mean);
    ses.push_back(std::sqrt((sum2 / paths - mean * mean) / paths));
  }

  bool decreasing = true;
  for (std::size_t i = 0; i + 1 < means.size(); ++i) {
    // Paired comparison on the shared noise driver.
    double dsum = 0.0, dsum2 = 0.0;
    for (int p = 0; p < paths; ++p) {
      double d = per_path[i][static_cast<std::size_t>(p)] -
                 per_path[i + 1][static_cast<std::size_t>(p)];
      dsum += d;
      dsum2 += d * d;
    }
    double dmean = dsum / paths;
    double dse = std::sqrt((dsum2 / paths - dmean * dmean) / paths);
    if (dmean < -3.0 * dse) decreasing = false;
    if (dmean <= 0.0) decreasing = false;
  }

  double c25 = fit_deviation_constant(local, 25, m1, 4000, 31);
  double c100 = fit_deviation_constant(local, 100, m1, 4000, 31);
  double c400 = fit_deviation_constant(local, 400, m1, 4000, 31);
  bool stable = std::abs(c25 - c100) / c100 <= 0.2 &&
                std::abs(c400 - c100) / c100 <= 0.2;

  std::ostringstream out;
  out << "estimator-only discounted cost: J(25) = " << means[0] << ", J(100) = "
      << means[1] << ", J(400) = " << means[2]
      << " (monotone decreasing within 3 SE: " << (decreasing ? "yes" : "no")
      << "); deviation constants C(25," << "100,400) = (" << c25 << ", "
      << c100 << ", " << c400 << "), stable within 20%: "
      << (stable ? "yes" : "no");
  detail = out.str();
  return decreasing && stable;
}

// ---------------------------------------------------------------------------
// Criterion 11: finite-horizon scheduler.

bool criterion11(std::string& detail) {
  LinearNetworkModel model;
  model.A = Eigen::MatrixXd::Constant(1, 1, 0.9);
  model.sigma_w = Eigen::MatrixXd::Constant(1, 1, 1.0);
  model.credibility = 1.0;
  model.gamma = 0.85;
  model.fee = 1.0;
  ObservationModel obs{Eigen::MatrixXd::Identity(1, 1),
                       Eigen::MatrixXd::Constant(1, 1, 0.5)};
  const int horizon = 10;
  ScheduleResult from_search = finite_horizon_schedule(model, obs, horizon);

  // Independent flat enumeration of all 2^H schedules in lexicographic
  // order, strict improvement only.
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_schedule;
  for (int mask = 0; mask < (1 << horizon); ++mask) {
    std::vector<int> schedule(horizon);
    for (int t = 0; t < horizon; ++t)
      schedule[static_cast<std::size_t>(t)] =
          (mask >> (horizon - 1 - t)) & 1;
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(1, 1);
    double objective = 0.0, discount = 1.0;
    for (int t = 0; t < horizon; ++t) {
      p = riccati_step(p, schedule[static_cast<std::size_t>(t)], model, obs);
      objective += discount * (p.trace() +
                               model.fee *
                                   schedule[static_cast<std::size_t>(t)]);
      discount *= model.gamma;
    }
    if (objective <= best) {  // later ties win: lexicographically largest
      best = objective;
      best_schedule = schedule;
    }
  }
  bool match = from_search.actions == best_schedule &&
               std::abs(from_search.objective - best) <= 1e-9;

  // Degenerate endpoints.
  LinearNetworkModel free_fee = model;
  free_fee.fee = 0.0;
  ScheduleResult all_ones = finite_horizon_schedule(free_fee, obs, 8);
  bool ones = true;
  for (int a : all_ones.actions) ones = ones && a == 1;

  LinearNetworkModel no_noise = model;
  no_noise.sigma_w.setZero();
  ScheduleResult all_zeros = finite_horizon_schedule(no_noise, obs, 8);
  bool zeros = true;
  for (int a : all_zeros.actions) zeros = zeros && a == 0;

  std::ostringstream out;
  out << "H=10 exhaustive search vs flat enumeration: "
      << (match ? "identical" : "MISMATCH") << " (objective "
      << from_search.objective << "); fee=0 all-ones: "
      << (ones ? "yes" : "no") << "; no-noise all-zeros: "
      << (zeros ? "yes" : "no");
  detail = out.str();
  return match && ones && zeros;
}

}  // namespace

int main(int argc, char** argv) {
  std::optional<int> only;
  if (argc > 1) only = std::atoi(argv[1]);

  std::vector<Criterion> criteria{
      {1, "Example 1 value reproduction", criterion1},
      {2, "Example 1 truncation stability (k=70 vs k=189)", criterion2},
      {3, "Example 3 first-collect thresholds", criterion3},
      {4, "Q-learning convergence", criterion4},
      {5, "kernel correctness (deep Chapman-Kolmogorov + Monte-Carlo)",
       criterion5},
      {6, "history-tree oracle epsilon-optimality", criterion6},
      {7, "separation principle (distribution- and strategy-free)",
       criterion7},
      {8, "elapsed-cost closed form vs finite sum", criterion8},
      {9, "complete vs star graph ordering and monotonicity", criterion9},
      {10, "asymptotic decay of the estimator-only cost", criterion10},
      {11, "finite-horizon scheduler exhaustive search", criterion11},
  };

  int failures = 0;
  for (auto& criterion : criteria) {
    if (only && *only != criterion.id) continue;
    std::string resolved;
    bool ok = false;
    try {
      ok = criterion.run(resolved);
    } catch (const std::exception& e) {
      resolved = std::string("exception: ") + e.what();
    }
    if (!ok) ++failures;
    std::printf("[%s] criterion %2d: %s — %s\n", ok ? "PASS" : "FAIL",
                criterion.id, criterion.label.c_str(), resolved.c_str());
    std::fflush(stdout);
  }
  if (failures)
    std::printf("%d criterion(s) failed\n", failures);
  else
    std::printf("all criteria passed\n");
  return failures == 0 ? 0 : 1;
}
