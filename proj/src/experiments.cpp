#include "netsched/experiments.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>

#include "netsched/config.hpp"
#include "netsched/csv.hpp"
#include "netsched/errors.hpp"
#include "netsched/learning.hpp"
#include "netsched/linear_systems.hpp"
#include "netsched/planning.hpp"
#include "netsched/simulation.hpp"

namespace netsched {
namespace {

using nlohmann::json;

json merged(const json& base, const json& overrides) {
  json out = base;
  out.merge_patch(overrides);
  return out;
}

std::map<std::string, std::string> base_metadata(const json& cfg) {
  std::map<std::string, std::string> md;
  md["config_hash"] = std::to_string(config_hash(cfg));
  if (cfg.contains("seed")) md["seed"] = std::to_string(cfg["seed"].get<long long>());
  return md;
}

void ensure_dir(const std::filesystem::path& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory " + out.string());
}

// Battery ladder with saturation on an integer state space.
Eigen::MatrixXd battery_local_matrix(const StateSpace& states, int d_s,
                                     double s_max, double s_min,
                                     const NoisePmf& noise) {
  return local_matrix_from_noise(
      [d_s, s_max, s_min](double s, double w) {
        if (s > d_s) return s_max;
        if (s < -d_s) return s_min;
        return s + w;
      },
      noise, states);
}

// Estimators keep a reference to the space, so setups hold it behind a
// stable heap address.
struct ChainSetup {
  std::unique_ptr<EmpiricalSpace> space;
  std::unique_ptr<TransitionKernel> kernel;
  std::unique_ptr<CostModel> cost;
  std::unique_ptr<Estimator> estimator;
  double gamma = 0.9, credibility = 1.0;

  PlanningProblem problem() const {
    return PlanningProblem{kernel.get(), space.get(), cost.get(),
                           estimator.get(), credibility, gamma};
  }
};

ChainSetup make_example1(const json& cfg) {
  double p_g = cfg["p_g"].get<double>();
  double p_d = cfg["p_d"].get<double>();
  int d_s = cfg["d_s"].get<int>();
  int d_w = cfg["d_w"].get<int>();
  double fee = cfg["fee"].get<double>();
  int bound = d_s + d_w;
  StateSpace states = StateSpace::integer_range(-bound, bound);

  NoisePmf noise;
  noise.values = {1.0, -1.0, 0.0};
  noise.probs = {p_g * (1.0 - p_d), p_d * (1.0 - p_g),
                 p_g * p_d + (1.0 - p_g) * (1.0 - p_d)};

  Eigen::MatrixXd local = battery_local_matrix(
      states, d_s, static_cast<double>(d_s), static_cast<double>(-d_s), noise);

  ChainSetup setup;
  // Single node: M(1) is the state space itself.
  setup.space = std::make_unique<EmpiricalSpace>(states, 1);
  setup.kernel = std::make_unique<TransitionKernel>(
      build_kernel_exact(LocalKernel::decoupled(local), *setup.space));
  setup.cost =
      std::make_unique<CostModel>(CostModel::weighted_abs(states, fee));
  setup.estimator = make_identity_estimator(*setup.space);
  setup.gamma = cfg["gamma"].get<double>();
  setup.credibility = cfg["credibility"].get<double>();
  return setup;
}

ChainSetup make_example3(const json& cfg) {
  int n = cfg["n"].get<int>();
  double p_aa = cfg["p_stay_a"].get<double>();
  double p_bb = cfg["p_stay_b"].get<double>();
  double fee = cfg["fee"].get<double>();
  StateSpace states({1.0, 0.0});  // candidate A first, then B
  Eigen::MatrixXd local(2, 2);
  local << p_aa, 1.0 - p_aa, 1.0 - p_bb, p_bb;

  ChainSetup setup;
  setup.space = std::make_unique<EmpiricalSpace>(states, n);
  setup.kernel = std::make_unique<TransitionKernel>(
      build_kernel_exact(LocalKernel::decoupled(local), *setup.space));
  setup.cost =
      std::make_unique<CostModel>(CostModel::kl_plus_fee(*setup.space, fee));
  setup.estimator = make_map_estimator(*setup.space);
  setup.gamma = cfg["gamma"].get<double>();
  setup.credibility = cfg["credibility"].get<double>();
  return setup;
}

int resolve_k(const json& cfg, double gamma, double c_max) {
  if (cfg.contains("k")) return cfg["k"].get<int>();
  if (cfg.contains("epsilon"))
    return truncation_index(cfg["epsilon"].get<double>(), gamma, c_max);
  throw ConfigError("config needs either k or epsilon");
}

}  // namespace

json default_example_config(const std::string& id) {
  if (id == "example1") {
    return json{{"experiment", "example1"}, {"p_g", 0.8},   {"p_d", 0.8},
                {"d_s", 99},                {"d_w", 1},     {"credibility", 0.95},
                {"gamma", 0.9},             {"fee", 100.0}, {"k", 70},
                {"seed", 1},                {"learning", json{{"enabled", false}}}};
  }
  if (id == "example2") {
    return json{{"experiment", "example2"},
                {"credibility", 0.9},
                {"gamma", 0.85},
                {"k", 200},
                {"seed", 1},
                {"panel_n", json{{"A", 0.8}, {"fee", 0.4}, {"sigma_w", 6.0},
                                 {"n_values", json::array({2, 3, 4, 5, 6, 8, 10, 12, 15, 20})}}},
                {"panel_sigma", json{{"A", 0.9}, {"fee", 1.0}, {"n", 5},
                                     {"sigma_values", json::array({0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0})}}},
                {"y_grid_max", 40}};
  }
  if (id == "example3") {
    return json{{"experiment", "example3"}, {"n", 50},
                {"p_stay_a", 0.95},         {"p_stay_b", 0.98},
                {"credibility", 0.95},      {"gamma", 0.8},
                {"fee", 0.02},              {"k", 50},
                {"seed", 1}};
  }
  throw ConfigError("unknown example id: " + id);
}

void run_example1(const json& overrides, const std::filesystem::path& out) {
  json cfg = merged(default_example_config("example1"), overrides);
  ensure_dir(out);
  ChainSetup setup = make_example1(cfg);
  PlanningProblem problem = setup.problem();
  int k = resolve_k(cfg, setup.gamma, setup.cost->c_max());
  ValueTable table = value_iteration(problem, k);

  auto md = base_metadata(cfg);
  md["experiment"] = "example1";
  md["estimator"] = setup.estimator->name();
  md["cost"] = setup.cost->name();
  md["c_max"] = CsvWriter::num(setup.cost->c_max());
  md["k"] = std::to_string(k);
  md["state_space"] = "integer ladder -100..100 (201 states; saturation "
                      "re-enters at +-99)";
  table.save_csv(*setup.space, out / "value_table.csv", md);

  if (cfg.value("simulate_check", true)) {
    ChainModel world_model{setup.space.get(),
                           nullptr,  // filled below
                           setup.credibility, 0};
    // The chain world needs the local kernel; example 1 is a single node so
    // the data kernel doubles as the local one.
    LocalKernel local = LocalKernel::decoupled(setup.kernel->matrix());
    world_model.local = &local;
    EvaluationOptions eopts;
    eopts.gamma = setup.gamma;
    eopts.paths = cfg.value("simulate_paths", 400LL);
    eopts.seed = cfg.value("seed", 1ULL);
    int initial = setup.space->states().index_of(0.0);
    StrategyFn strategy = [&table, k](int x, int y) {
      return table.action_at(x, std::min(y, k));
    };
    EvaluationReport report =
        evaluate_strategy_chain(world_model, *setup.kernel, *setup.cost,
                                *setup.estimator, strategy, initial, eopts);
    CsvWriter w(out / "evaluation.csv", md,
                {"mean", "std_error", "tail_bound", "paths", "horizon",
                 "value_at_initial"});
    w.row({CsvWriter::num(report.mean), CsvWriter::num(report.std_error),
           CsvWriter::num(report.tail_bound), std::to_string(report.paths),
           std::to_string(report.horizon),
           CsvWriter::num(table.value(initial, 0))});
  }

  if (cfg["learning"].value("enabled", false)) {
    const json& lcfg = cfg["learning"];
    int lk = lcfg.value("k", 50);
    VirtualMdpConfig vcfg{setup.space->size(), lk, 0, setup.credibility,
                          setup.gamma};
    KernelSampleEnv env(problem, lk);
    TrainOptions topt;
    topt.sweeps = lcfg.value("sweeps", 200000LL);
    topt.lr_exponent = lcfg.value("lr_exponent", 0.85);
    topt.seed = cfg.value("seed", 1);
    topt.probe_x = setup.space->states().index_of(0.0);
    topt.probe_y = lcfg.value("probe_y", 49);
    topt.curve_stride = lcfg.value("curve_stride", 500LL);
    TrainResult result = train_synchronized(env, vcfg, topt);
    auto lmd = md;
    lmd["sweeps"] = std::to_string(result.sweeps_run);
    lmd["drift"] = CsvWriter::num(result.last_drift);
    lmd["lr_exponent"] = CsvWriter::num(topt.lr_exponent);
    result.save_curve_csv(out / "learning_curve.csv", lmd);
    result.table.save_csv(out / "q_table.csv", lmd);
  }
}

void run_example3(const json& overrides, const std::filesystem::path& out) {
  json cfg = merged(default_example_config("example3"), overrides);
  ensure_dir(out);
  ChainSetup setup = make_example3(cfg);
  PlanningProblem problem = setup.problem();
  int k = resolve_k(cfg, setup.gamma, setup.cost->c_max());
  ValueTable table = value_iteration(problem, k);

  auto md = base_metadata(cfg);
  md["experiment"] = "example3";
  md["estimator"] = setup.estimator->name();
  md["cost"] = setup.cost->name();
  md["kl_floor"] = CsvWriter::num(1.0 / (10.0 * setup.space->population()));
  md["c_max"] = CsvWriter::num(setup.cost->c_max());
  md["k"] = std::to_string(k);
  table.save_csv(*setup.space, out / "value_table.csv", md);

  CsvWriter thresholds(out / "first_collect.csv", md,
                       {"x_index", "count_a", "first_collect_y"});
  for (int x = 0; x < setup.space->size(); ++x)
    thresholds.row({std::to_string(x),
                    std::to_string(setup.space->at(x).counts[0]),
                    std::to_string(table.first_collect(x))});

  if (cfg.value("simulate_check", true)) {
    Eigen::MatrixXd local(2, 2);
    local << cfg["p_stay_a"].get<double>(), 1.0 - cfg["p_stay_a"].get<double>(),
        1.0 - cfg["p_stay_b"].get<double>(), cfg["p_stay_b"].get<double>();
    LocalKernel lk = LocalKernel::decoupled(local);
    ChainModel world_model{setup.space.get(), &lk, setup.credibility, 0};
    EvaluationOptions eopts;
    eopts.gamma = setup.gamma;
    eopts.paths = cfg.value("simulate_paths", 400LL);
    eopts.seed = cfg.value("seed", 1ULL);
    int initial = cfg.value("initial_atom", 25);
    StrategyFn strategy = [&table, k](int x, int y) {
      return table.action_at(x, std::min(y, k));
    };
    EvaluationReport report =
        evaluate_strategy_chain(world_model, *setup.kernel, *setup.cost,
                                *setup.estimator, strategy, initial, eopts);
    CsvWriter w(out / "evaluation.csv", md,
                {"mean", "std_error", "tail_bound", "paths", "horizon",
                 "value_at_initial"});
    w.row({CsvWriter::num(report.mean), CsvWriter::num(report.std_error),
           CsvWriter::num(report.tail_bound), std::to_string(report.paths),
           std::to_string(report.horizon),
           CsvWriter::num(table.value(initial, 0))});
  }
}

void run_example2(const json& overrides, const std::filesystem::path& out) {
  json cfg = merged(default_example_config("example2"), overrides);
  ensure_dir(out);
  auto md = base_metadata(cfg);
  md["experiment"] = "example2";
  const double q = cfg["credibility"].get<double>();
  const double gamma = cfg["gamma"].get<double>();
  const int k = cfg["k"].get<int>();
  const int y_grid = cfg["y_grid_max"].get<int>();

  auto mode_for = [&](const std::string& graph, int n, double a_scale) {
    // Dominant-mode coefficient: A for the complete graph, A/sqrt(n-1) for
    // the star, from the adjacency polynomial alpha(1) = A/(n-1).
    GraphSpec g;
    g.poly = {0.0, a_scale / (n - 1)};
    g.dominant_modes = 1;
    if (graph == "complete") {
      g.adjacency = Eigen::MatrixXd::Ones(n, n) -
                    Eigen::MatrixXd::Identity(n, n);
    } else {
      g.adjacency = Eigen::MatrixXd::Zero(n, n);
      for (int i = 1; i < n; ++i) {
        g.adjacency(0, i) = 1.0;
        g.adjacency(i, 0) = 1.0;
      }
    }
    return spectral_vectorize(g).front();
  };

  auto model_for = [&](double mode_coefficient, double sigma_w, int n,
                       double fee) {
    LinearNetworkModel model;
    model.A = Eigen::MatrixXd::Constant(1, 1, mode_coefficient);
    model.sigma_w = Eigen::MatrixXd::Constant(1, 1, sigma_w / n);
    model.credibility = q;
    model.gamma = gamma;
    model.fee = fee;
    return model;
  };

  // Left panels: strategy over (n, y) at fixed noise.
  {
    const json& p = cfg["panel_n"];
    double a_scale = p["A"].get<double>();
    double fee = p["fee"].get<double>();
    double sigma_w = p["sigma_w"].get<double>();
    for (const std::string graph : {"complete", "star"}) {
      auto grid_md = md;
      grid_md["panel"] = "vary_n";
      grid_md["graph"] = graph;
      CsvWriter w(out / ("strategy_vs_n_" + graph + ".csv"), grid_md,
                  {"n", "y", "action"});
      CsvWriter th(out / ("threshold_vs_n_" + graph + ".csv"), grid_md,
                   {"n", "first_collect_y", "estimate_only_cost"});
      for (const auto& nv : p["n_values"]) {
        int n = nv.get<int>();
        SpectralMode mode = mode_for(graph, n, a_scale);
        LinearNetworkModel model =
            model_for(mode.coefficient, sigma_w, n, fee);
        YValueTable t = y_space_value_iteration(model, k);
        for (int y = 0; y <= std::min(k, y_grid); ++y)
          w.row({std::to_string(n), std::to_string(y),
                 std::to_string(t.action[static_cast<std::size_t>(y)])});
        th.row({std::to_string(n), std::to_string(t.first_collect()),
                CsvWriter::num(estimate_only_cost(model))});
      }
    }
  }

  // Right panels: strategy over (sigma_w, y) at fixed n.
  {
    const json& p = cfg["panel_sigma"];
    double a_scale = p["A"].get<double>();
    double fee = p["fee"].get<double>();
    int n = p["n"].get<int>();
    for (const std::string graph : {"complete", "star"}) {
      SpectralMode mode = mode_for(graph, n, a_scale);
      auto grid_md = md;
      grid_md["panel"] = "vary_sigma";
      grid_md["graph"] = graph;
      CsvWriter w(out / ("strategy_vs_sigma_" + graph + ".csv"), grid_md,
                  {"sigma_w", "y", "action"});
      CsvWriter th(out / ("threshold_vs_sigma_" + graph + ".csv"), grid_md,
                   {"sigma_w", "first_collect_y"});
      for (const auto& sv : p["sigma_values"]) {
        double sigma_w = sv.get<double>();
        LinearNetworkModel model =
            model_for(mode.coefficient, sigma_w, n, fee);
        YValueTable t = y_space_value_iteration(model, k);
        for (int y = 0; y <= std::min(k, y_grid); ++y)
          w.row({CsvWriter::num(sigma_w), std::to_string(y),
                 std::to_string(t.action[static_cast<std::size_t>(y)])});
        th.row({CsvWriter::num(sigma_w), std::to_string(t.first_collect())});
      }
    }
  }

  // Monotonicity and ordering summary across the panels.
  {
    bool monotone_sigma = true;
    const json& p = cfg["panel_sigma"];
    SpectralMode mode = mode_for("complete", p["n"].get<int>(),
                                 p["A"].get<double>());
    std::vector<std::uint8_t> prev;
    for (const auto& sv : p["sigma_values"]) {
      YValueTable t = y_space_value_iteration(
          model_for(mode.coefficient, sv.get<double>(), p["n"].get<int>(),
                    p["fee"].get<double>()),
          k);
      if (!prev.empty())
        for (std::size_t y = 0; y < prev.size(); ++y)
          if (prev[y] == 1 && t.action[y] == 0) monotone_sigma = false;
      prev = t.action;
    }

    const json& pn = cfg["panel_n"];
    bool complete_above_star = true;
    for (const auto& nv : pn["n_values"]) {
      int n = nv.get<int>();
      if (n < 3) continue;
      SpectralMode mc = mode_for("complete", n, pn["A"].get<double>());
      SpectralMode ms = mode_for("star", n, pn["A"].get<double>());
      double jc = estimate_only_cost(model_for(
          mc.coefficient, pn["sigma_w"].get<double>(), n, pn["fee"].get<double>()));
      double js = estimate_only_cost(model_for(
          ms.coefficient, pn["sigma_w"].get<double>(), n, pn["fee"].get<double>()));
      if (jc <= js) complete_above_star = false;
    }

    std::ofstream report(out / "monotonicity_report.json");
    report << "{\n  \"collect_region_monotone_in_sigma_complete\": "
           << (monotone_sigma ? "true" : "false")
           << ",\n  \"complete_certainty_threshold_above_star\": "
           << (complete_above_star ? "true" : "false") << "\n}\n";
  }
}

namespace {

// Chain model described directly in config: labels + local transition rows.
struct CustomChain {
  std::unique_ptr<EmpiricalSpace> space;
  std::unique_ptr<LocalKernel> local;
  std::unique_ptr<TransitionKernel> kernel;
  std::unique_ptr<CostModel> cost;
  std::unique_ptr<Estimator> estimator;
  double gamma = 0.9, credibility = 1.0;

  PlanningProblem problem() const {
    return PlanningProblem{kernel.get(), space.get(), cost.get(),
                           estimator.get(), credibility, gamma};
  }
};

CustomChain make_custom_chain(const json& cfg) {
  const json& chain = cfg.at("chain");
  std::vector<double> labels = chain.at("labels").get<std::vector<double>>();
  StateSpace states(labels);
  int n = chain.at("population").get<int>();

  auto rows = chain.at("local").get<std::vector<std::vector<double>>>();
  Eigen::MatrixXd local_matrix(rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size())
      throw ConfigError("local kernel must be square");
    for (std::size_t j = 0; j < rows.size(); ++j)
      local_matrix(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  }

  CustomChain out;
  out.space = std::make_unique<EmpiricalSpace>(states, n);
  out.local =
      std::make_unique<LocalKernel>(LocalKernel::decoupled(local_matrix));
  out.kernel = std::make_unique<TransitionKernel>(
      build_kernel_exact(*out.local, *out.space));

  const json& plan = cfg.at("planning");
  out.gamma = plan.at("gamma").get<double>();
  out.credibility = plan.at("credibility").get<double>();
  double fee = plan.value("fee", 0.0);
  std::string cost_name = plan.value("cost", "quadratic_fee");
  std::string est_name = plan.value("estimator", "map");

  if (cost_name == "weighted_abs")
    out.cost = std::make_unique<CostModel>(CostModel::weighted_abs(states, fee));
  else if (cost_name == "kl_plus_fee")
    out.cost = std::make_unique<CostModel>(
        CostModel::kl_plus_fee(*out.space, fee));
  else if (cost_name == "quadratic_fee")
    out.cost = std::make_unique<CostModel>(CostModel::quadratic_fee(fee));
  else if (cost_name == "custom-table")
    out.cost = std::make_unique<CostModel>(CostModel::from_table(
        *out.space, plan.at("cost_table").get<std::vector<double>>()));
  else
    throw ConfigError("unknown cost: " + cost_name);
  out.estimator = make_estimator(est_name, *out.space, out.local.get());
  return out;
}

int custom_k(const json& cfg, const CustomChain& chain) {
  const json& plan = cfg.at("planning");
  if (plan.contains("k")) return plan["k"].get<int>();
  if (plan.contains("epsilon"))
    return truncation_index(plan["epsilon"].get<double>(), chain.gamma,
                            chain.cost->c_max());
  throw ConfigError("planning needs either k or epsilon");
}

}  // namespace

void run_plan(const json& cfg, const std::filesystem::path& out) {
  ensure_dir(out);
  CustomChain chain = make_custom_chain(cfg);
  PlanningProblem problem = chain.problem();
  int k = custom_k(cfg, chain);
  ValueTable table = value_iteration(problem, k);
  auto md = base_metadata(cfg);
  md["estimator"] = chain.estimator->name();
  md["cost"] = chain.cost->name();
  md["c_max"] = CsvWriter::num(chain.cost->c_max());
  md["k"] = std::to_string(k);
  table.save_csv(*chain.space, out / "value_table.csv", md);
  chain.kernel->save_csv(out / "kernel.csv");
}

void run_learn(const json& cfg, const std::filesystem::path& out) {
  ensure_dir(out);
  CustomChain chain = make_custom_chain(cfg);
  PlanningProblem problem = chain.problem();
  int k = custom_k(cfg, chain);
  const json& lcfg = cfg.value("learning", json::object());
  std::string mode = lcfg.value("mode", "q");
  auto md = base_metadata(cfg);
  md["mode"] = mode;

  auto write_meta_json = [&](const TrainResult& result,
                             const TrainOptions& topt) {
    std::ofstream meta(out / "q_table_meta.json");
    meta.precision(17);
    meta << "{\n  \"seed\": " << topt.seed
         << ",\n  \"sweeps\": " << result.sweeps_run
         << ",\n  \"drift\": " << result.last_drift
         << ",\n  \"converged\": " << (result.converged ? "true" : "false")
         << ",\n  \"lr_exponent\": " << topt.lr_exponent << "\n}\n";
  };

  if (mode == "model-based") {
    // Roll a trajectory, count node transitions and channel outcomes, rebuild
    // the kernel from the estimated model, then plan on it.
    ChainModel world_model{chain.space.get(), chain.local.get(),
                           chain.credibility, 0};
    int steps = lcfg.value("steps", 20000);
    int period = std::max(1, lcfg.value("collect_period", 4));
    ChainWorld world(world_model, chain.space->at(0),
                     cfg.value("seed", 1ULL));
    for (int t = 0; t < steps; ++t) world.step(t % period == 0 ? 1 : 0);
    ModelEstimate est = estimate_decoupled_model(world.transition_counts(),
                                                 world.credible_deliveries(),
                                                 world.collect_attempts());
    TransitionKernel learned =
        build_kernel_exact(LocalKernel::decoupled(est.local), *chain.space);
    PlanningProblem learned_problem{&learned, chain.space.get(),
                                    chain.cost.get(), chain.estimator.get(),
                                    est.credibility, chain.gamma};
    ValueTable table = value_iteration(learned_problem, k);
    md["credibility_estimate"] = CsvWriter::num(est.credibility);
    md["transition_samples"] = std::to_string(est.transition_samples);
    table.save_csv(*chain.space, out / "value_table.csv", md);
    return;
  }

  VirtualMdpConfig vcfg{chain.space->size(), k, 0, chain.credibility,
                        chain.gamma};
  TrainOptions topt;
  topt.sweeps = lcfg.value("sweeps", 100000LL);
  topt.lr_exponent = lcfg.value("lr_exponent", 1.0);
  topt.drift_threshold = lcfg.value("drift_threshold", 1e-4);
  topt.seed = cfg.value("seed", 1ULL);
  if (lcfg.contains("probe")) {
    topt.probe_x = lcfg["probe"][0].get<int>();
    topt.probe_y = lcfg["probe"][1].get<int>();
  }

  TrainResult result = [&]() {
    if (mode == "offline") {
      // Replay logged samples instead of touching the model.
      auto rows = load_trace_csv(lcfg.at("trace").get<std::string>());
      std::vector<TraceRowView> views;
      for (std::size_t i = 0; i + 1 < rows.size(); ++i)
        views.push_back(TraceRowView{rows[i].x_atom, rows[i].y,
                                     rows[i].action, rows[i].cost,
                                     rows[i + 1].blank,
                                     rows[i + 1].x_atom});
      TraceReplayEnv env = replay_env_from_rows(views);
      return train_synchronized(env, vcfg, topt);
    }
    if (mode != "q") throw ConfigError("unknown learning mode: " + mode);
    KernelSampleEnv env(problem, k);
    return train_synchronized(env, vcfg, topt);
  }();
  md["sweeps"] = std::to_string(result.sweeps_run);
  md["drift"] = CsvWriter::num(result.last_drift);
  md["converged"] = result.converged ? "true" : "false";
  result.table.save_csv(out / "q_table.csv", md);
  write_meta_json(result, topt);
  if (topt.probe_x >= 0) result.save_curve_csv(out / "learning_curve.csv", md);
}

void run_simulate(const json& cfg, const std::filesystem::path& out) {
  ensure_dir(out);
  CustomChain chain = make_custom_chain(cfg);
  PlanningProblem problem = chain.problem();
  int k = custom_k(cfg, chain);
  const json& sim = cfg.value("simulate", json::object());

  // Plan first, then evaluate the extracted strategy (or a named one).
  ValueTable table = value_iteration(problem, k);
  std::string strategy_name = sim.value("strategy", "planned");
  StrategyFn strategy;
  if (strategy_name == "planned") {
    strategy = [&table, k](int x, int y) {
      return table.action_at(x, std::min(y, k));
    };
  } else if (strategy_name == "always") {
    strategy = [](int, int) { return 1; };
  } else if (strategy_name == "never") {
    strategy = [](int, int) { return 0; };
  } else {
    throw ConfigError("unknown strategy: " + strategy_name);
  }

  ChainModel world_model{chain.space.get(), chain.local.get(),
                         chain.credibility, sim.value("delay", 0)};
  EvaluationOptions opts;
  opts.gamma = chain.gamma;
  opts.paths = sim.value("paths", 1000LL);
  opts.horizon = sim.value("horizon", 0);
  opts.seed = cfg.value("seed", 1ULL);
  int initial = sim.value("initial_atom", 0);
  EvaluationReport report =
      evaluate_strategy_chain(world_model, *chain.kernel, *chain.cost,
                              *chain.estimator, strategy, initial, opts);

  auto md = base_metadata(cfg);
  md["strategy"] = strategy_name;
  CsvWriter w(out / "evaluation.csv", md,
              {"mean", "std_error", "tail_bound", "paths", "horizon",
               "value_at_initial"});
  w.row({CsvWriter::num(report.mean), CsvWriter::num(report.std_error),
         CsvWriter::num(report.tail_bound), std::to_string(report.paths),
         std::to_string(report.horizon),
         CsvWriter::num(table.value(initial, 0))});

  if (sim.value("trace_steps", 0) > 0) {
    auto rows = record_chain_trace(world_model, *chain.kernel, *chain.cost,
                                   *chain.estimator, strategy, initial,
                                   sim["trace_steps"].get<int>(),
                                   cfg.value("seed", 1ULL));
    save_trace_csv(out / "trace.csv", rows, md);
  }
}

void run_threshold(const json& cfg, const std::filesystem::path& out) {
  ensure_dir(out);
  CustomChain chain = make_custom_chain(cfg);
  const json& tcfg = cfg.value("threshold", json::object());
  int grid = tcfg.value("grid", 20);
  std::int64_t paths = tcfg.value("paths", 2000LL);
  double collection_cost = tcfg.value("collection_cost", 0.0);

  MeanFieldOperator op =
      MeanFieldOperator::decoupled(chain.local->matrix());
  LipschitzEstimates lip = estimate_lipschitz_constants(
      op, *chain.cost, chain.space->states().size(), grid);

  std::ofstream json_out(out / "threshold_report.json");
  if (!json_out) throw ConfigError("cannot write threshold report");
  json_out << "[";
  bool first = true;
  for (const auto& nv : tcfg.value("n_values", json::array({25, 100, 400}))) {
    int n = nv.get<int>();
    Eigen::VectorXd m1 = Eigen::VectorXd::Constant(
        chain.space->states().size(), 1.0 / chain.space->states().size());
    if (tcfg.contains("initial")) {
      auto init = tcfg["initial"].get<std::vector<double>>();
      if (static_cast<int>(init.size()) != chain.space->states().size())
        throw ConfigError("initial pmf size mismatch");
      for (int s = 0; s < m1.size(); ++s) m1[s] = init[static_cast<std::size_t>(s)];
    }
    double c_fit = fit_deviation_constant(chain.local->matrix(), n, m1, paths,
                                          cfg.value("seed", 1ULL), lip.k_p);
    ThresholdReport report;
    report.n = n;
    report.k_c = lip.k_c;
    report.k_p = lip.k_p;
    report.gamma = chain.gamma;
    report.c_fit = c_fit;
    report.threshold = certainty_threshold(lip.k_c, lip.k_p, chain.gamma,
                                           c_fit / std::sqrt(double(n)));
    report.collection_cost = collection_cost;
    report.recommend_estimate_only = collection_cost > report.threshold;
    if (!first) json_out << ",";
    json_out << "\n" << report.to_json();
    first = false;
  }
  json_out << "\n]\n";
}

void run_linear_plan(const json& cfg, const std::filesystem::path& out) {
  ensure_dir(out);
  const json& lin = cfg.at("linear");
  LinearNetworkModel model;
  if (lin.contains("graph")) {
    // Spectral route: adjacency file + polynomial -> diagonal mode dynamics,
    // aggregated noise sigma^2/n per mode.
    const json& g = lin["graph"];
    GraphSpec spec;
    spec.adjacency = load_adjacency_csv(g.at("file").get<std::string>());
    spec.poly = g.at("alpha").get<std::vector<double>>();
    spec.dominant_modes = g.value("dominant", 1);
    auto modes = spectral_vectorize(spec);
    int d = static_cast<int>(modes.size());
    int n = static_cast<int>(spec.adjacency.rows());
    model.A = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) model.A(i, i) = modes[static_cast<std::size_t>(i)].coefficient;
    double node_var = lin.value("node_variance", 1.0);
    model.sigma_w = (node_var / n) * Eigen::MatrixXd::Identity(d, d);
  } else {
    auto a_rows = lin.at("A").get<std::vector<std::vector<double>>>();
    int d = static_cast<int>(a_rows.size());
    model.A.resize(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) model.A(i, j) = a_rows[i][j];
    auto w_rows = lin.at("sigma_w").get<std::vector<std::vector<double>>>();
    model.sigma_w.resize(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) model.sigma_w(i, j) = w_rows[i][j];
  }
  model.credibility = lin.at("credibility").get<double>();
  model.gamma = lin.at("gamma").get<double>();
  model.fee = lin.value("fee", 0.0);
  model.delay = lin.value("delay", 0);

  auto md = base_metadata(cfg);
  const int dim = model.dim();
  if (lin.contains("horizon")) {
    ObservationModel obs;
    auto c_rows = lin.at("C").get<std::vector<std::vector<double>>>();
    obs.C.resize(static_cast<int>(c_rows.size()), dim);
    for (std::size_t i = 0; i < c_rows.size(); ++i)
      for (int j = 0; j < dim; ++j)
        obs.C(static_cast<int>(i), j) = c_rows[i][j];
    auto xi_rows = lin.at("sigma_xi").get<std::vector<std::vector<double>>>();
    obs.sigma_xi.resize(static_cast<int>(xi_rows.size()),
                        static_cast<int>(xi_rows.size()));
    for (std::size_t i = 0; i < xi_rows.size(); ++i)
      for (std::size_t j = 0; j < xi_rows.size(); ++j)
        obs.sigma_xi(static_cast<int>(i), static_cast<int>(j)) = xi_rows[i][j];
    ScheduleResult schedule =
        finite_horizon_schedule(model, obs, lin["horizon"].get<int>());
    CsvWriter w(out / "schedule.csv", md, {"t", "action", "objective"});
    for (std::size_t t = 0; t < schedule.actions.size(); ++t)
      w.row({std::to_string(t + 1), std::to_string(schedule.actions[t]),
             CsvWriter::num(schedule.objective)});
    return;
  }

  int k = lin.contains("k")
              ? lin["k"].get<int>()
              : truncation_index(lin.value("epsilon", 1e-5), model.gamma,
                                 elapsed_cost(lin.value("k_probe", 200), 1,
                                              model));
  YValueTable t = y_space_value_iteration(model, k);
  CsvWriter w(out / "y_strategy.csv", md, {"y", "V0", "V1", "V", "action"});
  for (int y = 0; y <= k; ++y)
    w.row({std::to_string(y), CsvWriter::num(t.v0[static_cast<std::size_t>(y)]),
           CsvWriter::num(t.v1[static_cast<std::size_t>(y)]),
           CsvWriter::num(t.v[static_cast<std::size_t>(y)]),
           std::to_string(t.action[static_cast<std::size_t>(y)])});
}

}  // namespace netsched
