#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "netsched/config.hpp"
#include "netsched/errors.hpp"
#include "netsched/experiments.hpp"

using netsched::ConfigError;
using netsched::NumericalError;

int main(int argc, char** argv) {
  CLI::App app{"netsched: plan, learn and simulate collect-vs-estimate "
               "sampling strategies for networked data"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  long long seed = -1;
  double epsilon = -1.0;
  int k = -1;
  std::string example_id;

  auto add_common = [&](CLI::App* cmd, bool config_required) {
    cmd->add_option("--config", config_path, "config file (JSON or TOML)")
        ->required(config_required);
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed, "RNG seed override");
    cmd->add_option("--epsilon", epsilon, "optimality gap (sets k)");
    cmd->add_option("--k", k, "truncation index override");
  };

  CLI::App* plan = app.add_subcommand("plan", "value iteration on a chain model");
  CLI::App* learn = app.add_subcommand("learn", "Q-learning or model-based learning");
  CLI::App* simulate = app.add_subcommand("simulate", "Monte-Carlo strategy evaluation");
  CLI::App* threshold = app.add_subcommand("threshold", "certainty-threshold report");
  CLI::App* linear = app.add_subcommand("linear-plan", "elapsed-time planning for linear dynamics");
  CLI::App* example = app.add_subcommand("example", "run a shipped experiment");
  for (CLI::App* cmd : {plan, learn, simulate, threshold, linear})
    add_common(cmd, true);
  std::string learn_mode;
  learn->add_option("--mode", learn_mode, "q | model-based | offline");
  add_common(example, false);
  example->add_option("--id", example_id,
                      "example1 | example2 | example3 (defaults from the "
                      "config's experiment field)");

  CLI11_PARSE(app, argc, argv);

  try {
    nlohmann::json cfg = nlohmann::json::object();
    if (!config_path.empty()) cfg = netsched::load_config(config_path);
    if (seed >= 0) cfg["seed"] = seed;
    if (epsilon > 0.0) {
      cfg["planning"]["epsilon"] = epsilon;
      cfg["epsilon"] = epsilon;
      cfg["planning"].erase("k");
      cfg.erase("k");
    }
    if (k >= 0) {
      cfg["planning"]["k"] = k;
      cfg["k"] = k;
    }
    std::filesystem::path out(out_dir);

    if (*plan) {
      netsched::run_plan(cfg, out);
    } else if (*learn) {
      if (!learn_mode.empty()) cfg["learning"]["mode"] = learn_mode;
      netsched::run_learn(cfg, out);
    } else if (*simulate) {
      netsched::run_simulate(cfg, out);
    } else if (*threshold) {
      netsched::run_threshold(cfg, out);
    } else if (*linear) {
      netsched::run_linear_plan(cfg, out);
    } else if (*example) {
      std::string id = !example_id.empty()
                           ? example_id
                           : cfg.value("experiment", std::string{});
      if (id == "example1")
        netsched::run_example1(cfg, out);
      else if (id == "example2")
        netsched::run_example2(cfg, out);
      else if (id == "example3")
        netsched::run_example3(cfg, out);
      else
        throw ConfigError("unknown experiment id: '" + id + "'");
    }
    std::cout << "wrote artifacts to " << out_dir << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
