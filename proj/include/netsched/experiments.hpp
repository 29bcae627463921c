#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace netsched {

// Built-in defaults for the three shipped experiments; run_* merge user
// overrides on top of these.
nlohmann::json default_example_config(const std::string& id);

// Battery sensor: single node on an integer ladder with saturation,
// hold-last-data estimator, weighted absolute error plus transmission fee.
void run_example1(const nlohmann::json& cfg, const std::filesystem::path& out);

// Complete vs star graph: elapsed-time planning grids over (n, y) and
// (sigma_w, y), threshold/monotonicity report, simulation cross-check.
void run_example2(const nlohmann::json& cfg, const std::filesystem::path& out);

// Two-candidate polling: M(50) kernel, MAP estimator, relative-entropy cost.
void run_example3(const nlohmann::json& cfg, const std::filesystem::path& out);

// Generic subcommand entry points used by the CLI.
void run_plan(const nlohmann::json& cfg, const std::filesystem::path& out);
void run_learn(const nlohmann::json& cfg, const std::filesystem::path& out);
void run_simulate(const nlohmann::json& cfg, const std::filesystem::path& out);
void run_threshold(const nlohmann::json& cfg, const std::filesystem::path& out);
void run_linear_plan(const nlohmann::json& cfg,
                     const std::filesystem::path& out);

}  // namespace netsched
