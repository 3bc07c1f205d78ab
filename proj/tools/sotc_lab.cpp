// Command-line front end for signal-control experiment sweeps.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "sotc/sotc.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_sigint(int) { g_stop.store(true); }

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ',';
    out += p;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grid signal-control simulator: runs controller sweeps and writes per-run and summary CSV"};

  std::string config_path;
  std::vector<std::string> controllers, scenarios, q_values, f_values, overrides;
  int runs = -1, duration = -1, warmup = -1;
  std::string seed;
  std::string out_path, summary_path, event_log_path;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  bool full_scale = false, list_controllers = false, check_invariants = false;

  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--controllers", controllers, "SOTL, SOC, SOC_2, SOC_M, SOC_2M")->delimiter(',');
  app.add_option("--scenario,--scenarios", scenarios, "RVD and/or VSN")->delimiter(',');
  app.add_option("--q", q_values, "entry flows, veh/h")->delimiter(',');
  app.add_option("--f", f_values, "slow-vehicle fractions")->delimiter(',');
  app.add_option("--runs", runs, "replications per cell");
  app.add_option("--duration", duration, "simulated seconds per run");
  app.add_option("--warmup", warmup, "seconds excluded from delay statistics");
  app.add_option("--seed", seed, "base seed");
  app.add_option("--out", out_path, "per-run results CSV");
  app.add_option("--summary", summary_path, "per-cell summary CSV");
  app.add_option("--threads", threads, "worker threads");
  app.add_option("--set", overrides, "extra key=value setting (repeatable)");
  app.add_option("--event-log", event_log_path, "NDJSON detection log");
  app.add_flag("--full-scale", full_scale, "100 runs of 10800 s unless given explicitly");
  app.add_flag("--list-controllers", list_controllers, "print controller names and exit");
  app.add_flag("--check-invariants", check_invariants, "verify network invariants every step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (list_controllers) {
    for (auto c : sotc::kAllControllers) std::cout << sotc::to_string(c) << '\n';
    return 0;
  }

  sotc::ExperimentPlan plan;
  try {
    if (out_path.empty()) throw sotc::ConfigError("--out is required");
    if (full_scale) {
      plan.runs_per_cell = 100;
      plan.duration_s = 10800;
    }
    if (!config_path.empty()) sotc::load_config_file(plan, config_path);
    if (!controllers.empty()) sotc::apply_setting(plan, "controllers", join(controllers));
    if (!scenarios.empty()) sotc::apply_setting(plan, "scenarios", join(scenarios));
    if (!q_values.empty()) sotc::apply_setting(plan, "q", join(q_values));
    if (!f_values.empty()) sotc::apply_setting(plan, "f", join(f_values));
    if (runs >= 0) plan.runs_per_cell = runs;
    if (duration >= 0) plan.duration_s = duration;
    if (warmup >= 0) plan.warmup_s = warmup;
    if (!seed.empty()) sotc::apply_setting(plan, "seed", seed);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw sotc::ConfigError("--set expects key=value, got '" + kv + "'");
      sotc::apply_setting(plan, sotc::trim(kv.substr(0, eq)), sotc::trim(kv.substr(eq + 1)));
    }
    if (check_invariants) plan.check_invariants = true;
    plan.validate();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "error: cannot write '" << out_path << "'\n";
    return 1;
  }
  std::ofstream summary;
  if (!summary_path.empty()) {
    summary.open(summary_path);
    if (!summary) {
      std::cerr << "error: cannot write '" << summary_path << "'\n";
      return 1;
    }
  }
  std::ofstream event_log;
  if (!event_log_path.empty()) {
    event_log.open(event_log_path);
    if (!event_log) {
      std::cerr << "error: cannot write '" << event_log_path << "'\n";
      return 1;
    }
  }

  std::signal(SIGINT, on_sigint);

  std::vector<sotc::RunResult> rows;
  std::vector<std::string> logs;
  int rc = 0;
  try {
    rows = sotc::run_plan(plan, threads, &g_stop, event_log_path.empty() ? nullptr : &logs);
  } catch (const sotc::InvariantViolation& e) {
    std::cerr << "invariant violated: " << e.what() << '\n';
    rc = 2;
  }

  sotc::write_results_csv(out, rows);
  const auto cells = sotc::aggregate(rows);
  if (summary.is_open()) sotc::write_summary_csv(summary, cells);
  for (const auto& l : logs) event_log << l;

  for (const auto& c : cells) {
    std::cout << sotc::to_string(c.cell.controller) << ' ' << sotc::to_string(c.cell.scenario)
              << " q=" << sotc::format_number(c.cell.q) << " f=" << sotc::format_number(c.cell.f);
    if (c.stats)
      std::cout << " n=" << c.stats->n << " delay=" << sotc::format_fixed(c.stats->mean) << " s";
    else
      std::cout << " delay=NA";
    std::cout << '\n';
  }
  if (g_stop.load()) std::cerr << "interrupted: wrote " << rows.size() << " completed runs\n";
  return rc;
}
