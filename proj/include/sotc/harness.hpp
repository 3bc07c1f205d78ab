/// @file    harness.hpp
/// @brief   Batch experiment runner: plans, seeded runs, parallel sweeps,
///          aggregation and CSV output.

#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "agents.hpp"
#include "network.hpp"
#include "random.hpp"
#include "sensing.hpp"
#include "statistics.hpp"

namespace sotc {

inline constexpr const char* kResultsHeader =
    "controller,scenario,q,f,run,seed,avg_delay_s,vehicles_entered,vehicles_exited,mean_entry_wait_s,"
    "switch_count";
inline constexpr const char* kSummaryHeader = "controller,scenario,q,f,n_runs,mean_delay_s,sd_delay_s,ci95_half_width_s";

/// Bad configuration (exit code 1).
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

inline Scenario parse_scenario(std::string_view text) {
  std::string key;
  for (char c : text) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (key == "rvd") return Scenario::RVD;
  if (key == "vsn") return Scenario::VSN;
  throw ConfigError("unknown scenario '" + std::string(text) + "'");
}

struct CellSpec {
  ControllerKind controller = ControllerKind::SOC_2M;
  Scenario scenario = Scenario::RVD;
  double q = 0.0;
  double f = 0.0;
};

struct ExperimentPlan {
  std::vector<ControllerKind> controllers{ControllerKind::SOC_2M};
  std::vector<Scenario> scenarios{Scenario::RVD};
  std::vector<double> q_values{540.0};
  std::vector<double> f_values{0.2};
  int runs_per_cell = 30;
  int duration_s = 3600;
  int warmup_s = 600;
  std::uint64_t base_seed = 1;
  NetworkConfig network;
  ControlParams control;
  bool check_invariants = false;

  void validate() const {
    if (runs_per_cell < 1) throw ConfigError("runs must be >= 1");
    if (duration_s < 1) throw ConfigError("duration must be >= 1");
    if (warmup_s < 0) throw ConfigError("warmup must be >= 0");
    if (controllers.empty() || scenarios.empty() || q_values.empty() || f_values.empty())
      throw ConfigError("controllers, scenarios, q and f need at least one value each");
    if (control.vmax.lo() < 0.0) throw ConfigError("vmax interval must be nonnegative");
    for (double q : q_values)
      if (!(q >= 0.0)) throw ConfigError("q values must be >= 0");
    for (double f : f_values)
      if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("f values must lie in [0, 1]");
    try {
      NetworkConfig probe = network;
      probe.duration_s = duration_s;
      probe.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }

  /// Warm-up actually applied: at most one sixth of the run.
  int effective_warmup() const noexcept { return std::min(warmup_s, duration_s / 6); }

  /// Sweep cells in (controller, scenario, q, f) order. SOTL has no VSN cells.
  std::vector<CellSpec> cells() const {
    std::vector<CellSpec> out;
    for (auto c : controllers)
      for (auto s : scenarios) {
        if (c == ControllerKind::SOTL && s == Scenario::VSN) continue;
        for (double q : q_values)
          for (double f : f_values) out.push_back({c, s, q, f});
      }
    return out;
  }
};

struct RunResult {
  ControllerKind controller = ControllerKind::SOC_2M;
  Scenario scenario = Scenario::RVD;
  double q = 0.0;
  double f = 0.0;
  int run_index = 0;
  std::uint64_t seed = 0;
  std::optional<double> avg_delay_s;  ///< empty when no measured vehicle exited
  long vehicles_entered = 0;
  long vehicles_exited = 0;
  double mean_entry_wait_s = 0.0;
  long switch_count = 0;

  // diagnostics, not written to CSV
  long forced_service_violations = 0;
  long decision_instants = 0;
  long forced_switches = 0;
};

inline std::uint64_t run_seed(std::uint64_t base_seed, const CellSpec& cell, int run_index) {
  return hash_words({base_seed, static_cast<std::uint64_t>(cell.controller),
                     static_cast<std::uint64_t>(cell.scenario), std::bit_cast<std::uint64_t>(cell.q),
                     std::bit_cast<std::uint64_t>(cell.f), static_cast<std::uint64_t>(run_index)});
}

/// Optional per-step observation points of a run.
struct RunHooks {
  std::function<void(const Network&)> after_step;
  std::ostream* event_log = nullptr;
};

/// Builds and simulates one replication: each second the network steps,
/// arrivals are generated, detectors report and every agent decides.
inline RunResult run_cell(const ExperimentPlan& plan, const CellSpec& cell, int run_index,
                          const RunHooks& hooks = {}) {
  NetworkConfig cfg = plan.network;
  cfg.q = cell.q;
  cfg.f = cell.f;
  cfg.duration_s = plan.duration_s;
  cfg.tau_s = plan.control.tau_s;
  cfg.t_crit_s = plan.control.t_crit_s;
  cfg.seed = run_seed(plan.base_seed, cell, run_index);

  RunResult r;
  r.controller = cell.controller;
  r.scenario = cell.scenario;
  r.q = cell.q;
  r.f = cell.f;
  r.run_index = run_index;
  r.seed = cfg.seed;

  Network net(cfg);
  RunRng rng(cfg.seed);
  std::vector<Agent> agents;
  agents.reserve(static_cast<std::size_t>(net.intersection_count()));
  for (int i = 0; i < net.intersection_count(); ++i)
    agents.emplace_back(cell.controller, i, net, plan.control, cell.scenario);

  const bool soc_family = is_soc_family(cell.controller);
  for (int t = 0; t < plan.duration_s; ++t) {
    net.step(rng);
    net.spawn(rng);
    if (plan.check_invariants) net.check_invariants();
    if (hooks.after_step) hooks.after_step(net);
    const auto detections = observe(net, cell.scenario);
    if (hooks.event_log) write_event_log(*hooks.event_log, detections);
    for (auto& agent : agents) {
      agent.observe(net, detections);
      const Decision d = agent.decide(net);
      const auto& sig = net.signal(agent.intersection());
      if (soc_family && sig.phase == Phase::Green) {
        ++r.decision_instants;
        for (int ai = 0; ai < kActionCount; ++ai) {
          const auto a = static_cast<Action>(ai);
          const auto& g = agent.last_green_upper()[static_cast<std::size_t>(ai)];
          if (a == sig.action || !g) continue;
          const double window = sig.red_elapsed_s[static_cast<std::size_t>(ai)] + plan.control.tau_s + *g;
          if (window > plan.control.t_crit_s + 1.0 && !(d.is_switch() && d.target == a))
            ++r.forced_service_violations;
        }
      }
      if (d.is_switch()) {
        if (d.forced) ++r.forced_switches;
        net.switch_to(agent.intersection(), d.target);
      }
    }
  }

  const auto s = net.delay_summary(plan.effective_warmup());
  r.vehicles_entered = s.entered;
  r.vehicles_exited = s.exited;
  if (s.exited > 0) r.avg_delay_s = s.mean_delay_s;
  r.mean_entry_wait_s = s.mean_entry_wait_s;
  r.switch_count = net.switch_count();
  return r;
}

struct Job {
  std::size_t cell = 0;
  int run = 0;
};

/// Runs every (cell, replication) pair on `threads` workers. Results come
/// back in plan order regardless of scheduling. When `stop` becomes true no
/// new run is started and only finished runs are returned.
inline std::vector<RunResult> run_plan(const ExperimentPlan& plan, unsigned threads = 1,
                                       const std::atomic<bool>* stop = nullptr,
                                       std::vector<std::string>* event_logs = nullptr) {
  plan.validate();
  const auto cells = plan.cells();
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (int k = 0; k < plan.runs_per_cell; ++k) jobs.push_back({c, k});

  std::vector<std::optional<RunResult>> slots(jobs.size());
  std::vector<std::string> logs(event_logs ? jobs.size() : 0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      if (stop && stop->load()) return;
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        RunHooks hooks;
        std::ostringstream log;
        if (event_logs) hooks.event_log = &log;
        slots[j] = run_cell(plan, cells[jobs[j].cell], jobs[j].run, hooks);
        if (event_logs) logs[j] = log.str();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  threads = std::max(1u, threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<RunResult> out;
  for (std::size_t j = 0; j < slots.size(); ++j) {
    if (!slots[j]) continue;
    out.push_back(*slots[j]);
    if (event_logs) event_logs->push_back(std::move(logs[j]));
  }
  return out;
}

// --- CSV ----------------------------------------------------------------------

inline std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

inline std::string format_fixed(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

inline constexpr const char* kMissing = "NA";

inline std::string csv_row(const RunResult& r) {
  std::ostringstream os;
  os << to_string(r.controller) << ',' << to_string(r.scenario) << ',' << format_number(r.q) << ','
     << format_number(r.f) << ',' << r.run_index << ',' << r.seed << ','
     << (r.avg_delay_s ? format_fixed(*r.avg_delay_s) : kMissing) << ',' << r.vehicles_entered << ','
     << r.vehicles_exited << ',' << format_fixed(r.mean_entry_wait_s) << ',' << r.switch_count;
  return os.str();
}

inline void write_results_csv(std::ostream& os, const std::vector<RunResult>& rows) {
  os << kResultsHeader << '\n';
  for (const auto& r : rows) os << csv_row(r) << '\n';
}

struct CellSummary {
  CellSpec cell;
  std::optional<Summary> stats;  ///< empty when no run produced a delay
};

/// Groups rows by cell (in first-appearance order) and summarizes the
/// average delay over replications.
inline std::vector<CellSummary> aggregate(const std::vector<RunResult>& rows) {
  std::vector<CellSummary> out;
  std::vector<std::vector<double>> values;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const CellSummary& s) {
      return s.cell.controller == r.controller && s.cell.scenario == r.scenario && s.cell.q == r.q &&
             s.cell.f == r.f;
    });
    std::size_t idx;
    if (it == out.end()) {
      out.push_back({{r.controller, r.scenario, r.q, r.f}, std::nullopt});
      values.emplace_back();
      idx = out.size() - 1;
    } else {
      idx = static_cast<std::size_t>(it - out.begin());
    }
    if (r.avg_delay_s) values[idx].push_back(*r.avg_delay_s);
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!values[i].empty()) out[i].stats = summarize(values[i]);
  return out;
}

inline std::string summary_row(const CellSummary& s) {
  std::ostringstream os;
  os << to_string(s.cell.controller) << ',' << to_string(s.cell.scenario) << ',' << format_number(s.cell.q)
     << ',' << format_number(s.cell.f) << ',';
  if (!s.stats) {
    os << "0," << kMissing << ',' << kMissing << ',' << kMissing;
  } else {
    const auto& st = *s.stats;
    os << st.n << ',' << format_fixed(st.mean) << ',' << format_fixed(st.sd) << ','
       << (std::isnan(st.ci95_half) ? std::string(kMissing) : format_fixed(st.ci95_half));
  }
  return os.str();
}

inline void write_summary_csv(std::ostream& os, const std::vector<CellSummary>& cells) {
  os << kSummaryHeader << '\n';
  for (const auto& s : cells) os << summary_row(s) << '\n';
}

// --- configuration --------------------------------------------------------------

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is{std::string(s)};
  while (std::getline(is, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

/// Flat `key = value` text; '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    out.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return out;
}

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "': expected a number, got '" + v + "'");
  }
}

inline int to_int(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != std::floor(x)) throw ConfigError("'" + key + "': expected an integer, got '" + v + "'");
  return static_cast<int>(x);
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "': expected a boolean, got '" + v + "'");
}

}  // namespace detail

/// Applies one setting. Throws ConfigError for unknown keys or bad values.
inline void apply_setting(ExperimentPlan& plan, const std::string& key, const std::string& value) {
  using detail::to_bool;
  using detail::to_double;
  using detail::to_int;
  auto& net = plan.network;
  auto& ctl = plan.control;
  if (key == "controllers") {
    plan.controllers.clear();
    for (const auto& s : split_list(value)) {
      try {
        plan.controllers.push_back(parse_controller(s));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
  } else if (key == "scenarios" || key == "scenario") {
    plan.scenarios.clear();
    for (const auto& s : split_list(value)) plan.scenarios.push_back(parse_scenario(s));
  } else if (key == "q") {
    plan.q_values.clear();
    for (const auto& s : split_list(value)) plan.q_values.push_back(to_double(key, s));
  } else if (key == "f") {
    plan.f_values.clear();
    for (const auto& s : split_list(value)) plan.f_values.push_back(to_double(key, s));
  } else if (key == "runs") {
    plan.runs_per_cell = to_int(key, value);
  } else if (key == "duration_s" || key == "duration") {
    plan.duration_s = to_int(key, value);
  } else if (key == "warmup_s" || key == "warmup") {
    plan.warmup_s = to_int(key, value);
  } else if (key == "seed") {
    try {
      plan.base_seed = std::stoull(value);
    } catch (const std::exception&) {
      throw ConfigError("'seed': expected an unsigned integer, got '" + value + "'");
    }
  } else if (key == "grid_size") {
    net.grid_size = to_int(key, value);
  } else if (key == "link_cells") {
    net.link_cells = to_int(key, value);
  } else if (key == "cell_length_m") {
    net.cell_length_m = to_double(key, value);
  } else if (key == "vmax") {
    net.vmax = to_int(key, value);
  } else if (key == "p_fast") {
    net.p_fast = to_double(key, value);
  } else if (key == "p_slow") {
    net.p_slow = to_double(key, value);
  } else if (key == "tau_s") {
    ctl.tau_s = net.tau_s = to_int(key, value);
  } else if (key == "t_crit_s") {
    ctl.t_crit_s = net.t_crit_s = to_int(key, value);
  } else if (key == "theta") {
    ctl.theta = to_int(key, value);
  } else if (key == "phi_min_s") {
    ctl.phi_min_s = to_int(key, value);
  } else if (key == "mu") {
    ctl.mu = to_int(key, value);
  } else if (key == "sotl_far_cells") {
    ctl.sotl_far_cells = to_int(key, value);
  } else if (key == "sotl_near_cells") {
    ctl.sotl_near_cells = to_int(key, value);
  } else if (key == "v_free") {
    ctl.v_free = to_double(key, value);
  } else if (key == "saturation_flow") {
    ctl.saturation_flow = to_double(key, value);
  } else if (key == "delta_w_factor") {
    ctl.delta_w_factor = to_double(key, value);
  } else if (key == "vmax_lo" || key == "vmax_hi") {
    const double x = to_double(key, value);
    const double lo = key == "vmax_lo" ? x : ctl.vmax.lo();
    const double hi = key == "vmax_hi" ? x : ctl.vmax.hi();
    if (lo > hi) throw ConfigError("vmax_lo must not exceed vmax_hi");
    ctl.vmax = Interval(lo, hi);
  } else if (key == "h_green_s") {
    ctl.h_green_s = to_int(key, value);
  } else if (key == "horizon_mode") {
    try {
      ctl.horizon = parse_horizon_mode(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "max_green_s") {
    ctl.max_green_s = to_int(key, value);
  } else if (key == "min_keep_s") {
    ctl.min_keep_s = to_int(key, value);
  } else if (key == "check_invariants") {
    plan.check_invariants = to_bool(key, value);
  } else {
    throw ConfigError("unknown setting '" + key + "'");
  }
}

inline void load_config_file(ExperimentPlan& plan, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  for (const auto& [k, v] : parse_key_values(in)) apply_setting(plan, k, v);
}

}  // namespace sotc
