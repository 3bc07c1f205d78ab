/// @file    agents.hpp
/// @brief   Per-intersection signal control agents.
///
/// @details Five decision algorithms share one agent shell:
///
///          | kind    | traffic model         | cost                  | selection       |
///          |---------|-----------------------|-----------------------|-----------------|
///          | SOTL    | band vehicle counts   | none                  | threshold rules |
///          | SOC     | point, constant speed | N(τ+G)+Δw             | minimum         |
///          | SOC_2   | interval microscopic  | simulated stops       | minimum center  |
///          | SOC_M   | interval microscopic  | N(τ+G)+Δw (interval)  | interval order  |
///          | SOC_2M  | interval microscopic  | simulated stops       | interval order  |
///
///          The SOC family runs the general decision loop: nothing is decided
///          during setup; an action whose predicted service window
///          T = r + τ + G reaches the critical window is executed at once;
///          otherwise the controller-specific selection decides.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "interval.hpp"
#include "interval_model.hpp"
#include "network.hpp"
#include "selection.hpp"
#include "sensing.hpp"

namespace sotc {

enum class ControllerKind : std::uint8_t { SOTL, SOC, SOC_2, SOC_M, SOC_2M };

inline constexpr std::array<ControllerKind, 5> kAllControllers{
    ControllerKind::SOTL, ControllerKind::SOC, ControllerKind::SOC_2, ControllerKind::SOC_M,
    ControllerKind::SOC_2M};

inline const char* to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::SOTL: return "SOTL";
    case ControllerKind::SOC: return "SOC";
    case ControllerKind::SOC_2: return "SOC_2";
    case ControllerKind::SOC_M: return "SOC_M";
    case ControllerKind::SOC_2M: return "SOC_2M";
  }
  return "?";
}

/// Case-insensitive; accepts "soc_2m", "SOC-2M", "soc2m".
inline ControllerKind parse_controller(std::string_view text) {
  std::string key;
  for (char c : text) {
    if (c == '_' || c == '-') continue;
    key.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  for (auto k : kAllControllers) {
    std::string name;
    for (const char* p = to_string(k); *p; ++p)
      if (*p != '_') name.push_back(*p);
    if (name == key) return k;
  }
  throw std::invalid_argument("unknown controller '" + std::string(text) + "'");
}

inline bool is_soc_family(ControllerKind k) noexcept { return k != ControllerKind::SOTL; }
inline bool uses_interval_model(ControllerKind k) noexcept {
  return k == ControllerKind::SOC_2 || k == ControllerKind::SOC_M || k == ControllerKind::SOC_2M;
}

/// How the prediction horizon of a lane is chosen when evaluating an action.
///  - PerLane: h_green for lanes green now, h_green + tau for lanes red now.
///  - PerAction: tau_a + h_green for every lane, where tau_a is 0 for the
///    current action.
///  - Common: h_green + tau for every lane and every action.
enum class HorizonMode : std::uint8_t { PerLane, PerAction, Common };

inline std::string_view to_string(HorizonMode m) noexcept {
  switch (m) {
    case HorizonMode::PerLane: return "per_lane";
    case HorizonMode::PerAction: return "per_action";
    case HorizonMode::Common: return "common";
  }
  return "?";
}

inline HorizonMode parse_horizon_mode(std::string_view s) {
  if (s == "per_lane") return HorizonMode::PerLane;
  if (s == "per_action") return HorizonMode::PerAction;
  if (s == "common") return HorizonMode::Common;
  throw std::invalid_argument("unknown horizon mode '" + std::string(s) + "'");
}

struct ControlParams {
  int tau_s = 5;
  int t_crit_s = 120;

  // SOTL
  int theta = 50;
  int phi_min_s = 5;
  int mu = 3;
  int sotl_far_cells = 11;   ///< 80 m at 7.5 m per cell
  int sotl_near_cells = 3;   ///< 25 m at 7.5 m per cell

  // SOC point model
  double v_free = 1.5;            ///< cells/s
  double saturation_flow = 0.5;   ///< veh/s
  double delta_w_factor = 1.0;    ///< Δw = factor · n_current · τ

  // interval model
  Interval vmax{1.0, 2.0};
  int h_green_s = 5;     ///< minimum-green prediction horizon
  HorizonMode horizon = HorizonMode::Common;
  int max_green_s = 60;  ///< cap of the predicted green time
  int min_keep_s = 1;    ///< continuing the current action lasts at least one decision step
};

struct Decision {
  enum class Kind : std::uint8_t { Keep, Switch };
  Kind kind = Kind::Keep;
  Action target = Action::NS;
  bool forced = false;  ///< issued by the critical-window rule

  static Decision keep(Action current) { return {Kind::Keep, current, false}; }
  static Decision switch_to(Action a, bool forced = false) { return {Kind::Switch, a, forced}; }
  bool is_switch() const noexcept { return kind == Kind::Switch; }
};

/// Constant-speed vehicle tracking used by SOC: every modelled vehicle moves
/// at the free-flow speed until it joins the queue at the stop line.
class PointApproachModel {
public:
  PointApproachModel() = default;
  PointApproachModel(std::size_t lanes, int stop_cell, double v_free)
      : lanes_(lanes), stop_cell_(stop_cell), v_free_(v_free) {}

  /// Positions of lane `k`, front first.
  const std::vector<double>& lane(std::size_t k) const { return lanes_.at(k); }

  void advance() {
    for (auto& lane : lanes_) {
      double limit = stop_cell_ - 1;
      for (auto& x : lane) {
        x = std::min(x + v_free_, limit);
        limit = x - 1.0;
      }
    }
  }

  void insert_rear(std::size_t k, double cell) {
    auto& lane = lanes_.at(k);
    lane.push_back(cell);
    // the detection proves the vehicles ahead have moved on
    for (std::size_t i = lane.size(); i-- > 1;) lane[i - 1] = std::max(lane[i - 1], lane[i] + 1.0);
  }

  bool remove_front(std::size_t k) {
    auto& lane = lanes_.at(k);
    if (lane.empty()) return false;
    lane.erase(lane.begin());
    return true;
  }

  void set_positions(std::size_t k, std::vector<double> front_first) { lanes_.at(k) = std::move(front_first); }

  /// Vehicles forming a packed block that ends in the last cell.
  int queued(std::size_t k) const {
    const auto& lane = lanes_.at(k);
    int n = 0;
    for (std::size_t j = 0; j < lane.size(); ++j) {
      if (lane[j] < stop_cell_ - 1.0 - static_cast<double>(j) - 0.5) break;
      ++n;
    }
    return n;
  }

  /// Distance in cells from the rearmost moving vehicle to the stop line.
  std::optional<double> furthest_distance(std::size_t k) const {
    const auto& lane = lanes_.at(k);
    if (static_cast<int>(lane.size()) <= queued(k)) return std::nullopt;
    return stop_cell_ - lane.back();
  }

  /// Vehicles on lane `k` that queue or reach the stop line within `horizon_s`.
  int arriving_within(std::size_t k, double horizon_s) const {
    const auto& lane = lanes_.at(k);
    const int q = queued(k);
    int n = q;
    for (std::size_t j = static_cast<std::size_t>(q); j < lane.size(); ++j) {
      if ((stop_cell_ - 1.0 - static_cast<double>(j) - lane[j]) / v_free_ <= horizon_s) ++n;
    }
    return n;
  }

  std::size_t count(std::size_t k) const { return lanes_.at(k).size(); }

private:
  std::vector<std::vector<double>> lanes_;
  int stop_cell_ = 40;
  double v_free_ = 1.5;
};

class Agent {
public:
  /// Approach order follows Network::approaches(): E, W, S, N travel directions.
  Agent(ControllerKind kind, int intersection, const Network& net, ControlParams params, Scenario scenario)
      : kind_(kind), intersection_(intersection), params_(params), scenario_(scenario) {
    const auto app = net.approaches(intersection);
    links_.assign(app.begin(), app.end());
    for (std::size_t k = 0; k < links_.size(); ++k) serves_[k] = served_by(net.link(links_[k]).dir);
    const int stop = net.config().link_cells;
    if (uses_interval_model(kind_)) {
      imodel_ = ApproachModel(links_, stop, params_.vmax);
      imodel_.set_vsn_mode(scenario_ == Scenario::VSN);
    }
    if (kind_ == ControllerKind::SOC) pmodel_ = PointApproachModel(links_.size(), stop, params_.v_free);
  }

  ControllerKind kind() const noexcept { return kind_; }
  int intersection() const noexcept { return intersection_; }
  const ApproachModel& interval_model() const noexcept { return imodel_; }
  const PointApproachModel& point_model() const noexcept { return pmodel_; }
  const std::array<int, 4>& sotl_counters() const noexcept { return kappa_; }

  /// Upper end of the green time predicted for each action at the last
  /// decision instant; empty when no prediction was made.
  const std::array<std::optional<double>, kActionCount>& last_green_upper() const noexcept {
    return last_green_upper_;
  }

  /// Real-time part of the loop: merge the detections of the second that
  /// has just been simulated.
  void observe(const Network& net, std::span<const Detection> detections) {
    auto green_link = [&](int link_id) {
      const auto& l = net.link(link_id);
      const auto d = net.displayed(l.to);
      return d && *d == served_by(l.dir);
    };
    if (uses_interval_model(kind_)) {
      imodel_.sync(detections, [&](int l) { return net.route(l); }, green_link);
    } else if (kind_ == ControllerKind::SOC) {
      sync_point_model(net, detections);
    } else {
      const auto& sig = net.signal(intersection_);
      for (std::size_t k = 0; k < links_.size(); ++k) {
        if (sig.is_green(serves_[k])) {
          kappa_[k] = 0;
        } else {
          kappa_[k] += net.count_near_stop(links_[k], params_.sotl_far_cells);
        }
      }
    }
  }

  /// Decision for the coming second.
  Decision decide(const Network& net) {
    last_green_upper_ = {};
    const auto& sig = net.signal(intersection_);
    if (sig.phase == Phase::Setup) return Decision::keep(sig.action);
    if (kind_ == ControllerKind::SOTL) return decide_sotl(net, sig);
    return decide_soc_family(sig);
  }

  // --- building blocks exposed for tests ------------------------------------

  /// Lane indices served by `a`.
  std::vector<std::size_t> lanes_of(Action a) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < links_.size(); ++k)
      if (serves_[k] == a) out.push_back(k);
    return out;
  }

  /// Signal plans of all approach lanes if action `a` is chosen now while
  /// `current` holds green.
  std::vector<SignalPlan> plans_for(Action a, Action current) const {
    std::vector<SignalPlan> plans;
    const int h_red = params_.h_green_s + params_.tau_s;
    int h_green = params_.h_green_s;
    if (params_.horizon == HorizonMode::Common) h_green = h_red;
    for (std::size_t k = 0; k < links_.size(); ++k) {
      const bool green_now = serves_[k] == current;
      if (params_.horizon == HorizonMode::PerAction) {
        const int h = a == current ? params_.h_green_s : h_red;
        if (a == current) {
          plans.push_back(constant_plan(green_now, h));
        } else {
          plans.push_back(serves_[k] == a ? red_then_green(params_.tau_s, h) : constant_plan(false, h));
        }
        continue;
      }
      if (a == current) {
        plans.push_back(green_now ? constant_plan(true, h_green) : constant_plan(false, h_red));
      } else if (green_now) {
        plans.push_back(constant_plan(false, params_.horizon == HorizonMode::Common ? h_red : h_green));
      } else {
        plans.push_back(serves_[k] == a ? red_then_green(params_.tau_s, h_red) : constant_plan(false, h_red));
      }
    }
    return plans;
  }

  Interval interval_cost(Action a, Action current) const {
    const auto plans = plans_for(a, current);
    return predict_cost(imodel_.lanes(), plans);
  }

  Interval interval_green_time(Action a, Action current) const {
    return predict_green_time(lanes_subset(lanes_of(a)), a == current ? 0 : params_.tau_s, params_.max_green_s);
  }

private:
  std::vector<ILane> lanes_subset(const std::vector<std::size_t>& ks) const {
    std::vector<ILane> out;
    out.reserve(ks.size());
    for (auto k : ks) out.push_back(imodel_.lane(k));
    return out;
  }

  void sync_point_model(const Network& net, std::span<const Detection> detections) {
    pmodel_.advance();
    if (scenario_ == Scenario::VSN) {
      std::array<std::vector<double>, 4> pos;
      for (const auto& d : detections) {
        if (d.kind != DetectionKind::VsnPosition) continue;
        for (std::size_t k = 0; k < links_.size(); ++k)
          if (links_[k] == d.link) pos[k].push_back(d.cell);
      }
      for (std::size_t k = 0; k < links_.size(); ++k) {
        std::sort(pos[k].begin(), pos[k].end(), std::greater<>());
        pmodel_.set_positions(k, std::move(pos[k]));
      }
      return;
    }
    auto index = [&](int link_id) -> std::optional<std::size_t> {
      for (std::size_t k = 0; k < links_.size(); ++k)
        if (links_[k] == link_id) return k;
      return std::nullopt;
    };
    for (const auto& d : detections) {
      if (d.kind == DetectionKind::Entry) {
        if (auto k = index(d.link)) pmodel_.insert_rear(*k, d.cell);
      } else if (d.kind == DetectionKind::StoplineCross) {
        if (auto k = index(d.link)) pmodel_.remove_front(*k);
        if (auto down = net.route(d.link))
          if (auto k = index(*down)) pmodel_.insert_rear(*k, 0.0);
      }
    }
  }

  Decision decide_sotl(const Network& net, const IntersectionState& sig) const {
    const Action current = sig.action;
    int kappa_max = 0;
    int near_green = 0;
    for (std::size_t k = 0; k < links_.size(); ++k) {
      if (serves_[k] == current) {
        near_green += net.count_near_stop(links_[k], params_.sotl_near_cells);
      } else {
        kappa_max = std::max(kappa_max, kappa_[k]);
      }
    }
    const bool platoon = near_green >= 1 && near_green <= params_.mu;
    if (kappa_max >= params_.theta && sig.green_elapsed_s >= params_.phi_min_s && !platoon)
      return Decision::switch_to(other(current));
    return Decision::keep(current);
  }

  Decision decide_soc_family(const IntersectionState& sig) {
    const Action current = sig.action;
    std::array<Interval, kActionCount> green{};
    for (int ai = 0; ai < kActionCount; ++ai) {
      const auto a = static_cast<Action>(ai);
      green[static_cast<std::size_t>(ai)] =
          kind_ == ControllerKind::SOC ? Interval::point(point_green_time(a)) : interval_green_time(a, current);
      last_green_upper_[static_cast<std::size_t>(ai)] = green[static_cast<std::size_t>(ai)].hi();
    }
    for (int ai = 0; ai < kActionCount; ++ai) {
      const auto a = static_cast<Action>(ai);
      if (a == current) continue;
      const double window = sig.red_elapsed_s[static_cast<std::size_t>(ai)] + params_.tau_s +
                            green[static_cast<std::size_t>(ai)].hi();
      if (window >= params_.t_crit_s) return Decision::switch_to(a, true);
    }

    const auto cur = static_cast<std::size_t>(index_of(current));
    std::size_t chosen = cur;
    switch (kind_) {
      case ControllerKind::SOC: {
        std::array<double, kActionCount> costs{};
        for (int ai = 0; ai < kActionCount; ++ai)
          costs[static_cast<std::size_t>(ai)] = point_cost(static_cast<Action>(ai), current, green);
        chosen = select_min(costs, cur);
        break;
      }
      case ControllerKind::SOC_2:
      case ControllerKind::SOC_2M: {
        std::array<Interval, kActionCount> costs{};
        for (int ai = 0; ai < kActionCount; ++ai)
          costs[static_cast<std::size_t>(ai)] = interval_cost(static_cast<Action>(ai), current);
        chosen = kind_ == ControllerKind::SOC_2 ? select_by_center(costs, cur) : select_interval(costs, cur);
        break;
      }
      case ControllerKind::SOC_M: {
        std::array<Interval, kActionCount> costs{};
        for (int ai = 0; ai < kActionCount; ++ai)
          costs[static_cast<std::size_t>(ai)] = interval_socm_cost(static_cast<Action>(ai), current, green);
        chosen = select_interval(costs, cur);
        break;
      }
      case ControllerKind::SOTL: break;
    }
    if (chosen == cur) return Decision::keep(current);
    return Decision::switch_to(static_cast<Action>(chosen));
  }

  double point_green_time(Action a) const {
    double g = 0.0;
    for (auto k : lanes_of(a)) {
      g = std::max(g, soc_green_time(pmodel_.queued(k), pmodel_.furthest_distance(k), params_.v_free,
                                     params_.saturation_flow));
    }
    return g;
  }

  double switch_back_penalty(Action a, Action current, std::size_t n_current) const {
    if (a == current) return 0.0;
    return params_.delta_w_factor * static_cast<double>(n_current) * params_.tau_s;
  }

  double point_cost(Action a, Action current, const std::array<Interval, kActionCount>& green) const {
    const double setup = a == current ? 0.0 : params_.tau_s;
    double g = green[static_cast<std::size_t>(index_of(a))].hi();
    if (a == current) g = std::max(g, static_cast<double>(params_.min_keep_s));
    int waiting = 0;
    for (auto k : lanes_of(other(a))) waiting += pmodel_.arriving_within(k, setup + g);
    std::size_t n_current = 0;
    for (auto k : lanes_of(current)) n_current += pmodel_.count(k);
    return soc_cost(waiting, setup, g, switch_back_penalty(a, current, n_current));
  }

  Interval interval_socm_cost(Action a, Action current, const std::array<Interval, kActionCount>& green) const {
    const int setup = a == current ? 0 : params_.tau_s;
    Interval g = green[static_cast<std::size_t>(index_of(a))];
    if (a == current) {
      const double floor = params_.min_keep_s;
      g = Interval(std::max(g.lo(), floor), std::max(g.hi(), floor));
    }
    const int horizon = std::max(0, setup + static_cast<int>(std::ceil(g.hi())) - 1);
    const Interval waiting = predict_waiting_count(lanes_subset(lanes_of(other(a))), horizon);
    const auto n_current = imodel_.count(lanes_of(current));
    return socm_cost(waiting, setup, g, switch_back_penalty(a, current, n_current));
  }

  ControllerKind kind_;
  int intersection_;
  ControlParams params_;
  Scenario scenario_;
  std::vector<int> links_;
  std::array<Action, 4> serves_{};
  ApproachModel imodel_;
  PointApproachModel pmodel_;
  std::array<int, 4> kappa_{0, 0, 0, 0};
  std::array<std::optional<double>, kActionCount> last_green_upper_{};
};

}  // namespace sotc
