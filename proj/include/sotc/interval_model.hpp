/// @file    interval_model.hpp
/// @brief   Interval microscopic model of intersection approaches and the
///          simulation-based delay predictions built on it.
///
/// @details Each vehicle carries a position interval [x_lo, x_hi] and a
///          velocity pair (v_lo, v_hi). The two endpoints evolve as two
///          independent deterministic cellular automata sharing one rule
///
///              v(t)   = min(v(t-1) + 1, g(t), vmax_e)
///              x(t+1) = x(t) + v(t)
///
///          where g is the count of empty cells ahead in the same endpoint
///          configuration and vmax_e is the lower or upper end of the
///          maximum-velocity interval. v_lo <= v_hi is not required.
///
///          Lane geometry: `stop_cell` is the index of the stop line.
///          Vehicles occupy cells 0 .. stop_cell-1 and may pass stop_cell
///          only under green; a position >= stop_cell means the vehicle has
///          left the approach. For a network link of L cells the stop line is
///          at index L, so the last cell L-1 is occupiable under red.
///
///          Prediction horizons: a plan for horizon H holds one signal state
///          per evaluated time step t = 0 .. H (H + 1 entries). Stopped
///          endpoints are counted at each of these steps.

#pragma once

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "interval.hpp"
#include "network.hpp"
#include "sensing.hpp"

namespace sotc {

enum class Endpoint : std::uint8_t { Lo, Hi };

struct IVehicle {
  int x_lo = 0;
  int x_hi = 0;
  int v_lo = 0;
  int v_hi = 0;
  int ref = -1;  ///< sensor identity when known (VSN)

  template <Endpoint E>
  int& x() noexcept {
    if constexpr (E == Endpoint::Lo) return x_lo; else return x_hi;
  }
  template <Endpoint E>
  int& v() noexcept {
    if constexpr (E == Endpoint::Lo) return v_lo; else return v_hi;
  }
  template <Endpoint E>
  int x() const noexcept {
    if constexpr (E == Endpoint::Lo) return x_lo; else return x_hi;
  }

  Interval position() const { return {static_cast<double>(x_lo), static_cast<double>(x_hi)}; }
};

/// Signal state per evaluated time step.
using SignalPlan = std::vector<bool>;

inline SignalPlan constant_plan(bool green, int horizon) {
  return SignalPlan(static_cast<std::size_t>(std::max(horizon, 0) + 1), green);
}

/// Red for `red_steps` steps, then green until the end of the horizon.
inline SignalPlan red_then_green(int red_steps, int horizon) {
  SignalPlan plan(static_cast<std::size_t>(std::max(horizon, 0) + 1), true);
  for (int t = 0; t < red_steps && t <= horizon; ++t) plan[static_cast<std::size_t>(t)] = false;
  return plan;
}

struct ILane {
  int stop_cell = 40;
  Interval vmax{1.0, 2.0};
  std::vector<IVehicle> vehicles;  ///< front (closest to the stop line) first

  template <Endpoint E>
  int vmax_of() const noexcept {
    return static_cast<int>(std::lround(E == Endpoint::Lo ? vmax.lo() : vmax.hi()));
  }

  template <Endpoint E>
  bool crossed(const IVehicle& veh) const noexcept {
    return veh.x<E>() >= stop_cell;
  }

  std::size_t size() const noexcept { return vehicles.size(); }
  bool empty() const noexcept { return vehicles.empty(); }
};

/// How the front vehicle of a lane treats the stop line during one step.
enum class StopLine : std::uint8_t {
  Open,    ///< green: the front vehicle may pass
  Closed,  ///< red or setup: the front vehicle stops in the last cell
  Held,    ///< green, but position is held before the stop line until a crossing is detected
};

/// One step of the interval automaton for one endpoint configuration.
/// Returns the number of vehicles on the approach whose endpoint velocity is 0.
template <Endpoint E>
int update_endpoint(ILane& lane, StopLine stop) {
  constexpr int kUnbounded = INT_MAX / 4;
  const int vmax = lane.vmax_of<E>();
  int leader_old = -1;  // old position of the nearest uncrossed leader, -1 if none
  int stopped = 0;
  for (auto& veh : lane.vehicles) {
    int& x = veh.x<E>();
    int& v = veh.v<E>();
    const int old = x;
    if (old >= lane.stop_cell) continue;
    int gap;
    if (leader_old >= 0) {
      gap = leader_old - old - 1;
    } else if (stop == StopLine::Closed) {
      gap = lane.stop_cell - 1 - old;
    } else {
      gap = kUnbounded;
    }
    v = std::max(0, std::min({v + 1, gap, vmax}));
    x = old + v;
    if (stop == StopLine::Held) x = std::min(x, lane.stop_cell - 1);
    if (v == 0) ++stopped;
    leader_old = old;
  }
  return stopped;
}

struct StepStops {
  int lo = 0;
  int hi = 0;
};

/// Advances both endpoint configurations one step and restores x_lo <= x_hi.
inline StepStops step_lane(ILane& lane, StopLine stop) {
  StepStops s{update_endpoint<Endpoint::Lo>(lane, stop), update_endpoint<Endpoint::Hi>(lane, stop)};
  for (auto& veh : lane.vehicles) veh.x_hi = std::max(veh.x_hi, veh.x_lo);
  return s;
}

inline StopLine stop_line_for(bool green) { return green ? StopLine::Open : StopLine::Closed; }

/// Interval of total stopped vehicle-steps over all lanes, each lane
/// simulated under its own signal plan.
inline Interval predict_cost(std::span<const ILane> lanes, std::span<const SignalPlan> plans) {
  if (lanes.size() != plans.size()) throw std::invalid_argument("predict_cost: one plan per lane required");
  long s_lo = 0;
  long s_hi = 0;
  for (std::size_t k = 0; k < lanes.size(); ++k) {
    ILane lane = lanes[k];
    for (const bool green : plans[k]) {
      const auto s = step_lane(lane, stop_line_for(green));
      s_lo += s.lo;
      s_hi += s.hi;
    }
  }
  return {static_cast<double>(std::min(s_lo, s_hi)), static_cast<double>(std::max(s_lo, s_hi))};
}

inline Interval predict_cost(const ILane& lane, const SignalPlan& plan) {
  return predict_cost(std::span<const ILane>(&lane, 1), std::span<const SignalPlan>(&plan, 1));
}

/// Green time needed until every vehicle on the lanes has crossed the stop
/// line, when green starts after `setup_steps` red steps. Each endpoint
/// configuration gives one value; the result spans both. Values are capped
/// at `max_green`.
inline Interval predict_green_time(std::span<const ILane> lanes, int setup_steps, int max_green = 60) {
  std::vector<ILane> sim(lanes.begin(), lanes.end());
  auto all_crossed = [&](auto endpoint) {
    constexpr Endpoint E = decltype(endpoint)::value;
    for (const auto& l : sim)
      for (const auto& veh : l.vehicles)
        if (!l.crossed<E>(veh)) return false;
    return true;
  };
  using LoTag = std::integral_constant<Endpoint, Endpoint::Lo>;
  using HiTag = std::integral_constant<Endpoint, Endpoint::Hi>;
  std::optional<int> g_lo = all_crossed(LoTag{}) ? std::optional<int>(0) : std::nullopt;
  std::optional<int> g_hi = all_crossed(HiTag{}) ? std::optional<int>(0) : std::nullopt;
  for (int t = 0; (!g_lo || !g_hi); ++t) {
    const int green_steps = t - setup_steps + 1;
    if (green_steps > max_green) break;
    const auto stop = stop_line_for(t >= setup_steps);
    for (auto& l : sim) step_lane(l, stop);
    if (!g_lo && all_crossed(LoTag{})) g_lo = green_steps;
    if (!g_hi && all_crossed(HiTag{})) g_hi = green_steps;
  }
  const double a = g_lo.value_or(max_green);
  const double b = g_hi.value_or(max_green);
  return {std::min(a, b), std::max(a, b)};
}

/// Number of distinct vehicles that register at least one stopped step when
/// the lanes are held at red for time steps 0 .. horizon.
inline Interval predict_waiting_count(std::span<const ILane> lanes, int horizon) {
  long n_lo = 0;
  long n_hi = 0;
  for (const auto& original : lanes) {
    ILane lane = original;
    std::vector<char> waited_lo(lane.size(), 0);
    std::vector<char> waited_hi(lane.size(), 0);
    for (int t = 0; t <= horizon; ++t) {
      step_lane(lane, StopLine::Closed);
      for (std::size_t i = 0; i < lane.size(); ++i) {
        const auto& veh = lane.vehicles[i];
        if (veh.v_lo == 0 && !lane.crossed<Endpoint::Lo>(veh)) waited_lo[i] = 1;
        if (veh.v_hi == 0 && !lane.crossed<Endpoint::Hi>(veh)) waited_hi[i] = 1;
      }
    }
    n_lo += std::count(waited_lo.begin(), waited_lo.end(), 1);
    n_hi += std::count(waited_hi.begin(), waited_hi.end(), 1);
  }
  return {static_cast<double>(std::min(n_lo, n_hi)), static_cast<double>(std::max(n_lo, n_hi))};
}

inline Interval predict_waiting_count(const ILane& lane, int horizon) {
  return predict_waiting_count(std::span<const ILane>(&lane, 1), horizon);
}

/// T(α) = r_α + τ_α + G_α.
inline Interval predict_time_window(double red_elapsed_s, double setup_s, const Interval& green_time) {
  return Interval::point(red_elapsed_s + setup_s) + green_time;
}

/// Real-time interval image of the approaches of one intersection, kept in
/// step with the detector data.
class ApproachModel {
public:
  ApproachModel() = default;

  ApproachModel(std::span<const int> links, int stop_cell, Interval vmax) {
    for (const int l : links) {
      link_ids_.push_back(l);
      ILane lane;
      lane.stop_cell = stop_cell;
      lane.vmax = vmax;
      lanes_.push_back(std::move(lane));
    }
  }

  const std::vector<int>& links() const noexcept { return link_ids_; }
  const std::vector<ILane>& lanes() const noexcept { return lanes_; }
  const ILane& lane(std::size_t k) const { return lanes_.at(k); }
  ILane& lane(std::size_t k) { return lanes_.at(k); }

  std::optional<std::size_t> lane_index(int link_id) const noexcept {
    for (std::size_t k = 0; k < link_ids_.size(); ++k)
      if (link_ids_[k] == link_id) return k;
    return std::nullopt;
  }

  /// Detections that could not be matched to a modelled vehicle.
  long unmatched() const noexcept { return unmatched_; }

  /// Real-time step under the displayed signals. A vehicle never leaves the
  /// image without a detected crossing; under green it waits in the last
  /// cell with its velocity unaffected by the stop line.
  void advance(const std::function<bool(std::size_t)>& green) {
    for (std::size_t k = 0; k < lanes_.size(); ++k) {
      step_lane(lanes_[k], green(k) ? StopLine::Held : StopLine::Closed);
    }
  }

  /// Appends a vehicle behind the rearmost modelled vehicle at `cell`,
  /// pushing lagging endpoints forward when the detection proves they have
  /// moved on.
  void insert_rear(std::size_t k, int cell, bool moving, int ref = -1) {
    auto& lane = lanes_.at(k);
    IVehicle veh;
    veh.x_lo = veh.x_hi = cell;
    if (moving) {
      veh.v_lo = lane.vmax_of<Endpoint::Lo>();
      veh.v_hi = lane.vmax_of<Endpoint::Hi>();
    }
    veh.ref = ref;
    lane.vehicles.push_back(veh);
    compact(lane);
  }

  /// Removes the front vehicle after a detected stop-line crossing.
  bool remove_front(std::size_t k) {
    auto& lane = lanes_.at(k);
    if (lane.vehicles.empty()) {
      ++unmatched_;
      return false;
    }
    lane.vehicles.erase(lane.vehicles.begin());
    return true;
  }

  /// Replaces lane `k` with exact positions `reports` given as (ref, cell),
  /// front first. Known vehicles keep their velocity pair.
  void collapse(std::size_t k, std::span<const std::pair<int, int>> reports) {
    auto& lane = lanes_.at(k);
    std::vector<IVehicle> next;
    next.reserve(reports.size());
    for (const auto& [ref, cell] : reports) {
      IVehicle veh;
      auto it = std::find_if(lane.vehicles.begin(), lane.vehicles.end(),
                             [r = ref](const IVehicle& m) { return m.ref == r; });
      if (it != lane.vehicles.end()) {
        veh = *it;
      } else {
        veh.v_lo = lane.vmax_of<Endpoint::Lo>();
        veh.v_hi = lane.vmax_of<Endpoint::Hi>();
        veh.ref = ref;
      }
      veh.x_lo = veh.x_hi = cell;
      next.push_back(veh);
    }
    lane.vehicles = std::move(next);
  }

  /// One real-time simulation step followed by merging the detections of
  /// that second. `route` maps a link to its downstream link, `green` tells
  /// whether a link's approach showed green during the step. In VSN mode
  /// the lanes are rebuilt from the position reports; otherwise entry and
  /// crossing events add and remove vehicles.
  void sync(std::span<const Detection> detections, const std::function<std::optional<int>(int)>& route,
            const std::function<bool(int)>& green) {
    advance([&](std::size_t k) { return green(link_ids_[k]); });
    if (vsn_mode_) {
      std::vector<std::vector<std::pair<int, int>>> per_lane(lanes_.size());
      for (const auto& d : detections) {
        if (d.kind != DetectionKind::VsnPosition) continue;
        if (auto k = lane_index(d.link)) per_lane[*k].emplace_back(d.vehicle_ref.value_or(-1), d.cell);
      }
      for (std::size_t k = 0; k < lanes_.size(); ++k) {
        auto& reports = per_lane[k];
        std::sort(reports.begin(), reports.end(),
                  [](const auto& a, const auto& b) { return a.second > b.second; });
        collapse(k, reports);
      }
      return;
    }
    for (const auto& d : detections) {
      if (d.kind == DetectionKind::Entry) {
        if (auto k = lane_index(d.link)) insert_rear(*k, d.cell, true);
      } else if (d.kind == DetectionKind::StoplineCross) {
        if (auto k = lane_index(d.link)) remove_front(*k);
        if (auto down = route(d.link)) {
          if (auto k = lane_index(*down)) insert_rear(*k, 0, true);
        }
      }
    }
  }

  /// Rebuild lanes from full position reports every second (VSN).
  void set_vsn_mode(bool on) noexcept { vsn_mode_ = on; }
  bool vsn_mode() const noexcept { return vsn_mode_; }

  /// Total modelled vehicles on lanes `ks`.
  std::size_t count(std::span<const std::size_t> ks) const {
    std::size_t n = 0;
    for (auto k : ks) n += lanes_.at(k).size();
    return n;
  }

private:
  static void compact(ILane& lane) {
    // vehicles are front first; walk from the rear
    for (std::size_t i = lane.vehicles.size(); i-- > 1;) {
      auto& behind = lane.vehicles[i];
      auto& ahead = lane.vehicles[i - 1];
      ahead.x_lo = std::max(ahead.x_lo, behind.x_lo + 1);
      ahead.x_hi = std::max({ahead.x_hi, behind.x_hi + 1, ahead.x_lo});
    }
  }

  std::vector<int> link_ids_;
  std::vector<ILane> lanes_;
  long unmatched_ = 0;
  bool vsn_mode_ = false;
};

}  // namespace sotc
