/// @file    selection.hpp
/// @brief   Control-action selection rules and the point/interval forms of
///          the expected-delay cost.

#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>

#include "interval.hpp"

namespace sotc {

/// Interval selection procedure.
///
/// The first pass scans actions in index order until one is found whose cost
/// is certainly lower than the cost of the current action. The second pass
/// continues over the remaining actions and moves to any action whose cost is
/// possibly lower (≺) than the one selected so far. When no action certainly
/// beats the current one, the current action is kept.
inline std::size_t select_interval(std::span<const Interval> costs, std::size_t current) {
  if (current >= costs.size()) throw std::out_of_range("select_interval: current action out of range");
  const std::size_t m = costs.size();
  std::size_t best = current;
  std::size_t a = 0;
  for (; a < m && best == current; ++a) {
    if (lt_certain(costs[a], costs[current])) best = a;
  }
  for (; a < m; ++a) {
    if (prec_uncertain(costs[a], costs[best])) best = a;
  }
  return best;
}

/// Minimum of the interval centers; ties keep `current`, then the lowest index.
inline std::size_t select_by_center(std::span<const Interval> costs, std::size_t current) {
  if (current >= costs.size()) throw std::out_of_range("select_by_center: current action out of range");
  std::size_t best = current;
  for (std::size_t a = 0; a < costs.size(); ++a) {
    if (costs[a].center() < costs[best].center()) best = a;
  }
  return best;
}

/// Minimum of point costs with the same tie-breaking as select_by_center.
inline std::size_t select_min(std::span<const double> costs, std::size_t current) {
  if (current >= costs.size()) throw std::out_of_range("select_min: current action out of range");
  std::size_t best = current;
  for (std::size_t a = 0; a < costs.size(); ++a) {
    if (costs[a] < costs[best]) best = a;
  }
  return best;
}

/// C = N (τ + G) + Δw.
inline double soc_cost(double waiting, double setup_s, double green_s, double switch_back_penalty) {
  return waiting * (setup_s + green_s) + switch_back_penalty;
}

/// Interval form of soc_cost evaluated with interval arithmetic.
inline Interval socm_cost(const Interval& waiting, double setup_s, const Interval& green_s,
                          double switch_back_penalty) {
  return waiting * (Interval::point(setup_s) + green_s) + Interval::point(switch_back_penalty);
}

/// Green time of a queue discharging at saturation flow `s` (veh/s) and of
/// the furthest approaching vehicle travelling `distance_cells` at
/// `v_free` cells/s; the larger of the two.
inline double soc_green_time(int queued, std::optional<double> distance_cells, double v_free,
                             double saturation_flow) {
  const double discharge = queued / saturation_flow;
  const double arrival = distance_cells ? *distance_cells / v_free + 1.0 / saturation_flow : 0.0;
  return std::max(discharge, arrival);
}

}  // namespace sotc
