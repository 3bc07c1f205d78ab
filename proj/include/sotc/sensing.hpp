/// @file    sensing.hpp
/// @brief   Detection streams extracted from the ground-truth network.
///
/// Road-side detection (RVD) sees a vehicle only when it is admitted at a
/// network entry or when it crosses a stop line. A vehicular sensor network
/// (VSN) reports the cell of every vehicle each second. Neither reports the
/// vehicle class or speed. Detection is noiseless and lossless.

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "network.hpp"

namespace sotc {

enum class Scenario : std::uint8_t { RVD, VSN };

inline const char* to_string(Scenario s) { return s == Scenario::RVD ? "RVD" : "VSN"; }

enum class DetectionKind : std::uint8_t { Entry, StoplineCross, VsnPosition };

inline const char* to_string(DetectionKind k) {
  switch (k) {
    case DetectionKind::Entry: return "entry";
    case DetectionKind::StoplineCross: return "stopline_cross";
    case DetectionKind::VsnPosition: return "vsn_position";
  }
  return "?";
}

struct Detection {
  int time = 0;
  DetectionKind kind = DetectionKind::Entry;
  int link = -1;
  int cell = 0;
  std::optional<int> vehicle_ref;  ///< VSN only

  bool operator==(const Detection&) const = default;
};

/// Entry admissions and stop-line crossings of the last second.
inline std::vector<Detection> observe_rvd(const Network& net) {
  std::vector<Detection> out;
  out.reserve(net.last_admissions().size() + net.last_crossings().size());
  for (const auto& a : net.last_admissions()) {
    out.push_back({net.time(), DetectionKind::Entry, a.link, 0, std::nullopt});
  }
  for (const auto& x : net.last_crossings()) {
    out.push_back({net.time(), DetectionKind::StoplineCross, x.from_link, net.link(x.from_link).stop_cell(),
                   std::nullopt});
  }
  return out;
}

/// Exact position of every vehicle in the network, in (link, cell) order.
inline std::vector<Detection> observe_vsn(const Network& net) {
  std::vector<Detection> out;
  out.reserve(static_cast<std::size_t>(net.in_network()));
  for (const auto& l : net.links()) {
    for (int c = 0; c < static_cast<int>(l.cells.size()); ++c) {
      const int id = l.cells[static_cast<std::size_t>(c)];
      if (id != Link::kEmpty) out.push_back({net.time(), DetectionKind::VsnPosition, l.id, c, id});
    }
  }
  return out;
}

inline std::vector<Detection> observe(const Network& net, Scenario s) {
  return s == Scenario::RVD ? observe_rvd(net) : observe_vsn(net);
}

/// One JSON object per line: {"time":..,"kind":"..","link":..,"cell":..[,"id":..]}.
inline void write_event_log(std::ostream& os, const std::vector<Detection>& events) {
  for (const auto& d : events) {
    os << "{\"time\":" << d.time << ",\"kind\":\"" << to_string(d.kind) << "\",\"link\":" << d.link
       << ",\"cell\":" << d.cell;
    if (d.vehicle_ref) os << ",\"id\":" << *d.vehicle_ref;
    os << "}\n";
  }
}

}  // namespace sotc
