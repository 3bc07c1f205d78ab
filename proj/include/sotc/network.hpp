/// @file    network.hpp
/// @brief   Ground-truth stochastic cellular-automaton model of a square grid
///          of two-way roads with signalised intersections.
///
/// @details Every road is modelled as one unidirectional lane per travel
///          direction. A lane is split into links of `link_cells` cells,
///          each ending at the stop line of an intersection. The last cell of
///          a link may be occupied under red, but not passed. An intersection
///          is a virtual crossing without internal cells: a vehicle on green
///          moves from the upstream link directly into the free leading cells
///          of the collinear downstream link, or leaves the network when
///          there is none. Vehicles drive straight through every
///          intersection.
///
///          One call to step() advances the network by one second with the
///          four-stage rule (accelerate, brake for leader or signal,
///          randomize, move) applied simultaneously to all vehicles.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "random.hpp"

namespace sotc {

/// Raised when the simulation state violates one of its structural
/// invariants (exclusion, ordering, conservation, signal safety).
class InvariantViolation : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Travel direction of a lane.
enum class Direction : std::uint8_t { East = 0, West = 1, South = 2, North = 3 };

/// The two control actions of an intersection. NS gives green to vehicles
/// arriving from north and south, WE to those arriving from west and east.
enum class Action : std::uint8_t { NS = 0, WE = 1 };

inline constexpr int kActionCount = 2;

constexpr Action other(Action a) noexcept { return a == Action::NS ? Action::WE : Action::NS; }
constexpr int index_of(Action a) noexcept { return static_cast<int>(a); }
constexpr Action served_by(Direction d) noexcept {
  return (d == Direction::East || d == Direction::West) ? Action::WE : Action::NS;
}
inline const char* to_string(Action a) { return a == Action::NS ? "NS" : "WE"; }

enum class VehicleClass : std::uint8_t { Slow, Fast };

enum class Phase : std::uint8_t { Green, Setup };

struct NetworkConfig {
  int grid_size = 4;
  int link_cells = 40;
  double cell_length_m = 7.5;
  int vmax = 2;
  double p_fast = 0.2;
  double p_slow = 0.8;
  double q = 0.0;  ///< entry flow per entry point, veh/h
  double f = 0.0;  ///< slow-vehicle fraction
  int tau_s = 5;
  int t_crit_s = 120;
  int duration_s = 3600;
  std::uint64_t seed = 1;

  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("NetworkConfig: " + what); };
    if (grid_size < 1) fail("grid_size must be >= 1");
    if (link_cells < 2) fail("link_cells must be >= 2");
    if (vmax < 1) fail("vmax must be >= 1");
    if (!(f >= 0.0 && f <= 1.0)) fail("f must lie in [0, 1]");
    if (!(q >= 0.0)) fail("q must be >= 0");
    if (!(p_fast >= 0.0 && p_fast <= 1.0) || !(p_slow >= 0.0 && p_slow <= 1.0))
      fail("braking probabilities must lie in [0, 1]");
    if (tau_s < 0) fail("tau_s must be >= 0");
    if (t_crit_s < 1) fail("t_crit_s must be >= 1");
    if (duration_s < 1) fail("duration_s must be >= 1");
    if (cell_length_m <= 0.0) fail("cell_length_m must be positive");
  }
};

enum class VehicleState : std::uint8_t { Queued, Active, Exited };

struct Vehicle {
  int id = -1;
  VehicleClass vclass = VehicleClass::Fast;
  VehicleState state = VehicleState::Queued;
  int link = -1;
  int cell = 0;
  int v = 0;
  int stopped_steps = 0;
  int entry_wait_steps = 0;
  int created_time = 0;
  int entry_time = -1;
  int exit_time = -1;

  int delay() const noexcept { return stopped_steps + entry_wait_steps; }
};

struct Link {
  int id = -1;
  Direction dir = Direction::East;
  int line = 0;        ///< row (E/W) or column (N/S)
  int position = 0;    ///< index along the travel direction, 0 = entry link
  int to = -1;         ///< intersection at the downstream end
  int from = -1;       ///< upstream intersection, -1 for boundary entries
  int next = -1;       ///< collinear downstream link, -1 when leaving the grid
  std::vector<int> cells;  ///< vehicle id per cell, kEmpty when free

  static constexpr int kEmpty = -1;

  bool is_entry() const noexcept { return from < 0; }
  int stop_cell() const noexcept { return static_cast<int>(cells.size()) - 1; }
};

struct IntersectionState {
  Action action = Action::NS;  ///< green action, or the target action during setup
  Phase phase = Phase::Green;
  int setup_remaining_s = 0;
  int green_elapsed_s = 0;
  std::array<int, kActionCount> red_elapsed_s{0, 0};

  bool is_green(Action a) const noexcept { return phase == Phase::Green && action == a; }
};

/// Stop-line crossing of the last step. `to_link` is -1 when the vehicle left the grid.
struct Crossing {
  int vehicle = -1;
  int from_link = -1;
  int to_link = -1;
  int to_cell = 0;
};

struct Admission {
  int vehicle = -1;
  int link = -1;
};

struct DelaySummary {
  int exited = 0;
  int entered = 0;
  double mean_delay_s = 0.0;
  double mean_entry_wait_s = 0.0;
};

class Network {
public:
  explicit Network(NetworkConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    build_topology();
  }

  const NetworkConfig& config() const noexcept { return cfg_; }
  int time() const noexcept { return time_s_; }

  // --- topology -----------------------------------------------------------

  int grid_size() const noexcept { return cfg_.grid_size; }
  int intersection_count() const noexcept { return cfg_.grid_size * cfg_.grid_size; }
  int intersection_id(int row, int col) const noexcept { return row * cfg_.grid_size + col; }

  const std::vector<Link>& links() const noexcept { return links_; }
  const Link& link(int id) const { return links_.at(static_cast<std::size_t>(id)); }

  int link_id(Direction d, int line, int position) const noexcept {
    const int g = cfg_.grid_size;
    return (static_cast<int>(d) * g + line) * g + position;
  }

  /// Incoming links of an intersection, indexed by travel direction.
  std::array<int, 4> approaches(int intersection) const {
    const int g = cfg_.grid_size;
    const int r = intersection / g;
    const int c = intersection % g;
    return {link_id(Direction::East, r, c), link_id(Direction::West, r, g - 1 - c),
            link_id(Direction::South, c, r), link_id(Direction::North, c, g - 1 - r)};
  }

  const std::vector<int>& entry_links() const noexcept { return entries_; }

  /// Next link of a vehicle crossing the stop line of `link_id`; straight through.
  std::optional<int> route(int link_id) const {
    const int n = link(link_id).next;
    if (n < 0) return std::nullopt;
    return n;
  }

  // --- signals --------------------------------------------------------------

  const IntersectionState& signal(int intersection) const {
    return signals_.at(static_cast<std::size_t>(intersection));
  }
  const std::vector<IntersectionState>& signals() const noexcept { return signals_; }

  /// Action that showed green during the last completed step, if any.
  std::optional<Action> displayed(int intersection) const {
    const auto d = displayed_.at(static_cast<std::size_t>(intersection));
    if (d < 0) return std::nullopt;
    return static_cast<Action>(d);
  }

  bool link_green(const Link& l) const noexcept {
    return signals_[static_cast<std::size_t>(l.to)].is_green(served_by(l.dir));
  }

  /// Starts the setup period towards `target`. Ignored while a setup is
  /// already running or when `target` already holds green.
  bool switch_to(int intersection, Action target) {
    auto& s = signals_.at(static_cast<std::size_t>(intersection));
    if (s.phase == Phase::Setup || s.action == target) return false;
    const Action old = s.action;
    s.action = target;
    s.red_elapsed_s[static_cast<std::size_t>(index_of(old))] = 0;
    s.green_elapsed_s = 0;
    if (cfg_.tau_s == 0) {
      s.phase = Phase::Green;
      s.red_elapsed_s[static_cast<std::size_t>(index_of(target))] = 0;
    } else {
      s.phase = Phase::Setup;
      s.setup_remaining_s = cfg_.tau_s;
    }
    ++switch_count_;
    return true;
  }

  /// Test hook: overwrite the full signal state of one intersection.
  void set_signal(int intersection, const IntersectionState& state) {
    signals_.at(static_cast<std::size_t>(intersection)) = state;
  }

  // --- vehicles -----------------------------------------------------------

  const std::vector<Vehicle>& vehicles() const noexcept { return vehicles_; }
  const Vehicle& vehicle(int id) const { return vehicles_.at(static_cast<std::size_t>(id)); }

  /// Places a vehicle directly on a link cell, bypassing the entry queue.
  int place_vehicle(int link_id, int cell, int v, VehicleClass vclass) {
    auto& l = links_.at(static_cast<std::size_t>(link_id));
    if (cell < 0 || cell >= cfg_.link_cells) throw std::out_of_range("place_vehicle: cell outside link");
    if (l.cells[static_cast<std::size_t>(cell)] != Link::kEmpty)
      throw std::invalid_argument("place_vehicle: cell occupied");
    Vehicle veh;
    veh.id = static_cast<int>(vehicles_.size());
    veh.vclass = vclass;
    veh.state = VehicleState::Active;
    veh.link = link_id;
    veh.cell = cell;
    veh.v = std::clamp(v, 0, cfg_.vmax);
    veh.created_time = time_s_;
    veh.entry_time = time_s_;
    l.cells[static_cast<std::size_t>(cell)] = veh.id;
    vehicles_.push_back(veh);
    ++created_;
    ++in_network_;
    return veh.id;
  }

  /// Overrides braking probabilities (calibration and unit tests).
  void set_braking(double p_fast, double p_slow) {
    cfg_.p_fast = p_fast;
    cfg_.p_slow = p_slow;
  }

  long created() const noexcept { return created_; }
  long exited() const noexcept { return exited_; }
  long in_network() const noexcept { return in_network_; }
  long queued() const noexcept {
    long n = 0;
    for (const auto& q : entry_queues_) n += static_cast<long>(q.size());
    return n;
  }
  long switch_count() const noexcept { return switch_count_; }

  const std::vector<Crossing>& last_crossings() const noexcept { return crossings_; }
  const std::vector<Admission>& last_admissions() const noexcept { return admissions_; }

  /// Number of vehicles in the last `band_cells` cells before the stop line.
  int count_near_stop(int link_id, int band_cells) const {
    const auto& l = link(link_id);
    const int n = static_cast<int>(l.cells.size());
    int count = 0;
    for (int c = std::max(0, n - band_cells); c < n; ++c)
      if (l.cells[static_cast<std::size_t>(c)] != Link::kEmpty) ++count;
    return count;
  }

  // --- dynamics -----------------------------------------------------------

  /// Advances all vehicles and signal timers by one second.
  void step(RunRng& rng) {
    crossings_.clear();
    const int vmax = cfg_.vmax;
    const int n_cells = cfg_.link_cells;

    // Stages 1-3 on the old configuration; one random draw per vehicle in
    // (link id, cell) order.
    for (auto& l : links_) {
      const bool green = link_green(l);
      for (int c = 0; c < n_cells; ++c) {
        const int id = l.cells[static_cast<std::size_t>(c)];
        if (id == Link::kEmpty) continue;
        auto& veh = vehicles_[static_cast<std::size_t>(id)];
        int v = std::min(veh.v + 1, vmax);
        v = std::min(v, gap_ahead(l, c, green));
        const double p = veh.vclass == VehicleClass::Slow ? cfg_.p_slow : cfg_.p_fast;
        if (rng.bernoulli(p)) v = std::max(v - 1, 0);
        veh.v = v;
      }
    }

    // Stage 4: move.
    moving_.clear();
    for (auto& l : links_) {
      for (int c = 0; c < n_cells; ++c) {
        const int id = l.cells[static_cast<std::size_t>(c)];
        if (id != Link::kEmpty) moving_.push_back(id);
      }
      std::fill(l.cells.begin(), l.cells.end(), Link::kEmpty);
    }
    for (const int id : moving_) {
      auto& veh = vehicles_[static_cast<std::size_t>(id)];
      const int target = veh.cell + veh.v;
      if (target < n_cells) {
        occupy(veh.link, target, id);
        veh.cell = target;
        continue;
      }
      const auto& from = links_[static_cast<std::size_t>(veh.link)];
      if (!link_green(from)) {
        throw InvariantViolation(describe("vehicle crossed a red stop line", id));
      }
      Crossing x{id, from.id, from.next, target - n_cells};
      if (from.next < 0) {
        veh.state = VehicleState::Exited;
        veh.exit_time = time_s_ + 1;
        veh.link = -1;
        --in_network_;
        ++exited_;
      } else {
        occupy(from.next, x.to_cell, id);
        veh.link = from.next;
        veh.cell = x.to_cell;
      }
      crossings_.push_back(x);
    }
    for (const int id : moving_) {
      auto& veh = vehicles_[static_cast<std::size_t>(id)];
      if (veh.state == VehicleState::Active && veh.v == 0) ++veh.stopped_steps;
    }

    advance_signals();
    ++time_s_;
  }

  /// Generates arrivals at every entry point and admits queue heads onto free
  /// entry cells.
  void spawn(RunRng& rng) {
    admissions_.clear();
    const double p_arrival = std::min(cfg_.q / 3600.0, 1.0);
    for (std::size_t e = 0; e < entries_.size(); ++e) {
      auto& queue = entry_queues_[e];
      if (p_arrival > 0.0 && rng.bernoulli(p_arrival)) {
        Vehicle veh;
        veh.id = static_cast<int>(vehicles_.size());
        veh.vclass = rng.bernoulli(cfg_.f) ? VehicleClass::Slow : VehicleClass::Fast;
        veh.created_time = time_s_;
        vehicles_.push_back(veh);
        queue.push_back(veh.id);
        ++created_;
      }
      auto& l = links_[static_cast<std::size_t>(entries_[e])];
      if (!queue.empty() && l.cells[0] == Link::kEmpty) {
        const int id = queue.front();
        queue.pop_front();
        auto& veh = vehicles_[static_cast<std::size_t>(id)];
        veh.state = VehicleState::Active;
        veh.link = l.id;
        veh.cell = 0;
        veh.v = cfg_.vmax;
        veh.entry_time = time_s_;
        l.cells[0] = id;
        ++in_network_;
        admissions_.push_back({id, l.id});
      }
      for (const int id : queue) ++vehicles_[static_cast<std::size_t>(id)].entry_wait_steps;
    }
  }

  /// Mean delay (stopped seconds plus entry-queue wait) over exited vehicles.
  /// Throws std::domain_error when no vehicle has exited.
  double avg_delay() const {
    long n = 0;
    double sum = 0.0;
    for (const auto& veh : vehicles_) {
      if (veh.state != VehicleState::Exited) continue;
      ++n;
      sum += veh.delay();
    }
    if (n == 0) throw std::domain_error("avg_delay: no vehicle has exited the network");
    return sum / static_cast<double>(n);
  }

  /// Delay statistics restricted to vehicles created at or after `since_s`.
  DelaySummary delay_summary(int since_s) const {
    DelaySummary s;
    double delay = 0.0;
    double wait = 0.0;
    for (const auto& veh : vehicles_) {
      if (veh.created_time < since_s) continue;
      if (veh.entry_time >= 0) ++s.entered;
      if (veh.state != VehicleState::Exited) continue;
      ++s.exited;
      delay += veh.delay();
      wait += veh.entry_wait_steps;
    }
    if (s.exited > 0) {
      s.mean_delay_s = delay / s.exited;
      s.mean_entry_wait_s = wait / s.exited;
    }
    return s;
  }

  /// Full structural check; throws InvariantViolation with diagnostics.
  void check_invariants() const {
    if (created_ != exited_ + in_network_ + queued()) {
      std::ostringstream os;
      os << "conservation broken at t=" << time_s_ << ": created=" << created_ << " exited=" << exited_
         << " in_network=" << in_network_ << " queued=" << queued();
      throw InvariantViolation(os.str());
    }
    long seen = 0;
    for (const auto& l : links_) {
      for (int c = 0; c < static_cast<int>(l.cells.size()); ++c) {
        const int id = l.cells[static_cast<std::size_t>(c)];
        if (id == Link::kEmpty) continue;
        const auto& veh = vehicles_.at(static_cast<std::size_t>(id));
        if (veh.state != VehicleState::Active || veh.link != l.id || veh.cell != c)
          throw InvariantViolation(describe("cell map disagrees with vehicle record", id));
        if (veh.v < 0 || veh.v > cfg_.vmax) throw InvariantViolation(describe("velocity out of range", id));
        ++seen;
      }
    }
    if (seen != in_network_) throw InvariantViolation("active vehicle count does not match cell map");
    for (const auto& s : signals_) {
      if (s.setup_remaining_s < 0 || s.setup_remaining_s > cfg_.tau_s)
        throw InvariantViolation("setup timer out of range");
    }
  }

private:
  void build_topology() {
    const int g = cfg_.grid_size;
    links_.resize(static_cast<std::size_t>(4 * g * g));
    for (int d = 0; d < 4; ++d) {
      for (int line = 0; line < g; ++line) {
        for (int k = 0; k < g; ++k) {
          const auto dir = static_cast<Direction>(d);
          auto& l = links_[static_cast<std::size_t>(link_id(dir, line, k))];
          l.id = link_id(dir, line, k);
          l.dir = dir;
          l.line = line;
          l.position = k;
          l.to = intersection_along(dir, line, k);
          l.from = k == 0 ? -1 : intersection_along(dir, line, k - 1);
          l.next = k + 1 < g ? link_id(dir, line, k + 1) : -1;
          l.cells.assign(static_cast<std::size_t>(cfg_.link_cells), Link::kEmpty);
          if (k == 0) entries_.push_back(l.id);
        }
      }
    }
    std::sort(entries_.begin(), entries_.end());
    entry_queues_.resize(entries_.size());
    signals_.assign(static_cast<std::size_t>(g * g), IntersectionState{});
    displayed_.assign(static_cast<std::size_t>(g * g), index_of(Action::NS));
  }

  int intersection_along(Direction d, int line, int k) const noexcept {
    const int g = cfg_.grid_size;
    switch (d) {
      case Direction::East: return intersection_id(line, k);
      case Direction::West: return intersection_id(line, g - 1 - k);
      case Direction::South: return intersection_id(k, line);
      case Direction::North: return intersection_id(g - 1 - k, line);
    }
    return -1;
  }

  /// Free cells a vehicle at `cell` may use this step, capped at vmax.
  int gap_ahead(const Link& l, int cell, bool green) const {
    const int vmax = cfg_.vmax;
    const int n = static_cast<int>(l.cells.size());
    for (int c = cell + 1; c < n && c <= cell + vmax; ++c) {
      if (l.cells[static_cast<std::size_t>(c)] != Link::kEmpty) return c - cell - 1;
    }
    const int to_end = n - 1 - cell;
    if (to_end >= vmax || !green) return std::min(to_end, vmax);
    if (l.next < 0) return vmax;
    const auto& down = links_[static_cast<std::size_t>(l.next)];
    int free = 0;
    const int reach = std::min(vmax - to_end, static_cast<int>(down.cells.size()));
    while (free < reach && down.cells[static_cast<std::size_t>(free)] == Link::kEmpty) ++free;
    return to_end + free;
  }

  void occupy(int link_id, int cell, int id) {
    auto& slot = links_[static_cast<std::size_t>(link_id)].cells[static_cast<std::size_t>(cell)];
    if (slot != Link::kEmpty) {
      std::ostringstream os;
      os << "collision on link " << link_id << " cell " << cell << " between vehicles " << slot << " and " << id
         << " at t=" << time_s_;
      throw InvariantViolation(os.str());
    }
    slot = id;
  }

  void advance_signals() {
    for (std::size_t i = 0; i < signals_.size(); ++i) {
      auto& s = signals_[i];
      if (s.phase == Phase::Green) {
        displayed_[i] = index_of(s.action);
        ++s.green_elapsed_s;
        ++s.red_elapsed_s[static_cast<std::size_t>(index_of(other(s.action)))];
        continue;
      }
      displayed_[i] = -1;
      for (auto& r : s.red_elapsed_s) ++r;
      if (--s.setup_remaining_s <= 0) {
        s.setup_remaining_s = 0;
        s.phase = Phase::Green;
        s.green_elapsed_s = 0;
        s.red_elapsed_s[static_cast<std::size_t>(index_of(s.action))] = 0;
      }
    }
  }

  std::string describe(const std::string& what, int id) const {
    const auto& veh = vehicles_.at(static_cast<std::size_t>(id));
    std::ostringstream os;
    os << what << " (vehicle " << id << ", link " << veh.link << ", cell " << veh.cell << ", v " << veh.v
       << ", t=" << time_s_ << ')';
    return os.str();
  }

  NetworkConfig cfg_;
  std::vector<Link> links_;
  std::vector<int> entries_;
  std::vector<std::deque<int>> entry_queues_;
  std::vector<IntersectionState> signals_;
  std::vector<int> displayed_;
  std::vector<Vehicle> vehicles_;
  std::vector<Crossing> crossings_;
  std::vector<Admission> admissions_;
  std::vector<int> moving_;
  long created_ = 0;
  long exited_ = 0;
  long in_network_ = 0;
  long switch_count_ = 0;
  int time_s_ = 0;
};

}  // namespace sotc
