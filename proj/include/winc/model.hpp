#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace winc {

using AgentId = int;
using Cost = std::int64_t;

struct Location {
  int row = 0;
  int col = 0;

  // Row-major order; used for every deterministic tie-break.
  friend constexpr auto operator<=>(const Location&, const Location&) = default;
};

inline std::string to_string(Location loc) {
  return "(" + std::to_string(loc.row) + "," + std::to_string(loc.col) + ")";
}

/// The five single-step actions in canonical order.
enum class Action : std::uint8_t { kWait = 0, kUp = 1, kRight = 2, kDown = 3, kLeft = 4 };

inline constexpr std::array<Action, 5> kActions = {Action::kWait, Action::kUp, Action::kRight,
                                                   Action::kDown, Action::kLeft};

constexpr Location apply(Location loc, Action a) {
  switch (a) {
    case Action::kWait: return loc;
    case Action::kUp: return {loc.row - 1, loc.col};
    case Action::kRight: return {loc.row, loc.col + 1};
    case Action::kDown: return {loc.row + 1, loc.col};
    case Action::kLeft: return {loc.row, loc.col - 1};
  }
  return loc;
}

/// The action that moves `from` to `to`, if they are equal or 4-adjacent.
constexpr std::optional<Action> action_between(Location from, Location to) {
  const int dr = to.row - from.row;
  const int dc = to.col - from.col;
  if (dr == 0 && dc == 0) return Action::kWait;
  if (dr == -1 && dc == 0) return Action::kUp;
  if (dr == 0 && dc == 1) return Action::kRight;
  if (dr == 1 && dc == 0) return Action::kDown;
  if (dr == 0 && dc == -1) return Action::kLeft;
  return std::nullopt;
}

constexpr int manhattan(Location a, Location b) {
  return (a.row > b.row ? a.row - b.row : b.row - a.row) +
         (a.col > b.col ? a.col - b.col : b.col - a.col);
}

class GridMap {
 public:
  GridMap() = default;
  GridMap(int width, int height) : width_(width), height_(height) {
    if (width < 1 || height < 1) throw std::invalid_argument("map dimensions must be positive");
    blocked_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t cell_count() const { return blocked_.size(); }

  bool in_bounds(Location loc) const {
    return loc.row >= 0 && loc.row < height_ && loc.col >= 0 && loc.col < width_;
  }
  bool blocked(Location loc) const { return blocked_[index(loc)] != 0; }
  bool passable(Location loc) const { return in_bounds(loc) && !blocked(loc); }
  void set_blocked(Location loc, bool value) { blocked_.at(index(loc)) = value ? 1 : 0; }

  std::size_t index(Location loc) const {
    return static_cast<std::size_t>(loc.row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(loc.col);
  }
  Location location(std::size_t idx) const {
    return {static_cast<int>(idx / static_cast<std::size_t>(width_)),
            static_cast<int>(idx % static_cast<std::size_t>(width_))};
  }

  int free_cell_count() const {
    return static_cast<int>(std::count(blocked_.begin(), blocked_.end(), std::uint8_t{0}));
  }

  friend bool operator==(const GridMap&, const GridMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> blocked_;
};

struct AgentTask {
  AgentId id = 0;
  Location start;
  Location goal;
};

/// Joint locations of all agents at one timestep, indexed by agent id.
struct Configuration {
  std::vector<Location> locations;

  std::size_t size() const { return locations.size(); }
  const Location& operator[](std::size_t i) const { return locations[i]; }
  Location& operator[](std::size_t i) { return locations[i]; }

  friend auto operator<=>(const Configuration&, const Configuration&) = default;
  friend bool operator==(const Configuration&, const Configuration&) = default;
};

/// A subset of agents pinned to specific locations. Entries are sorted by agent id.
struct GroupConfiguration {
  std::vector<std::pair<AgentId, Location>> entries;

  std::size_t size() const { return entries.size(); }

  std::vector<AgentId> agents() const {
    std::vector<AgentId> out;
    out.reserve(entries.size());
    for (const auto& [a, loc] : entries) out.push_back(a);
    return out;
  }

  bool matches(const Configuration& config) const {
    for (const auto& [a, loc] : entries) {
      if (static_cast<std::size_t>(a) >= config.size() || config[static_cast<std::size_t>(a)] != loc) {
        return false;
      }
    }
    return true;
  }

  friend auto operator<=>(const GroupConfiguration&, const GroupConfiguration&) = default;
  friend bool operator==(const GroupConfiguration&, const GroupConfiguration&) = default;
};

inline GroupConfiguration restrict_to(const Configuration& config, std::span<const AgentId> agents) {
  GroupConfiguration group;
  group.entries.reserve(agents.size());
  for (AgentId a : agents) group.entries.emplace_back(a, config[static_cast<std::size_t>(a)]);
  std::sort(group.entries.begin(), group.entries.end());
  return group;
}

inline Configuration start_configuration(std::span<const AgentTask> tasks) {
  Configuration c;
  for (const auto& t : tasks) c.locations.push_back(t.start);
  return c;
}

inline Configuration goal_configuration(std::span<const AgentTask> tasks) {
  Configuration c;
  for (const auto& t : tasks) c.locations.push_back(t.goal);
  return c;
}

inline bool has_duplicate_locations(std::span<const Location> locs) {
  std::vector<Location> sorted(locs.begin(), locs.end());
  std::sort(sorted.begin(), sorted.end());
  return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
}

/// Checks that `config` is in bounds, unblocked, and free of vertex collisions.
inline bool valid_configuration(const Configuration& config, const GridMap& map) {
  for (const auto& loc : config.locations) {
    if (!map.passable(loc)) return false;
  }
  return !has_duplicate_locations(config.locations);
}

/// True iff every agent waits or takes one cardinal step onto a free cell, and the
/// transition has no vertex or edge (swap) collisions.
inline bool valid_joint_transition(const Configuration& from, const Configuration& to,
                                   const GridMap& map) {
  if (from.size() != to.size()) {
    throw std::invalid_argument("configuration sizes differ: " + std::to_string(from.size()) +
                                " vs " + std::to_string(to.size()));
  }
  const std::size_t n = from.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!map.passable(to[i]) || manhattan(from[i], to[i]) > 1) return false;
  }
  if (has_duplicate_locations(to.locations)) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (from[i] == to[i]) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (from[i] == to[j] && to[i] == from[j]) return false;
    }
  }
  return true;
}

/// Unit cost per agent per step, except an agent resting at its goal costs nothing.
constexpr Cost step_cost(Location from, Location to, Location goal) {
  return (from == goal && to == goal) ? 0 : 1;
}

inline Cost joint_cost(const Configuration& from, const Configuration& to,
                       std::span<const AgentTask> tasks) {
  Cost total = 0;
  for (std::size_t i = 0; i < tasks.size(); ++i) total += step_cost(from[i], to[i], tasks[i].goal);
  return total;
}

/// Cost restricted to the agents of a group (entries of both must list the same agents).
inline Cost group_cost(const GroupConfiguration& from, const GroupConfiguration& to,
                       std::span<const AgentTask> tasks) {
  Cost total = 0;
  for (std::size_t k = 0; k < from.entries.size(); ++k) {
    const auto a = static_cast<std::size_t>(from.entries[k].first);
    total += step_cost(from.entries[k].second, to.entries[k].second, tasks[a].goal);
  }
  return total;
}

/// A planning instance: map plus one task per agent.
struct Instance {
  GridMap map;
  std::vector<AgentTask> tasks;

  std::size_t agent_count() const { return tasks.size(); }
};

}  // namespace winc

template <>
struct std::hash<winc::Location> {
  std::size_t operator()(const winc::Location& l) const noexcept {
    return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(static_cast<std::uint32_t>(l.row)) << 32) |
                                      static_cast<std::uint32_t>(l.col));
  }
};

template <>
struct std::hash<winc::Configuration> {
  std::size_t operator()(const winc::Configuration& c) const noexcept {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (const auto& l : c.locations) {
      h ^= std::hash<winc::Location>{}(l) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

template <>
struct std::hash<winc::GroupConfiguration> {
  std::size_t operator()(const winc::GroupConfiguration& g) const noexcept {
    std::size_t h = 0x84222325cbf29ce4ULL;
    for (const auto& [a, l] : g.entries) {
      h ^= std::hash<winc::Location>{}(l) + static_cast<std::size_t>(a) * 0x100000001b3ULL +
           0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};
