#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "winc/model.hpp"

namespace winc {

/// Exact unit-cost distance from every cell to one goal.
class DistanceField {
 public:
  static constexpr int kUnreachable = std::numeric_limits<int>::max();

  DistanceField() = default;
  DistanceField(const GridMap& map, std::vector<int> dist, Location goal)
      : width_(map.width()), dist_(std::move(dist)), goal_(goal) {}

  int at(Location loc) const { return dist_[index(loc)]; }
  bool reachable(Location loc) const { return at(loc) != kUnreachable; }
  Location goal() const { return goal_; }

 private:
  std::size_t index(Location loc) const {
    return static_cast<std::size_t>(loc.row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(loc.col);
  }

  int width_ = 0;
  std::vector<int> dist_;
  Location goal_;
};

/// Breadth-first search outward from `goal`; on a unit-cost grid this is the backward Dijkstra.
inline DistanceField backward_dijkstra(const GridMap& map, Location goal) {
  if (!map.passable(goal)) throw std::invalid_argument("goal " + to_string(goal) + " is blocked");
  std::vector<int> dist(map.cell_count(), DistanceField::kUnreachable);
  std::deque<Location> frontier;
  dist[map.index(goal)] = 0;
  frontier.push_back(goal);
  while (!frontier.empty()) {
    const Location cur = frontier.front();
    frontier.pop_front();
    const int d = dist[map.index(cur)];
    for (std::size_t k = 1; k < kActions.size(); ++k) {
      const Location nb = apply(cur, kActions[k]);
      if (!map.passable(nb)) continue;
      int& slot = dist[map.index(nb)];
      if (slot != DistanceField::kUnreachable) continue;
      slot = d + 1;
      frontier.push_back(nb);
    }
  }
  return DistanceField(map, std::move(dist), goal);
}

inline std::vector<DistanceField> compute_distance_fields(const Instance& inst) {
  std::vector<DistanceField> fields;
  fields.reserve(inst.tasks.size());
  for (const auto& t : inst.tasks) fields.push_back(backward_dijkstra(inst.map, t.goal));
  return fields;
}

struct HeuristicPenalty {
  GroupConfiguration group;
  Cost penalty = 0;

  friend bool operator==(const HeuristicPenalty&, const HeuristicPenalty&) = default;
};

/// Global selection order for penalties: larger penalty first, then the lexicographically
/// smaller agent-id set, then smaller locations.
inline bool ranks_before(const HeuristicPenalty& a, const HeuristicPenalty& b) {
  if (a.penalty != b.penalty) return a.penalty > b.penalty;
  const auto& ea = a.group.entries;
  const auto& eb = b.group.entries;
  const bool agents_less = std::lexicographical_compare(
      ea.begin(), ea.end(), eb.begin(), eb.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  const bool agents_greater = std::lexicographical_compare(
      eb.begin(), eb.end(), ea.begin(), ea.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  if (agents_less != agents_greater) return agents_less;
  return ea < eb;
}

/// Penalties keyed by group configuration. Values only ever go up.
class PenaltyStore {
 public:
  using EntryId = std::size_t;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const HeuristicPenalty& entry(EntryId id) const { return entries_[id]; }
  const std::vector<HeuristicPenalty>& entries() const { return entries_; }

  std::optional<Cost> find(const GroupConfiguration& group) const {
    auto it = lookup_.find(group);
    if (it == lookup_.end()) return std::nullopt;
    return entries_[it->second].penalty;
  }

  /// Stores max(old, candidate) when candidate > 0. Returns true if the store changed.
  bool upsert(const GroupConfiguration& group, Cost candidate) {
    if (candidate <= 0) return false;
    if (group.entries.empty()) throw std::invalid_argument("penalty group must not be empty");
    auto it = lookup_.find(group);
    if (it != lookup_.end()) {
      auto& slot = entries_[it->second].penalty;
      if (candidate <= slot) return false;
      slot = candidate;
      return true;
    }
    const EntryId id = entries_.size();
    entries_.push_back({group, candidate});
    lookup_.emplace(group, id);
    const auto& [a, loc] = group.entries.front();
    anchors_[anchor_key(a, loc)].push_back(id);
    return true;
  }

  /// Entries whose lowest-id agent is `agent`, located at `loc`.
  std::span<const EntryId> anchored_at(AgentId agent, Location loc) const {
    auto it = anchors_.find(anchor_key(agent, loc));
    if (it == anchors_.end()) return {};
    return it->second;
  }

 private:
  static std::uint64_t anchor_key(AgentId agent, Location loc) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(agent)) << 40) ^
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(loc.row)) << 20) ^
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(loc.col));
  }

  std::vector<HeuristicPenalty> entries_;
  std::unordered_map<GroupConfiguration, EntryId> lookup_;
  std::unordered_map<std::uint64_t, std::vector<EntryId>> anchors_;
};

inline void upsert_penalty(PenaltyStore& store, const GroupConfiguration& group, Cost candidate) {
  store.upsert(group, candidate);
}

/// Ids of stored entries fully matched by `config` whose agents are all eligible.
inline std::vector<PenaltyStore::EntryId> matching_entries(const Configuration& config,
                                                           const PenaltyStore& store,
                                                           const std::vector<bool>& eligible) {
  std::vector<PenaltyStore::EntryId> out;
  if (store.empty()) return out;
  for (std::size_t a = 0; a < config.size(); ++a) {
    if (!eligible[a]) continue;
    for (auto id : store.anchored_at(static_cast<AgentId>(a), config[a])) {
      const auto& e = store.entry(id);
      bool ok = true;
      for (const auto& [b, loc] : e.group.entries) {
        const auto bi = static_cast<std::size_t>(b);
        if (bi >= config.size() || !eligible[bi] || config[bi] != loc) {
          ok = false;
          break;
        }
      }
      if (ok) out.push_back(id);
    }
  }
  return out;
}

/// Greedy disjoint selection over candidate entry ids: take entries in rank order, skipping any
/// that shares an agent with one already taken. `ids` is reordered.
inline std::vector<PenaltyStore::EntryId> greedy_disjoint(std::vector<PenaltyStore::EntryId>& ids,
                                                          const PenaltyStore& store,
                                                          std::size_t agent_count) {
  std::sort(ids.begin(), ids.end(),
            [&](auto x, auto y) { return ranks_before(store.entry(x), store.entry(y)); });
  std::vector<bool> used(agent_count, false);
  std::vector<PenaltyStore::EntryId> picked;
  for (auto id : ids) {
    const auto& e = store.entry(id);
    bool free = true;
    for (const auto& [a, loc] : e.group.entries) free = free && !used[static_cast<std::size_t>(a)];
    if (!free) continue;
    for (const auto& [a, loc] : e.group.entries) used[static_cast<std::size_t>(a)] = true;
    picked.push_back(id);
  }
  return picked;
}

inline std::vector<HeuristicPenalty> match_penalties(const Configuration& config, const PenaltyStore& store,
                                                     std::span<const AgentId> eligible_agents) {
  std::vector<bool> eligible(config.size(), false);
  for (AgentId a : eligible_agents) eligible.at(static_cast<std::size_t>(a)) = true;
  auto ids = matching_entries(config, store, eligible);
  std::vector<HeuristicPenalty> out;
  for (auto id : greedy_disjoint(ids, store, config.size())) out.push_back(store.entry(id));
  return out;
}

/// Sum of the greedy-selected penalties matched by `config` among `eligible` agents.
inline Cost matched_penalty(const Configuration& config, const PenaltyStore& store,
                            const std::vector<bool>& eligible) {
  if (store.empty()) return 0;
  auto ids = matching_entries(config, store, eligible);
  Cost total = 0;
  for (auto id : greedy_disjoint(ids, store, config.size())) total += store.entry(id).penalty;
  return total;
}

inline Cost agent_h(const DistanceField& field, Location loc) {
  if (!field.reachable(loc)) {
    throw std::domain_error("location " + to_string(loc) + " cannot reach goal " + to_string(field.goal()));
  }
  return field.at(loc);
}

/// Sum of backward-Dijkstra distances over the agents flagged in `mask` (all agents if empty).
inline Cost h_bd(const Configuration& config, std::span<const DistanceField> fields,
                 const std::vector<bool>& mask = {}) {
  Cost total = 0;
  for (std::size_t i = 0; i < config.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    total += agent_h(fields[i], config[i]);
  }
  return total;
}

inline Cost evaluate_h(const Configuration& config, std::span<const DistanceField> fields,
                       const PenaltyStore& store) {
  const std::vector<bool> all(config.size(), true);
  return h_bd(config, fields) + matched_penalty(config, store, all);
}

/// Heuristic of a group's sub-configuration: h_BD over the group plus penalties whose agents
/// all belong to the group.
inline Cost group_h(const Configuration& config, std::span<const AgentId> group,
                    std::span<const DistanceField> fields, const PenaltyStore& store) {
  std::vector<bool> mask(config.size(), false);
  for (AgentId a : group) mask[static_cast<std::size_t>(a)] = true;
  return h_bd(config, fields, mask) + matched_penalty(config, store, mask);
}

// Line format: `agent:row,col;agent:row,col;... penalty`
inline void dump_penalties(std::ostream& out, const PenaltyStore& store) {
  for (const auto& e : store.entries()) {
    bool first = true;
    for (const auto& [a, loc] : e.group.entries) {
      if (!first) out << ';';
      first = false;
      out << a << ':' << loc.row << ',' << loc.col;
    }
    out << ' ' << e.penalty << '\n';
  }
}

inline PenaltyStore load_penalties(std::istream& in) {
  PenaltyStore store;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    const auto space = line.rfind(' ');
    if (space == std::string::npos) throw std::runtime_error("penalty line " + std::to_string(line_no) + ": missing value");
    GroupConfiguration group;
    std::istringstream entries(line.substr(0, space));
    std::string item;
    while (std::getline(entries, item, ';')) {
      int a = 0, r = 0, c = 0;
      char colon = 0, comma = 0;
      std::istringstream is(item);
      if (!(is >> a >> colon >> r >> comma >> c) || colon != ':' || comma != ',') {
        throw std::runtime_error("penalty line " + std::to_string(line_no) + ": bad entry '" + item + "'");
      }
      group.entries.emplace_back(a, Location{r, c});
    }
    std::sort(group.entries.begin(), group.entries.end());
    store.upsert(group, std::stoll(line.substr(space + 1)));
  }
  return store;
}

}  // namespace winc
