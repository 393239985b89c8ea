#pragma once

// Fixtures shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "winc/framework.hpp"
#include "winc/heuristics.hpp"
#include "winc/model.hpp"
#include "winc/oracle.hpp"
#include "winc/sscbs.hpp"

namespace winc::testing {

inline GridMap grid(const std::vector<std::string>& rows) {
  GridMap map(static_cast<int>(rows.front().size()), static_cast<int>(rows.size()));
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) map.set_blocked({r, c}, rows[r][c] == '@');
  }
  return map;
}

inline Instance make_instance(const std::vector<std::string>& rows,
                              const std::vector<std::pair<Location, Location>>& start_goal) {
  Instance inst;
  inst.map = grid(rows);
  for (const auto& [s, g] : start_goal) inst.tasks.push_back({static_cast<AgentId>(inst.tasks.size()), s, g});
  return inst;
}

inline Configuration config(std::vector<Location> locs) { return Configuration{std::move(locs)}; }

inline GroupConfiguration group(std::vector<std::pair<AgentId, Location>> entries) {
  std::sort(entries.begin(), entries.end());
  return GroupConfiguration{std::move(entries)};
}

// Free cells of the component containing `seed`.
inline std::vector<Location> component_of(const GridMap& map, Location seed) {
  std::vector<Location> out;
  std::vector<bool> seen(map.cell_count(), false);
  std::vector<Location> stack{seed};
  seen[map.index(seed)] = true;
  while (!stack.empty()) {
    const Location cur = stack.back();
    stack.pop_back();
    out.push_back(cur);
    for (std::size_t k = 1; k < kActions.size(); ++k) {
      const Location nb = apply(cur, kActions[k]);
      if (map.passable(nb) && !seen[map.index(nb)]) {
        seen[map.index(nb)] = true;
        stack.push_back(nb);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<Location> largest_component(const GridMap& map) {
  std::vector<Location> best;
  std::vector<bool> done(map.cell_count(), false);
  for (std::size_t i = 0; i < map.cell_count(); ++i) {
    const Location loc = map.location(i);
    if (!map.passable(loc) || done[i]) continue;
    auto comp = component_of(map, loc);
    for (auto l : comp) done[map.index(l)] = true;
    if (comp.size() > best.size()) best = std::move(comp);
  }
  return best;
}

// True when the free cells form one component with no articulation point.
inline bool biconnected(const GridMap& map) {
  const auto comp = largest_component(map);
  if (static_cast<int>(comp.size()) != map.free_cell_count() || comp.size() < 3) return false;
  std::vector<int> disc(map.cell_count(), -1), low(map.cell_count(), 0);
  int timer = 0;
  bool articulation = false;
  std::function<void(Location, std::optional<Location>)> dfs = [&](Location u, std::optional<Location> parent) {
    const auto ui = map.index(u);
    disc[ui] = low[ui] = timer++;
    int children = 0;
    for (std::size_t k = 1; k < kActions.size(); ++k) {
      const Location v = apply(u, kActions[k]);
      if (!map.passable(v) || (parent && v == *parent)) continue;
      const auto vi = map.index(v);
      if (disc[vi] >= 0) {
        low[ui] = std::min(low[ui], disc[vi]);
        continue;
      }
      ++children;
      dfs(v, u);
      low[ui] = std::min(low[ui], low[vi]);
      if (parent && low[vi] >= disc[ui]) articulation = true;
    }
    if (!parent && children > 1) articulation = true;
  };
  dfs(comp.front(), std::nullopt);
  return !articulation;
}

// A simple cycle has every free cell with exactly two free neighbours.
inline bool is_cycle(const GridMap& map) {
  for (std::size_t i = 0; i < map.cell_count(); ++i) {
    const Location loc = map.location(i);
    if (!map.passable(loc)) continue;
    int deg = 0;
    for (std::size_t k = 1; k < kActions.size(); ++k) deg += map.passable(apply(loc, kActions[k])) ? 1 : 0;
    if (deg != 2) return false;
  }
  return true;
}

/// Random obstacles at `density`, agents placed in the largest component with distinct starts
/// and goals. nullopt when the component is too small.
inline std::optional<Instance> random_instance(std::mt19937_64& rng, int width, int height, double density,
                                               std::size_t n_agents) {
  Instance inst;
  inst.map = GridMap(width, height);
  std::bernoulli_distribution wall(density);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) inst.map.set_blocked({r, c}, wall(rng));
  }
  auto cells = largest_component(inst.map);
  if (cells.size() < n_agents + 1) return std::nullopt;
  auto starts = cells;
  auto goals = cells;
  std::shuffle(starts.begin(), starts.end(), rng);
  std::shuffle(goals.begin(), goals.end(), rng);
  for (std::size_t i = 0; i < n_agents; ++i) inst.tasks.push_back({static_cast<AgentId>(i), starts[i], goals[i]});
  return inst;
}

/// Random penalties on groups of 2..N agents placed at or next to their current cells, so that
/// many of them can match some successor.
inline PenaltyStore random_store(std::mt19937_64& rng, const GridMap& map, const Configuration& current,
                                 std::span<const DistanceField> fields, int count, Cost max_penalty) {
  PenaltyStore store;
  const std::size_t n = current.size();
  std::uniform_int_distribution<Cost> pen(1, max_penalty);
  std::uniform_int_distribution<std::size_t> size_dist(2, n);
  std::uniform_int_distribution<std::size_t> act(0, kActions.size() - 1);
  for (int k = 0, tries = 0; k < count && tries < 200; ++tries) {
    std::vector<AgentId> agents(n);
    for (std::size_t i = 0; i < n; ++i) agents[i] = static_cast<AgentId>(i);
    std::shuffle(agents.begin(), agents.end(), rng);
    agents.resize(size_dist(rng));
    GroupConfiguration g;
    bool ok = true;
    for (AgentId a : agents) {
      const auto i = static_cast<std::size_t>(a);
      const Location loc = apply(current[i], kActions[act(rng)]);
      if (!map.passable(loc) || !fields[i].reachable(loc)) {
        ok = false;
        break;
      }
      for (const auto& [b, other] : g.entries) ok = ok && other != loc;
      g.entries.emplace_back(a, loc);
    }
    if (!ok) continue;
    std::sort(g.entries.begin(), g.entries.end());
    store.upsert(g, pen(rng));
    ++k;
  }
  return store;
}

/// The two-agent swap in a 1x4 corridor A B C D. R1 goes A to D, R2 goes D to A. The penalty on
/// (R1 at B, R2 at C) is 50 and on (R1 at A, R2 at C) is 20.
struct SwapFigure {
  Instance inst;
  std::vector<DistanceField> fields;
  PenaltyStore store;

  static constexpr Location A{0, 0}, B{0, 1}, C{0, 2}, D{0, 3};

  SwapFigure() {
    inst = make_instance({"...."}, {{A, D}, {D, A}});
    fields = compute_distance_fields(inst);
    store.upsert(group({{0, B}, {1, C}}), 50);
    store.upsert(group({{0, A}, {1, C}}), 20);
  }
  Configuration start() const { return start_configuration(inst.tasks); }
};

/// Naive scheme 1: collisions are resolved by a CBS-style search, penalties only enter a node's
/// cost when the node is created and never cause a split. Returns h of the chosen successor.
inline Cost naive_high_level_h(const GridMap& map, const Configuration& current, const PenaltyStore& store,
                               std::span<const DistanceField> fields, std::span<const AgentTask> tasks) {
  struct Node {
    std::vector<std::vector<Location>> banned;
    Configuration next;
    Cost f = 0;
  };
  auto plan = [&](Node& n) {
    n.next = current;
    for (std::size_t i = 0; i < current.size(); ++i) {
      std::optional<Location> best;
      Cost best_v = 0;
      for (Action a : kActions) {
        const Location to = apply(current[i], a);
        if (!map.passable(to)) continue;
        if (std::find(n.banned[i].begin(), n.banned[i].end(), to) != n.banned[i].end()) continue;
        const Cost v = step_cost(current[i], to, tasks[i].goal) + fields[i].at(to);
        if (!best || v < best_v) {
          best = to;
          best_v = v;
        }
      }
      if (!best) return false;
      n.next[i] = *best;
    }
    n.f = joint_cost(current, n.next, tasks) + evaluate_h(n.next, fields, store);
    return true;
  };
  std::vector<Node> open;
  Node root{std::vector<std::vector<Location>>(current.size()), {}, 0};
  plan(root);
  open.push_back(root);
  while (!open.empty()) {
    auto it = std::min_element(open.begin(), open.end(), [](const Node& a, const Node& b) { return a.f < b.f; });
    Node n = *it;
    open.erase(it);
    std::optional<std::pair<std::size_t, std::size_t>> clash;
    for (std::size_t i = 0; i < current.size() && !clash; ++i) {
      for (std::size_t j = i + 1; j < current.size() && !clash; ++j) {
        if (n.next[i] == n.next[j] || (n.next[i] == current[j] && n.next[j] == current[i])) clash = {{i, j}};
      }
    }
    if (!clash) return evaluate_h(n.next, fields, store);
    for (std::size_t who : {clash->first, clash->second}) {
      Node child = n;
      child.banned[who].push_back(n.next[who]);
      if (plan(child)) open.push_back(child);
    }
  }
  throw std::runtime_error("naive high-level search exhausted");
}

/// Naive scheme 2: agents choose moves one at a time in `order`, each adding any penalty that
/// its choice completes together with agents already placed. Returns h of the result.
inline Cost naive_low_level_h(const GridMap& map, const Configuration& current, const PenaltyStore& store,
                              std::span<const DistanceField> fields, std::span<const AgentTask> tasks,
                              const std::vector<AgentId>& order) {
  Configuration next = current;
  std::vector<bool> placed(current.size(), false);
  for (AgentId a : order) {
    const auto i = static_cast<std::size_t>(a);
    std::optional<Location> best;
    Cost best_v = 0;
    for (Action act : kActions) {
      const Location to = apply(current[i], act);
      if (!map.passable(to)) continue;
      bool taken = false;
      for (std::size_t j = 0; j < current.size(); ++j) taken = taken || (placed[j] && next[j] == to);
      if (taken) continue;
      Configuration trial = next;
      trial[i] = to;
      auto eligible = placed;
      eligible[i] = true;
      const Cost v = step_cost(current[i], to, tasks[i].goal) + fields[i].at(to) +
                     matched_penalty(trial, store, eligible);
      if (!best || v < best_v) {
        best = to;
        best_v = v;
      }
    }
    next[i] = *best;
    placed[i] = true;
  }
  return evaluate_h(next, fields, store);
}

}  // namespace winc::testing
