#pragma once

// Windowed CBS: resolves vertex and edge conflicts for timesteps 1..W only and scores each agent
// by its windowed step costs plus h* at the horizon. No heuristic penalties.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <stdexcept>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "winc/heuristics.hpp"
#include "winc/model.hpp"
#include "winc/sscbs.hpp"

namespace winc {

/// A timed constraint inside the window; only negative vertex and edge kinds are used.
struct TimedConstraint {
  ConstraintKind kind = ConstraintKind::kNegativeVertex;
  AgentId agent = 0;
  Location from;
  Location to;  // the vertex for vertex constraints
  int t = 1;    // arrival time
};

struct WindowOptions {
  double suboptimality = 1.0;
  std::optional<Clock::time_point> deadline;
};

struct WindowStats {
  std::size_t nodes_expanded = 0;
  std::size_t nodes_generated = 0;
  std::size_t low_level_calls = 0;
};

/// Per-agent location sequences of length W + 1; index 0 is the current location.
struct WindowedPlan {
  std::vector<std::vector<Location>> paths;
  Cost cost = 0;
  WindowStats stats;

  int window() const { return paths.empty() ? 0 : static_cast<int>(paths.front().size()) - 1; }
  Configuration at(int t) const {
    Configuration c;
    for (const auto& p : paths) c.locations.push_back(p[static_cast<std::size_t>(t)]);
    return c;
  }
};

class WindowTimeout : public SearchTimeout {
 public:
  explicit WindowTimeout(WindowStats s) : SearchTimeout("windowed CBS timed out"), stats(s) {}
  WindowStats stats;
};

class WindowInfeasible : public SearchInfeasible {
 public:
  using SearchInfeasible::SearchInfeasible;
};

inline Cost windowed_path_cost(std::span<const Location> path, const DistanceField& field) {
  Cost c = 0;
  for (std::size_t t = 0; t + 1 < path.size(); ++t) c += step_cost(path[t], path[t + 1], field.goal());
  return c + field.at(path.back());
}

/// Optimal W-step path minimizing step costs plus h* at the horizon under negative constraints.
/// Among equally cheap paths the one ending closest to the goal wins.
inline std::optional<std::vector<Location>> space_time_astar(AgentId agent, Location start,
                                                             std::span<const TimedConstraint> constraints,
                                                             int window, const GridMap& map,
                                                             const DistanceField& field) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  auto key = [&](std::size_t cell, int t) { return static_cast<std::uint64_t>(cell) * 4096u + static_cast<std::uint64_t>(t); };
  std::unordered_map<std::uint64_t, std::uint8_t> vertex_blocked;
  std::set<std::tuple<std::size_t, std::size_t, int>> edge_blocked;
  for (const auto& c : constraints) {
    if (c.agent != agent || c.t < 1 || c.t > window) continue;
    if (c.kind == ConstraintKind::kNegativeVertex) {
      vertex_blocked[key(map.index(c.to), c.t)] = 1;
    } else if (c.kind == ConstraintKind::kNegativeEdge) {
      edge_blocked.emplace(map.index(c.from), map.index(c.to), c.t);
    }
  }

  struct State {
    Location loc;
    int t;
    Cost g;
    int parent;
  };
  std::vector<State> states;
  // (f, h at the horizon or 0 before it, h, -t, seq). The second key is a lower bound on the
  // final h for any state, so the first horizon state popped is lexicographically optimal.
  using Entry = std::tuple<Cost, int, int, int, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::unordered_map<std::uint64_t, Cost> best_g;
  std::unordered_map<std::uint64_t, std::uint8_t> closed;

  states.push_back({start, 0, 0, -1});
  best_g[key(map.index(start), 0)] = 0;
  open.emplace(field.at(start), 0, field.at(start), 0, 0);
  while (!open.empty()) {
    const auto [f, end_h, h, neg_t, sid] = open.top();
    open.pop();
    const State s = states[sid];
    const auto sk = key(map.index(s.loc), s.t);
    if (closed.count(sk)) continue;
    closed[sk] = 1;
    if (s.t == window) {
      std::vector<Location> path(static_cast<std::size_t>(window) + 1);
      for (int cur = static_cast<int>(sid); cur >= 0; cur = states[static_cast<std::size_t>(cur)].parent) {
        path[static_cast<std::size_t>(states[static_cast<std::size_t>(cur)].t)] = states[static_cast<std::size_t>(cur)].loc;
      }
      return path;
    }
    for (Action a : kActions) {
      const Location to = apply(s.loc, a);
      if (!map.passable(to) || !field.reachable(to)) continue;
      const int nt = s.t + 1;
      const auto nk = key(map.index(to), nt);
      if (vertex_blocked.count(nk)) continue;
      if (a != Action::kWait && edge_blocked.count({map.index(s.loc), map.index(to), nt})) continue;
      if (closed.count(nk)) continue;
      const Cost ng = s.g + step_cost(s.loc, to, field.goal());
      auto it = best_g.find(nk);
      if (it != best_g.end() && it->second <= ng) continue;
      best_g[nk] = ng;
      states.push_back({to, nt, ng, static_cast<int>(sid)});
      const int nh = field.at(to);
      open.emplace(ng + nh, nt == window ? nh : 0, nh, -nt, states.size() - 1);
    }
  }
  return std::nullopt;
}

struct WindowConflict {
  ConflictKind kind = ConflictKind::kVertex;
  AgentId a = 0;
  AgentId b = 0;
  Location vertex;  // vertex conflict cell
  Location from;    // edge conflict: a moves from -> to, b moves to -> from
  Location to;
  int t = 1;
};

/// All vertex/edge conflicts at timesteps 1..W, ordered by time then agent pair.
inline std::vector<WindowConflict> find_window_conflicts(const std::vector<std::vector<Location>>& paths) {
  std::vector<WindowConflict> out;
  if (paths.empty()) return out;
  const int window = static_cast<int>(paths.front().size()) - 1;
  for (int t = 1; t <= window; ++t) {
    const auto ut = static_cast<std::size_t>(t);
    for (std::size_t i = 0; i < paths.size(); ++i) {
      for (std::size_t j = i + 1; j < paths.size(); ++j) {
        if (paths[i][ut] == paths[j][ut]) {
          out.push_back({ConflictKind::kVertex, static_cast<AgentId>(i), static_cast<AgentId>(j), paths[i][ut], {}, {}, t});
        } else if (paths[i][ut] == paths[j][ut - 1] && paths[j][ut] == paths[i][ut - 1]) {
          out.push_back({ConflictKind::kEdge, static_cast<AgentId>(i), static_cast<AgentId>(j), {}, paths[i][ut - 1],
                         paths[i][ut], t});
        }
      }
    }
  }
  return out;
}

/// Plans a collision-free window of W steps for all agents.
inline WindowedPlan plan_window(const GridMap& map, const Configuration& current, int window,
                                std::span<const DistanceField> fields, const WindowOptions& options = {}) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  if (options.suboptimality < 1.0) throw std::invalid_argument("suboptimality must be >= 1");
  const std::size_t n = current.size();

  // Nodes keep only the path of the agent they replanned; full paths are rebuilt from the chain.
  struct Node {
    std::optional<std::size_t> parent;
    TimedConstraint added;
    std::vector<Location> path;
    Cost path_cost = 0;
    Cost cost = 0;
    Cost end_h = 0;  // sum of h* at the horizon, the tie-break among equal costs
    std::size_t conflicts = 0;
    std::optional<WindowConflict> first;
  };
  std::vector<Node> nodes;
  std::vector<std::vector<Location>> root_paths(n);
  std::vector<Cost> root_costs(n);
  WindowStats stats;

  auto paths_of = [&](std::size_t id) {
    std::vector<std::vector<Location>> paths = root_paths;
    std::vector<std::uint8_t> seen(n, 0);
    for (std::optional<std::size_t> cur = id; cur && nodes[*cur].parent; cur = nodes[*cur].parent) {
      const auto a = static_cast<std::size_t>(nodes[*cur].added.agent);
      if (seen[a]) continue;
      seen[a] = 1;
      paths[a] = nodes[*cur].path;
    }
    return paths;
  };
  auto set_conflicts = [&](Node& node, const std::vector<std::vector<Location>>& paths) {
    node.end_h = 0;
    for (std::size_t i = 0; i < n; ++i) node.end_h += fields[i].at(paths[i].back());
    auto conflicts = find_window_conflicts(paths);
    node.conflicts = conflicts.size();
    node.first.reset();
    if (!conflicts.empty()) node.first = conflicts.front();
  };
  auto branch_constraints = [&](std::size_t id, AgentId agent) {
    std::vector<TimedConstraint> out;
    for (std::optional<std::size_t> cur = id; cur && nodes[*cur].parent; cur = nodes[*cur].parent) {
      if (nodes[*cur].added.agent == agent) out.push_back(nodes[*cur].added);
    }
    return out;
  };
  auto agent_cost_in = [&](std::size_t id, std::size_t agent) {
    for (std::optional<std::size_t> cur = id; cur && nodes[*cur].parent; cur = nodes[*cur].parent) {
      if (static_cast<std::size_t>(nodes[*cur].added.agent) == agent) return nodes[*cur].path_cost;
    }
    return root_costs[agent];
  };

  Node root;
  for (std::size_t i = 0; i < n; ++i) {
    ++stats.low_level_calls;
    auto p = space_time_astar(static_cast<AgentId>(i), current[i], {}, window, map, fields[i]);
    if (!p) throw WindowInfeasible("agent " + std::to_string(i) + " has no window path");
    root_costs[i] = windowed_path_cost(*p, fields[i]);
    root.cost += root_costs[i];
    root_paths[i] = std::move(*p);
  }
  set_conflicts(root, root_paths);
  nodes.push_back(std::move(root));
  ++stats.nodes_generated;

  auto better = [&](std::size_t x, std::size_t y) {
    const auto& a = nodes[x];
    const auto& b = nodes[y];
    return std::make_tuple(a.cost, a.end_h, a.conflicts, x) < std::make_tuple(b.cost, b.end_h, b.conflicts, y);
  };
  auto focal_better = [&](std::size_t x, std::size_t y) {
    const auto& a = nodes[x];
    const auto& b = nodes[y];
    return std::make_tuple(a.conflicts, a.cost, a.end_h, x) < std::make_tuple(b.conflicts, b.cost, b.end_h, y);
  };
  std::set<std::size_t, decltype(better)> open(better);
  std::set<std::size_t, decltype(focal_better)> focal(focal_better);
  const double w = options.suboptimality;
  open.insert(0);

  while (!open.empty()) {
    if (options.deadline && Clock::now() >= *options.deadline) throw WindowTimeout(stats);
    std::size_t id = *open.begin();
    if (w > 1.0) {
      // TODO: maintain FOCAL incrementally instead of rebuilding it every expansion.
      const double bound = w * static_cast<double>(nodes[id].cost);
      focal.clear();
      for (std::size_t o : open) {
        if (static_cast<double>(nodes[o].cost) > bound) break;
        focal.insert(o);
      }
      id = *focal.begin();
    }
    open.erase(id);
    ++stats.nodes_expanded;
    if (!nodes[id].first) {
      WindowedPlan plan;
      plan.paths = paths_of(id);
      plan.cost = nodes[id].cost;
      plan.stats = stats;
      return plan;
    }
    const WindowConflict c = *nodes[id].first;
    std::vector<TimedConstraint> branches;
    if (c.kind == ConflictKind::kVertex) {
      branches.push_back({ConstraintKind::kNegativeVertex, c.a, {}, c.vertex, c.t});
      branches.push_back({ConstraintKind::kNegativeVertex, c.b, {}, c.vertex, c.t});
    } else {
      branches.push_back({ConstraintKind::kNegativeEdge, c.a, c.from, c.to, c.t});
      branches.push_back({ConstraintKind::kNegativeEdge, c.b, c.to, c.from, c.t});
    }
    for (const auto& con : branches) {
      const auto a = static_cast<std::size_t>(con.agent);
      Node child;
      child.parent = id;
      child.added = con;
      const std::size_t child_id = nodes.size();
      nodes.push_back(std::move(child));
      auto cons = branch_constraints(child_id, con.agent);
      ++stats.low_level_calls;
      auto p = space_time_astar(con.agent, current[a], cons, window, map, fields[a]);
      if (!p) {
        nodes.pop_back();
        continue;
      }
      Node& made = nodes[child_id];
      made.path_cost = windowed_path_cost(*p, fields[a]);
      made.cost = nodes[id].cost - agent_cost_in(id, a) + made.path_cost;
      made.path = std::move(*p);
      set_conflicts(made, paths_of(child_id));
      ++stats.nodes_generated;
      open.insert(child_id);
    }
  }
  throw WindowInfeasible("windowed constraint tree exhausted");
}

}  // namespace winc
