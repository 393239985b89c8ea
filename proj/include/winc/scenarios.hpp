#pragma once

// Small congested instances: reconstructions of the tunnel, loop-with-chain, connector and
// corridor-swap topologies. Layouts are fixed per (kind, agent count); a nonzero seed relabels the
// agents, which leaves the topology untouched.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "winc/model.hpp"

namespace winc {

enum class ScenarioKind { kTunnel, kLoopchain, kConnector, kCorridorSwap };

inline std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kTunnel: return "tunnel";
    case ScenarioKind::kLoopchain: return "loopchain";
    case ScenarioKind::kConnector: return "connector";
    case ScenarioKind::kCorridorSwap: return "corridor-swap";
  }
  return "tunnel";
}

inline std::optional<ScenarioKind> parse_scenario_kind(std::string_view s) {
  if (s == "tunnel") return ScenarioKind::kTunnel;
  if (s == "loopchain") return ScenarioKind::kLoopchain;
  if (s == "connector") return ScenarioKind::kConnector;
  if (s == "corridor-swap") return ScenarioKind::kCorridorSwap;
  return std::nullopt;
}

/// Inclusive agent-count range supported by each layout.
inline std::pair<int, int> scenario_agent_range(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kTunnel: return {3, 4};
    case ScenarioKind::kLoopchain: return {6, 7};
    case ScenarioKind::kConnector: return {5, 6};
    case ScenarioKind::kCorridorSwap: return {2, 2};
  }
  return {0, 0};
}

struct Scenario {
  std::string name;  // e.g. "tunnel-4"
  Instance instance;
};

namespace detail {

// Rows use '.' free and '@' blocked. Starts and goals are listed per agent.
struct Layout {
  std::vector<std::string> rows;
  std::vector<Location> starts;
  std::vector<Location> goals;
};

inline GridMap layout_map(const Layout& l) {
  GridMap map(static_cast<int>(l.rows.front().size()), static_cast<int>(l.rows.size()));
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) map.set_blocked({r, c}, l.rows[r][c] == '@');
  }
  return map;
}

// A five-cell dead-end tunnel off a 3x2 chamber; agents fill the tunnel's far end and must
// reverse their order.
inline Layout tunnel_layout(int n) {
  Layout l;
  l.rows = {
      "..@@@@@",
      ".......",
      "..@@@@@",
  };
  const int last = static_cast<int>(l.rows[1].size()) - 1;
  for (int i = 0; i < n; ++i) {
    l.starts.push_back({1, last - i});
    l.goals.push_back({1, last - (n - 1 - i)});
  }
  return l;
}

// An eight-cell loop with a three-cell dead-end chain below it. The chain's agents must reverse
// order, which needs the loop, while the loop's agents each rotate two cells clockwise.
inline Layout loopchain_layout(int n) {
  Layout l;
  l.rows = {
      "...",
      ".@.",
      "...",
      "@.@",
      "@.@",
      "@.@",
  };
  for (int i = 0; i < 3; ++i) {
    l.starts.push_back({3 + i, 1});
    l.goals.push_back({5 - i, 1});
  }
  const std::vector<Location> corners = {{0, 0}, {0, 2}, {2, 2}, {2, 0}};
  const std::vector<Location> ring = n == 6 ? std::vector<Location>{{0, 0}, {0, 2}, {2, 0}} : corners;
  for (const auto& start : ring) {
    const auto k = static_cast<std::size_t>(std::find(corners.begin(), corners.end(), start) - corners.begin());
    l.starts.push_back(start);
    l.goals.push_back(corners[(k + 1) % corners.size()]);
  }
  return l;
}

// Two 3x3 chambers joined by a five-cell connector. Two agents cross each way while one or two
// agents rest on their goals in the middle of the connector.
inline Layout connector_layout(int n) {
  Layout l;
  l.rows = {
      "...@@@@@...",
      "...........",
      "...@@@@@...",
  };
  l.starts = {{0, 0}, {2, 0}, {0, 10}, {2, 10}, {1, 5}};
  l.goals = {{0, 10}, {2, 10}, {0, 0}, {2, 0}, {1, 5}};
  if (n == 6) {
    l.starts.push_back({1, 4});
    l.goals.push_back({1, 4});
  }
  return l;
}

// A one-wide corridor with a single pocket cell near its right end; the two agents swap ends.
inline Layout corridor_swap_layout() {
  Layout l;
  l.rows = {
      "@@@@@@@@@@@@@@@@@@@@@@.@",
      "........................",
  };
  const int last = static_cast<int>(l.rows[1].size()) - 1;
  l.starts = {{1, 0}, {1, last}};
  l.goals = {{1, last}, {1, 0}};
  return l;
}

}  // namespace detail

/// Builds the instance for `kind` with `n_agents`; seed 0 keeps the canonical agent order, any
/// other seed applies a seeded relabeling of agent ids.
inline Scenario generate_scenario(ScenarioKind kind, int n_agents, std::uint64_t seed = 0) {
  const auto [lo, hi] = scenario_agent_range(kind);
  if (n_agents < lo || n_agents > hi) {
    throw std::invalid_argument(to_string(kind) + " supports " + std::to_string(lo) + "-" + std::to_string(hi) +
                                " agents, got " + std::to_string(n_agents));
  }
  detail::Layout layout;
  switch (kind) {
    case ScenarioKind::kTunnel: layout = detail::tunnel_layout(n_agents); break;
    case ScenarioKind::kLoopchain: layout = detail::loopchain_layout(n_agents); break;
    case ScenarioKind::kConnector: layout = detail::connector_layout(n_agents); break;
    case ScenarioKind::kCorridorSwap: layout = detail::corridor_swap_layout(); break;
  }
  std::vector<std::size_t> order(static_cast<std::size_t>(n_agents));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (seed != 0) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  Scenario s;
  s.name = to_string(kind) + "-" + std::to_string(n_agents);
  s.instance.map = detail::layout_map(layout);
  for (std::size_t i = 0; i < order.size(); ++i) {
    s.instance.tasks.push_back({static_cast<AgentId>(i), layout.starts[order[i]], layout.goals[order[i]]});
  }
  return s;
}

}  // namespace winc
