#pragma once

// Single-Step Conflict-Based Search: finds the one-step joint move minimizing c(C, C') + h(C'),
// where h includes stored heuristic penalties, and reports the coupled agent groups.
//
// Penalties are handled through heuristic conflicts. A CT node's f is a lower bound over every
// joint move consistent with its branch constraints: per-agent constrained optima for the cost
// and distance terms, plus the penalties that greedy selection is guaranteed to pick for every
// such move. A node is a solution once it is collision free and its own move attains that bound.
// Otherwise a still-undecided penalty entry is split into K negative children and one positive
// child that forces the entry's configuration.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "winc/heuristics.hpp"
#include "winc/model.hpp"
#include "winc/union_find.hpp"

namespace winc {

using Clock = std::chrono::steady_clock;

enum class ConstraintKind { kNegativeVertex, kPositiveVertex, kNegativeEdge };

/// A single-step constraint (timestep 1). Vertex constraints use `to` as the vertex.
struct Constraint {
  ConstraintKind kind = ConstraintKind::kNegativeVertex;
  AgentId agent = 0;
  Location from;
  Location to;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

enum class ConflictKind { kVertex, kEdge, kHeuristic };

struct Conflict {
  ConflictKind kind = ConflictKind::kVertex;
  std::vector<AgentId> agents;
  Location vertex;  // vertex conflict cell
  Location from;    // edge conflict: agents[0] moves from -> to, agents[1] to -> from
  Location to;
  std::optional<PenaltyStore::EntryId> penalty;  // heuristic conflict entry
};

enum class TieBreak { kNone, kDistance, kRandom };

inline std::string to_string(TieBreak t) {
  switch (t) {
    case TieBreak::kNone: return "none";
    case TieBreak::kDistance: return "dist";
    case TieBreak::kRandom: return "random";
  }
  return "none";
}

/// PIBT-style agent priorities used to break ties between equally good CT nodes.
class AgentPriorities {
 public:
  AgentPriorities() = default;

  static AgentPriorities make(TieBreak mode, const Configuration& start, std::span<const DistanceField> fields,
                              std::uint64_t seed = 0) {
    AgentPriorities p;
    p.mode_ = mode;
    p.values_.assign(start.size(), 0.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < start.size(); ++i) {
      if (mode == TieBreak::kDistance) p.values_[i] = static_cast<double>(fields[i].at(start[i]));
      if (mode == TieBreak::kRandom) p.values_[i] = unit(rng);
      if (start[i] == fields[i].goal()) p.values_[i] = 0.0;
    }
    return p;
  }

  TieBreak mode() const { return mode_; }
  const std::vector<double>& values() const { return values_; }

  /// One executed timestep: agents at their goal drop to 0, the rest gain 1.
  void advance(const Configuration& executed, std::span<const DistanceField> fields) {
    if (mode_ == TieBreak::kNone) return;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      values_[i] = executed[i] == fields[i].goal() ? 0.0 : values_[i] + 1.0;
    }
  }

  /// Agents by descending priority, ties by id.
  std::vector<AgentId> order() const {
    std::vector<AgentId> ids(values_.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<AgentId>(i);
    std::stable_sort(ids.begin(), ids.end(), [&](AgentId a, AgentId b) {
      return values_[static_cast<std::size_t>(a)] > values_[static_cast<std::size_t>(b)];
    });
    return ids;
  }

 private:
  TieBreak mode_ = TieBreak::kNone;
  std::vector<double> values_;
};

struct StepOptions {
  double suboptimality = 1.0;
  std::optional<Clock::time_point> deadline;
};

struct StepStats {
  std::size_t nodes_expanded = 0;
  std::size_t nodes_generated = 0;
  std::size_t heuristic_conflicts = 0;
  std::size_t children_pruned = 0;
  std::size_t hps_matched = 0;
};

struct StepResult {
  Configuration next;
  std::vector<std::vector<AgentId>> groups;
  StepStats stats;
  Cost cost = 0;  // c(C, C')
  Cost h = 0;     // h(C') including matched penalties

  Cost value() const { return cost + h; }
};

/// Raised by any action generator that runs past its deadline.
class SearchTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an action generator finds no feasible move.
class SearchInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StepTimeout : public SearchTimeout {
 public:
  explicit StepTimeout(StepStats s) : SearchTimeout("single-step search timed out"), stats(s) {}
  StepStats stats;
};

class StepInfeasible : public SearchInfeasible {
 public:
  using SearchInfeasible::SearchInfeasible;
};

struct CTNode {
  std::size_t id = 0;
  std::optional<std::size_t> parent;
  std::vector<Constraint> added;
  std::vector<std::uint8_t> allowed;  // per-agent action bitmask after branch constraints
  std::vector<std::uint8_t> forced;   // agent carries a positive constraint
  Configuration next;
  Cost g = 0;
  Cost h_bd = 0;
  Cost penalty = 0;        // penalties guaranteed for every move consistent with the branch
  Cost exact_penalty = 0;  // greedy penalty of `next` itself
  std::vector<PenaltyStore::EntryId> incurred;
  std::optional<Conflict> resolved;
  std::vector<Conflict> conflicts;
  std::size_t collisions = 0;
  std::vector<int> tie_key;

  Cost h() const { return h_bd + penalty; }
  Cost f() const { return g + h(); }
  Cost exact_f() const { return g + h_bd + exact_penalty; }
  bool collision_free() const { return collisions == 0; }
};

inline constexpr std::uint8_t action_bit(Action a) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(a)); }

/// Best single move for one agent among the actions in `allowed`: minimal step cost + h*,
/// then lower h*, then canonical action order.
inline std::optional<Location> best_move_under_mask(Location from, std::uint8_t allowed, const GridMap& map,
                                                    const DistanceField& field) {
  std::optional<Location> best;
  Cost best_total = 0;
  int best_h = 0;
  for (Action a : kActions) {
    if (!(allowed & action_bit(a))) continue;
    const Location to = apply(from, a);
    if (!map.passable(to) || !field.reachable(to)) continue;
    const int h = field.at(to);
    const Cost total = step_cost(from, to, field.goal()) + h;
    if (!best || total < best_total || (total == best_total && h < best_h)) {
      best = to;
      best_total = total;
      best_h = h;
    }
  }
  return best;
}

/// Constrained single-agent move. `constraints` must already be filtered to this agent.
inline std::optional<Location> low_level_best_move(AgentId agent, Location from,
                                                   std::span<const Constraint> constraints, const GridMap& map,
                                                   const DistanceField& field) {
  std::uint8_t allowed = 0x1f;
  for (const auto& c : constraints) {
    if (c.agent != agent) continue;
    const auto act = action_between(from, c.to);
    if (c.kind == ConstraintKind::kPositiveVertex) {
      allowed = act ? static_cast<std::uint8_t>(allowed & action_bit(*act)) : 0;
    } else if (act) {
      allowed = static_cast<std::uint8_t>(allowed & ~action_bit(*act));
    }
  }
  return best_move_under_mask(from, allowed, map, field);
}

/// Merges the agent sets of resolved conflicts into a partition of all agents.
inline std::vector<std::vector<AgentId>> merge_conflict_groups(std::span<const std::vector<AgentId>> resolved,
                                                               std::size_t n_agents) {
  UnionFind uf(n_agents);
  for (const auto& set : resolved) {
    for (std::size_t k = 1; k < set.size(); ++k) {
      uf.unite(static_cast<std::size_t>(set[0]), static_cast<std::size_t>(set[k]));
    }
  }
  return uf.components<AgentId>();
}

class SingleStepSearch {
 public:
  using NodeId = std::size_t;

  SingleStepSearch(const GridMap& map, const Configuration& current, const PenaltyStore& store,
                   std::span<const DistanceField> fields, AgentPriorities priorities = {}, StepOptions options = {})
      : map_(map), current_(current), store_(store), fields_(fields), priorities_(std::move(priorities)),
        options_(options) {
    if (fields.size() != current.size()) throw std::invalid_argument("one distance field per agent required");
    if (options_.suboptimality < 1.0) throw std::invalid_argument("suboptimality must be >= 1");
    if (!valid_configuration(current, map)) throw std::invalid_argument("current configuration is invalid");
    base_mask_.assign(current.size(), 0);
    for (std::size_t i = 0; i < current.size(); ++i) {
      agent_h(fields_[i], current[i]);
      for (Action a : kActions) {
        const Location to = apply(current[i], a);
        if (map.passable(to) && fields_[i].reachable(to)) base_mask_[i] |= action_bit(a);
      }
    }
    for (std::size_t i = 0; i < current.size(); ++i) cell_agent_.emplace(map.index(current[i]), static_cast<AgentId>(i));
    if (priorities_.mode() != TieBreak::kNone) priority_order_ = priorities_.order();
    collect_candidates();
  }

  std::size_t agent_count() const { return current_.size(); }
  const CTNode& node(NodeId id) const { return nodes_[id]; }
  std::size_t node_count() const { return nodes_.size(); }
  const StepStats& stats() const { return stats_; }

  NodeId make_root() {
    CTNode root;
    root.id = nodes_.size();
    root.allowed = base_mask_;
    root.forced.assign(agent_count(), 0);
    root.next = current_;
    for (std::size_t i = 0; i < agent_count(); ++i) {
      root.next[i] = *best_move_under_mask(current_[i], root.allowed[i], map_, fields_[i]);
    }
    finalize(root);
    seen_.insert(mask_key(root));
    nodes_.push_back(std::move(root));
    ++stats_.nodes_generated;
    return nodes_.back().id;
  }

  /// Vertex and edge conflicts, plus at most one heuristic conflict when the node's own move
  /// does not attain its bound. Recomputed from scratch.
  std::vector<Conflict> detect_conflicts(NodeId id) const {
    CTNode copy = nodes_[id];
    finalize(copy);
    return copy.conflicts;
  }

  /// Children for `conflict`; infeasible children are dropped.
  std::vector<NodeId> split_node(NodeId id, Conflict conflict) {
    std::vector<std::vector<Constraint>> branches;
    switch (conflict.kind) {
      case ConflictKind::kVertex:
        for (AgentId a : conflict.agents) {
          branches.push_back({{ConstraintKind::kNegativeVertex, a, current_[idx(a)], conflict.vertex}});
        }
        break;
      case ConflictKind::kEdge:
        branches.push_back({{ConstraintKind::kNegativeEdge, conflict.agents[0], conflict.from, conflict.to}});
        branches.push_back({{ConstraintKind::kNegativeEdge, conflict.agents[1], conflict.to, conflict.from}});
        break;
      case ConflictKind::kHeuristic: {
        ++stats_.heuristic_conflicts;
        const auto& entry = store_.entry(*conflict.penalty);
        std::vector<Constraint> positive;
        for (const auto& [a, loc] : entry.group.entries) {
          branches.push_back({{ConstraintKind::kNegativeVertex, a, current_[idx(a)], loc}});
          positive.push_back({ConstraintKind::kPositiveVertex, a, current_[idx(a)], loc});
        }
        branches.push_back(std::move(positive));
        break;
      }
    }
    std::vector<NodeId> out;
    for (auto& cons : branches) {
      auto child = make_child(id, std::move(cons), conflict);
      if (!child) {
        ++stats_.children_pruned;
        continue;
      }
      // Children with the same masks bound the same set of moves; keep the first.
      if (!seen_.insert(mask_key(*child)).second) {
        ++stats_.children_pruned;
        continue;
      }
      nodes_.push_back(std::move(*child));
      ++stats_.nodes_generated;
      out.push_back(nodes_.back().id);
    }
    return out;
  }

  /// Agent partition from the conflicts resolved along the branch ending at `id`.
  std::vector<std::vector<AgentId>> groups_of(NodeId id) const {
    std::vector<std::vector<AgentId>> sets;
    for (std::optional<NodeId> cur = id; cur; cur = nodes_[*cur].parent) {
      if (nodes_[*cur].resolved) sets.push_back(nodes_[*cur].resolved->agents);
    }
    return merge_conflict_groups(sets, agent_count());
  }

  /// Widens `groups` until no outside agent can have blocked a group from a cheaper move. A group
  /// whose move already attains the sum of its members' unconstrained best moves needs nothing.
  /// Otherwise it absorbs every outside agent whose chosen cell one of its members could have
  /// entered, and every outside agent sharing a penalty the group could complete around it.
  /// Conflicts resolved on other branches can leave such blockers out of the branch groups.
  std::vector<std::vector<AgentId>> seal_groups(std::vector<std::vector<AgentId>> groups, const CTNode& n) const {
    const std::size_t count = agent_count();
    std::vector<Cost> best_single(count);
    for (std::size_t i = 0; i < count; ++i) {
      const Location to = *best_move_under_mask(current_[i], base_mask_[i], map_, fields_[i]);
      best_single[i] = step_cost(current_[i], to, fields_[i].goal()) + fields_[i].at(to);
    }
    bool changed = true;
    while (changed && groups.size() > 1) {
      changed = false;
      UnionFind uf(count);
      for (const auto& g : groups) {
        for (std::size_t k = 1; k < g.size(); ++k) uf.unite(idx(g[0]), idx(g[k]));
      }
      for (const auto& g : groups) {
        std::vector<bool> in(count, false);
        for (AgentId a : g) in[idx(a)] = true;
        Cost chosen = matched_penalty(n.next, store_, in);
        Cost bound = 0;
        for (AgentId a : g) {
          const auto i = idx(a);
          chosen += step_cost(current_[i], n.next[i], fields_[i].goal()) + fields_[i].at(n.next[i]);
          bound += best_single[i];
        }
        if (chosen == bound) continue;
        for (AgentId a : g) {
          for (std::size_t b = 0; b < count; ++b) {
            if (!in[b] && feasible_cell_mask(base_mask_[idx(a)], idx(a), n.next[b])) uf.unite(idx(a), b);
          }
        }
        for (auto id : candidates_) {
          const auto& e = store_.entry(id);
          bool inside = false, outside = false, frozen = true;
          for (const auto& [b, loc] : e.group.entries) {
            if (in[idx(b)]) {
              inside = true;
            } else {
              outside = true;
              frozen = frozen && n.next[idx(b)] == loc;
            }
          }
          if (inside && outside && frozen) {
            for (const auto& [b, loc] : e.group.entries) uf.unite(idx(g[0]), idx(b));
          }
        }
      }
      auto merged = uf.components<AgentId>();
      changed = merged.size() != groups.size();
      groups = std::move(merged);
    }
    return groups;
  }

  /// Picks the conflict to split: lowest agent pair among collisions, else the heuristic one.
  static const Conflict* choose_conflict(const CTNode& n) {
    const Conflict* best = nullptr;
    auto pair_key = [](const Conflict& c) {
      return std::make_tuple(std::min(c.agents[0], c.agents[1]), std::max(c.agents[0], c.agents[1]),
                             static_cast<int>(c.kind));
    };
    for (const auto& c : n.conflicts) {
      if (c.kind == ConflictKind::kHeuristic) continue;
      if (!best || pair_key(c) < pair_key(*best)) best = &c;
    }
    if (best) return best;
    for (const auto& c : n.conflicts) {
      if (c.kind == ConflictKind::kHeuristic) return &c;
    }
    return nullptr;
  }

  StepResult solve() {
    const NodeId root = make_root();
    std::optional<NodeId> goal =
        options_.suboptimality > 1.0 ? solve_focal(root) : solve_best_first(root);
    if (!goal) throw StepInfeasible("constraint tree exhausted without a feasible joint move");
    const CTNode& g = nodes_[*goal];
    StepResult result;
    result.next = g.next;
    result.groups = seal_groups(groups_of(*goal), g);
    result.cost = g.g;
    result.h = g.h_bd + g.exact_penalty;
    stats_.hps_matched = matched_count(g);
    result.stats = stats_;
    return result;
  }

  /// Strict order used by the best-first open list.
  bool better(const CTNode& a, const CTNode& b) const {
    if (a.f() != b.f()) return a.f() < b.f();
    if (a.h() != b.h()) return a.h() < b.h();
    if (a.g != b.g) return a.g < b.g;
    if (a.conflicts.size() != b.conflicts.size()) return a.conflicts.size() < b.conflicts.size();
    if (a.tie_key != b.tie_key) return a.tie_key < b.tie_key;
    return a.id < b.id;
  }

 private:
  static std::size_t idx(AgentId a) { return static_cast<std::size_t>(a); }

  std::string mask_key(const CTNode& n) const {
    std::string key(agent_count(), '\0');
    for (std::size_t i = 0; i < agent_count(); ++i) key[i] = static_cast<char>(n.allowed[i] | (n.forced[i] << 5));
    return key;
  }

  void check_deadline() const {
    if (options_.deadline && Clock::now() >= *options_.deadline) throw StepTimeout(stats_);
  }

  std::optional<NodeId> solve_best_first(NodeId root) {
    auto cmp = [this](NodeId a, NodeId b) { return better(nodes_[b], nodes_[a]); };
    std::priority_queue<NodeId, std::vector<NodeId>, decltype(cmp)> open(cmp);
    open.push(root);
    while (!open.empty()) {
      check_deadline();
      const NodeId id = open.top();
      open.pop();
      ++stats_.nodes_expanded;
      const CTNode& n = nodes_[id];
      if (n.collision_free() && n.exact_f() == n.f()) return id;
      const Conflict* c = choose_conflict(n);
      if (!c) throw std::logic_error("non-goal CT node without a conflict to split");
      const Conflict conflict = *c;
      for (NodeId child : split_node(id, conflict)) open.push(child);
    }
    return std::nullopt;
  }

  // Focal search on the high level: expand the fewest-conflict node among those within
  // `suboptimality` times the best lower bound.
  std::optional<NodeId> solve_focal(NodeId root) {
    auto open_less = [this](NodeId a, NodeId b) { return better(nodes_[a], nodes_[b]); };
    auto focal_less = [this](NodeId a, NodeId b) {
      const auto& x = nodes_[a];
      const auto& y = nodes_[b];
      if (x.conflicts.size() != y.conflicts.size()) return x.conflicts.size() < y.conflicts.size();
      return better(x, y);
    };
    std::set<NodeId, decltype(open_less)> open(open_less);
    std::set<NodeId, decltype(focal_less)> focal(focal_less);
    const double w = options_.suboptimality;
    double threshold = -1.0;
    auto refresh = [&] {
      const double t = w * static_cast<double>(nodes_[*open.begin()].f());
      if (t < threshold) focal.clear();
      for (NodeId id : open) {
        const double f = static_cast<double>(nodes_[id].f());
        if (f > t) break;
        if (t < threshold || f > threshold) focal.insert(id);
      }
      threshold = t;
    };
    open.insert(root);
    refresh();
    while (!open.empty()) {
      check_deadline();
      const double lower = static_cast<double>(nodes_[*open.begin()].f());
      const NodeId id = *focal.begin();
      focal.erase(focal.begin());
      open.erase(id);
      ++stats_.nodes_expanded;
      const CTNode& n = nodes_[id];
      if (n.collision_free() && static_cast<double>(n.exact_f()) <= w * lower) return id;
      const Conflict* c = choose_conflict(n);
      if (!c) throw std::logic_error("non-goal CT node without a conflict to split");
      const Conflict conflict = *c;
      for (NodeId child : split_node(id, conflict)) {
        open.insert(child);
        if (static_cast<double>(nodes_[child].f()) <= threshold) focal.insert(child);
      }
      if (open.empty()) break;
      refresh();
    }
    return std::nullopt;
  }

  std::optional<CTNode> make_child(NodeId parent_id, std::vector<Constraint> cons, const Conflict& resolved) {
    const CTNode& parent = nodes_[parent_id];
    CTNode child;
    child.parent = parent_id;
    child.allowed = parent.allowed;
    child.forced = parent.forced;
    child.next = parent.next;
    child.resolved = resolved;
    for (const auto& c : cons) {
      const std::size_t a = idx(c.agent);
      const auto act = action_between(current_[a], c.to);
      if (c.kind == ConstraintKind::kPositiveVertex) {
        if (!act) return std::nullopt;
        child.allowed[a] &= action_bit(*act);
        child.forced[a] = 1;
        for (std::size_t b = 0; b < agent_count(); ++b) {
          if (b == a) continue;
          if (auto other = action_between(current_[b], c.to)) {
            child.allowed[b] = static_cast<std::uint8_t>(child.allowed[b] & ~action_bit(*other));
          }
        }
      } else if (act) {
        child.allowed[a] = static_cast<std::uint8_t>(child.allowed[a] & ~action_bit(*act));
      }
    }
    for (std::size_t a = 0; a < agent_count(); ++a) {
      if (child.allowed[a] == 0) return std::nullopt;
      const auto act = action_between(current_[a], child.next[a]);
      if (act && (child.allowed[a] & action_bit(*act))) continue;
      auto mv = best_move_under_mask(current_[a], child.allowed[a], map_, fields_[a]);
      if (!mv) return std::nullopt;
      child.next[a] = *mv;
    }
    child.added = std::move(cons);
    child.id = nodes_.size();
    finalize(child);
    return child;
  }

  // True iff `loc` is reachable in one allowed move for agent `b` in node `n`.
  bool feasible_cell(const CTNode& n, std::size_t b, Location loc) const {
    return feasible_cell_mask(n.allowed[b], b, loc);
  }
  bool feasible_cell_mask(std::uint8_t mask, std::size_t b, Location loc) const {
    const auto act = action_between(current_[b], loc);
    return act && (mask & action_bit(*act));
  }

  void finalize(CTNode& n) const {
    const std::size_t count = agent_count();
    n.g = 0;
    n.h_bd = 0;
    for (std::size_t i = 0; i < count; ++i) {
      n.g += step_cost(current_[i], n.next[i], fields_[i].goal());
      n.h_bd += fields_[i].at(n.next[i]);
    }
    n.conflicts.clear();
    detect_collisions(n);
    n.collisions = n.conflicts.size();
    analyze_penalties(n);
    if (!priority_order_.empty()) {
      n.tie_key.clear();
      for (AgentId a : priority_order_) n.tie_key.push_back(fields_[idx(a)].at(n.next[idx(a)]));
    }
  }

  void detect_collisions(CTNode& n) const {
    std::vector<std::pair<std::size_t, AgentId>> by_cell;
    by_cell.reserve(agent_count());
    for (std::size_t i = 0; i < agent_count(); ++i) by_cell.emplace_back(map_.index(n.next[i]), static_cast<AgentId>(i));
    std::sort(by_cell.begin(), by_cell.end());
    std::vector<Conflict> found;
    for (std::size_t x = 0; x < by_cell.size(); ++x) {
      for (std::size_t y = x + 1; y < by_cell.size() && by_cell[y].first == by_cell[x].first; ++y) {
        Conflict c;
        c.kind = ConflictKind::kVertex;
        c.agents = {by_cell[x].second, by_cell[y].second};
        c.vertex = n.next[idx(by_cell[x].second)];
        found.push_back(c);
      }
    }
    for (std::size_t i = 0; i < agent_count(); ++i) {
      if (n.next[i] == current_[i]) continue;
      auto it = cell_agent_.find(map_.index(n.next[i]));
      if (it == cell_agent_.end()) continue;
      const std::size_t j = idx(it->second);
      if (j <= i || n.next[j] != current_[i]) continue;
      Conflict c;
      c.kind = ConflictKind::kEdge;
      c.agents = {static_cast<AgentId>(i), static_cast<AgentId>(j)};
      c.from = current_[i];
      c.to = current_[j];
      found.push_back(c);
    }
    std::sort(found.begin(), found.end(), [](const Conflict& a, const Conflict& b) {
      return std::make_tuple(a.agents[0], a.agents[1], static_cast<int>(a.kind)) <
             std::make_tuple(b.agents[0], b.agents[1], static_cast<int>(b.kind));
    });
    n.conflicts = std::move(found);
  }

  // Entries reachable under the unconstrained root masks, sorted by greedy rank.
  void collect_candidates() {
    for (std::size_t a = 0; a < agent_count(); ++a) {
      for (Action act : kActions) {
        if (!(base_mask_[a] & action_bit(act))) continue;
        for (auto id : store_.anchored_at(static_cast<AgentId>(a), apply(current_[a], act))) {
          const auto& e = store_.entry(id);
          bool ok = true;
          for (std::size_t k = 1; k < e.group.entries.size() && ok; ++k) {
            const auto b = idx(e.group.entries[k].first);
            ok = b < agent_count() && feasible_cell_mask(base_mask_[b], b, e.group.entries[k].second);
          }
          if (ok) candidates_.push_back(id);
        }
      }
    }
    std::sort(candidates_.begin(), candidates_.end(),
              [&](auto x, auto y) { return ranks_before(store_.entry(x), store_.entry(y)); });
  }

  // Computes the guaranteed penalty bound, the exact penalty of the node's move, and, when the
  // two differ, the entry to split as a heuristic conflict. Entries are walked in greedy order;
  // only those some move consistent with the node's constraints could match take part. An entry
  // is surely picked if it must match and nothing ranked above it that might be picked shares an
  // agent.
  void analyze_penalties(CTNode& n) const {
    n.penalty = 0;
    n.exact_penalty = 0;
    n.incurred.clear();
    if (candidates_.empty()) return;
    auto& sure = scratch_sure_;
    auto& maybe = scratch_maybe_;
    auto& taken = scratch_taken_;
    sure.assign(agent_count(), 0);
    maybe.assign(agent_count(), 0);
    taken.assign(agent_count(), 0);
    std::optional<PenaltyStore::EntryId> first_undecided;
    std::optional<PenaltyStore::EntryId> first_undecided_matched;
    for (auto id : candidates_) {
      const auto& e = store_.entry(id);
      bool feasible = true;
      bool certain = true;
      bool hits_sure = false;
      bool hits_maybe = false;
      bool matches = true;
      bool hits_taken = false;
      for (const auto& [b, loc] : e.group.entries) {
        const auto i = idx(b);
        if (!feasible_cell(n, i, loc)) {
          feasible = false;
          break;
        }
        certain = certain && n.forced[i];
        hits_sure = hits_sure || sure[i];
        hits_maybe = hits_maybe || maybe[i];
        matches = matches && n.next[i] == loc;
        hits_taken = hits_taken || taken[i];
      }
      if (!feasible) continue;
      if (matches && !hits_taken) {
        n.exact_penalty += e.penalty;
        for (const auto& [b, loc] : e.group.entries) taken[idx(b)] = 1;
      }
      if (hits_sure) continue;
      if (certain && !hits_maybe) {
        n.penalty += e.penalty;
        n.incurred.push_back(id);
        for (const auto& [b, loc] : e.group.entries) sure[idx(b)] = 1;
        continue;
      }
      for (const auto& [b, loc] : e.group.entries) maybe[idx(b)] = 1;
      if (!certain) {
        if (!first_undecided) first_undecided = id;
        if (matches && !first_undecided_matched) first_undecided_matched = id;
      }
    }

    if (n.exact_penalty == n.penalty) return;
    if (!first_undecided) throw std::logic_error("penalty bound gap without an undecided entry");
    const auto chosen = first_undecided_matched ? *first_undecided_matched : *first_undecided;
    Conflict c;
    c.kind = ConflictKind::kHeuristic;
    c.agents = store_.entry(chosen).group.agents();
    c.penalty = chosen;
    n.conflicts.push_back(std::move(c));
  }

  std::size_t matched_count(const CTNode& n) const {
    std::vector<bool> all(agent_count(), true);
    auto ids = matching_entries(n.next, store_, all);
    return greedy_disjoint(ids, store_, agent_count()).size();
  }

  const GridMap& map_;
  Configuration current_;
  const PenaltyStore& store_;
  std::span<const DistanceField> fields_;
  AgentPriorities priorities_;
  StepOptions options_;
  std::vector<std::uint8_t> base_mask_;
  std::unordered_map<std::size_t, AgentId> cell_agent_;
  std::vector<AgentId> priority_order_;
  std::vector<PenaltyStore::EntryId> candidates_;
  mutable std::vector<std::uint8_t> scratch_sure_;
  mutable std::vector<std::uint8_t> scratch_maybe_;
  mutable std::vector<std::uint8_t> scratch_taken_;
  std::deque<CTNode> nodes_;
  std::unordered_set<std::string> seen_;
  StepStats stats_;
};

/// One SS-CBS planning call.
inline StepResult plan_step(const GridMap& map, const Configuration& current, const PenaltyStore& store,
                            std::span<const DistanceField> fields, const AgentPriorities& priorities = {},
                            const StepOptions& options = {}) {
  SingleStepSearch search(map, current, store, fields, priorities, options);
  return search.solve();
}

/// Agent partition from the conflicts resolved on the branch ending at `goal_node`.
inline std::vector<std::vector<AgentId>> extract_disjoint_groups(const SingleStepSearch& search,
                                                                 SingleStepSearch::NodeId goal_node) {
  return search.groups_of(goal_node);
}

}  // namespace winc
