#pragma once

// Exhaustive ground-truth engines. Correctness fixtures only; exponential in N.

#include <cstddef>
#include <functional>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "winc/framework.hpp"
#include "winc/heuristics.hpp"
#include "winc/model.hpp"

namespace winc {

struct BruteForceStep {
  Cost value = 0;  // c(C, C') + h(C')
  Configuration next;
};

/// Calls `visit` on every valid joint successor of `current`, agent 0 varying slowest.
template <class F>
void for_each_joint_move(const Configuration& current, const GridMap& map, F&& visit) {
  const std::size_t n = current.size();
  std::vector<std::size_t> digit(n, 0);
  Configuration next = current;
  while (true) {
    bool in_map = true;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = apply(current[i], kActions[digit[i]]);
      if (!map.passable(next[i])) in_map = false;
    }
    if (in_map && valid_joint_transition(current, next, map)) visit(next);
    std::size_t k = n;
    while (k > 0) {
      if (++digit[k - 1] < kActions.size()) break;
      digit[k - 1] = 0;
      --k;
    }
    if (k == 0) return;
  }
}

/// Exact argmin of c(C, C') + h(C') over all 5^N joint moves; ties go to the smallest C'.
inline BruteForceStep brute_force_best_step(const GridMap& map, const Configuration& current,
                                            const PenaltyStore& store, std::span<const DistanceField> fields,
                                            std::span<const AgentTask> tasks) {
  if (current.size() > 8) throw std::invalid_argument("brute force limited to 8 agents");
  std::optional<BruteForceStep> best;
  for_each_joint_move(current, map, [&](const Configuration& next) {
    const Cost v = joint_cost(current, next, tasks) + evaluate_h(next, fields, store);
    if (!best || v < best->value || (v == best->value && next < best->next)) best = BruteForceStep{v, next};
  });
  if (!best) throw std::runtime_error("no valid joint move");
  return *best;
}

struct JointOptimum {
  Cost cost = 0;
  int makespan = 0;  // smallest makespan among cost-optimal solutions
};

/// Optimal sum of costs by A* over joint configurations (h = sum of distances). Agents at their
/// goal keep occupying it. nullopt when the goal configuration is unreachable.
inline std::optional<JointOptimum> joint_optimal_cost(const GridMap& map, std::span<const AgentTask> tasks,
                                                      std::span<const DistanceField> fields,
                                                      std::size_t max_states = 20'000'000) {
  const Configuration start = start_configuration(tasks);
  const Configuration goal = goal_configuration(tasks);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!fields[i].reachable(tasks[i].start)) return std::nullopt;
  }
  struct Label {
    Cost g;
    int t;
  };
  using Entry = std::tuple<Cost, int, Cost, std::size_t>;  // f, t, g, state index
  std::vector<Configuration> states{start};
  std::vector<Label> labels{{0, 0}};
  std::unordered_map<Configuration, std::size_t> index{{start, 0}};
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  open.emplace(h_bd(start, fields), 0, 0, 0);
  while (!open.empty()) {
    const auto [f, t, g, s] = open.top();
    open.pop();
    if (g != labels[s].g || t != labels[s].t) continue;
    if (states[s] == goal) return JointOptimum{g, t};
    const Configuration cur = states[s];
    for_each_joint_move(cur, map, [&](const Configuration& next) {
      const Cost ng = g + joint_cost(cur, next, tasks);
      const int nt = t + 1;
      auto [it, inserted] = index.emplace(next, states.size());
      if (inserted) {
        if (states.size() >= max_states) throw std::length_error("joint search state limit");
        states.push_back(next);
        labels.push_back({ng, nt});
      } else {
        auto& l = labels[it->second];
        if (std::pair(ng, nt) >= std::pair(l.g, l.t)) return;
        l = {ng, nt};
      }
      open.emplace(ng + h_bd(next, fields), nt, ng, it->second);
    });
  }
  return std::nullopt;
}

inline std::optional<JointOptimum> joint_optimal_cost(const Instance& inst) {
  const auto fields = compute_distance_fields(inst);
  return joint_optimal_cost(inst.map, inst.tasks, fields);
}

/// Optimal sum of costs for just the group's agents from the group's locations, others removed.
inline std::optional<Cost> group_cost_to_go(const GroupConfiguration& group, const Instance& inst,
                                            std::span<const DistanceField> fields) {
  std::vector<AgentTask> tasks;
  std::vector<DistanceField> sub_fields;
  for (const auto& [a, loc] : group.entries) {
    const auto i = static_cast<std::size_t>(a);
    tasks.push_back({static_cast<AgentId>(tasks.size()), loc, inst.tasks[i].goal});
    sub_fields.push_back(fields[i]);
  }
  const auto opt = joint_optimal_cost(inst.map, tasks, sub_fields);
  if (!opt) return std::nullopt;
  return opt->cost;
}

/// Brute-force action generator. With `whole_group` every agent forms one group, which turns the
/// framework loop into plain LRTA* over full configurations.
class BruteForceGenerator {
 public:
  BruteForceGenerator(const GridMap& map, std::span<const DistanceField> fields, std::span<const AgentTask> tasks,
                      bool whole_group = true)
      : map_(map), fields_(fields), tasks_(tasks), whole_group_(whole_group) {}

  bool uses_penalties() const { return true; }

  AgOutput plan(const Configuration& current, const PenaltyStore& store, std::optional<Clock::time_point>) {
    const auto step = brute_force_best_step(map_, current, store, fields_, tasks_);
    AgOutput out;
    out.steps.push_back(step.next);
    if (whole_group_) {
      out.groups.emplace_back();
      for (std::size_t i = 0; i < current.size(); ++i) out.groups.back().push_back(static_cast<AgentId>(i));
    } else {
      for (std::size_t i = 0; i < current.size(); ++i) out.groups.push_back({static_cast<AgentId>(i)});
    }
    return out;
  }

 private:
  const GridMap& map_;
  std::span<const DistanceField> fields_;
  std::span<const AgentTask> tasks_;
  bool whole_group_;
};

/// Framework loop with one full-configuration group per step (LRTA* in the joint space).
inline Episode joint_lrta_reference(const Instance& inst, std::span<const DistanceField> fields,
                                    const EpisodeLimits& limits = {}) {
  if (inst.agent_count() > 4) throw std::invalid_argument("joint reference limited to 4 agents");
  BruteForceGenerator ag(inst.map, fields, inst.tasks, true);
  return run_episode(inst, fields, ag, limits);
}

}  // namespace winc
