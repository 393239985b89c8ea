#pragma once

// The windowed execution loop: ask an action generator for the next move, raise penalties on the
// groups that failed to make heuristic progress, advance, and repeat until the goal.

#include <algorithm>
#include <chrono>
#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "winc/heuristics.hpp"
#include "winc/model.hpp"
#include "winc/sscbs.hpp"
#include "winc/wcbs.hpp"

namespace winc {

/// What an action generator returns for one planning call.
struct AgOutput {
  std::vector<Configuration> steps;          // configurations to execute, in order (at least one)
  std::vector<std::vector<AgentId>> groups;  // disjoint groups for the first step
  std::size_t hp_conflicts = 0;
};

template <class G>
concept ActionGenerator = requires(G g, const Configuration& c, const PenaltyStore& s,
                                   std::optional<Clock::time_point> deadline) {
  { g.plan(c, s, deadline) } -> std::same_as<AgOutput>;
  { g.uses_penalties() } -> std::convertible_to<bool>;
};

/// SS-CBS as an action generator. Keeps the tie-breaking priorities across calls.
class SsCbsGenerator {
 public:
  SsCbsGenerator(const GridMap& map, std::span<const DistanceField> fields, AgentPriorities priorities = {},
                 double suboptimality = 1.0)
      : map_(map), fields_(fields), priorities_(std::move(priorities)), suboptimality_(suboptimality) {}

  bool uses_penalties() const { return true; }

  AgOutput plan(const Configuration& current, const PenaltyStore& store, std::optional<Clock::time_point> deadline) {
    if (called_) priorities_.advance(current, fields_);
    called_ = true;
    StepOptions opts;
    opts.suboptimality = suboptimality_;
    opts.deadline = deadline;
    auto step = plan_step(map_, current, store, fields_, priorities_, opts);
    last_ = step;
    return AgOutput{{step.next}, std::move(step.groups), step.stats.heuristic_conflicts};
  }

  const std::optional<StepResult>& last_step() const { return last_; }

 private:
  const GridMap& map_;
  std::span<const DistanceField> fields_;
  AgentPriorities priorities_;
  double suboptimality_;
  bool called_ = false;
  std::optional<StepResult> last_;
};

enum class CommitPolicy { kWindow, kSingle };

/// Windowed CBS as an action generator; commits the whole window or just its first step.
class WcbsGenerator {
 public:
  WcbsGenerator(const GridMap& map, std::span<const DistanceField> fields, int window,
                CommitPolicy commit = CommitPolicy::kWindow, double suboptimality = 1.0)
      : map_(map), fields_(fields), window_(window), commit_(commit), suboptimality_(suboptimality) {}

  bool uses_penalties() const { return false; }

  AgOutput plan(const Configuration& current, const PenaltyStore&, std::optional<Clock::time_point> deadline) {
    WindowOptions opts;
    opts.suboptimality = suboptimality_;
    opts.deadline = deadline;
    auto plan = plan_window(map_, current, window_, fields_, opts);
    AgOutput out;
    const int last = commit_ == CommitPolicy::kWindow ? window_ : 1;
    for (int t = 1; t <= last; ++t) out.steps.push_back(plan.at(t));
    for (std::size_t i = 0; i < current.size(); ++i) out.groups.push_back({static_cast<AgentId>(i)});
    return out;
  }

 private:
  const GridMap& map_;
  std::span<const DistanceField> fields_;
  int window_;
  CommitPolicy commit_;
  double suboptimality_;
};

enum class Outcome { kSolved, kTimeout, kLivelock, kAgFailure };

inline std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::kSolved: return "solved";
    case Outcome::kTimeout: return "timeout";
    case Outcome::kLivelock: return "livelock";
    case Outcome::kAgFailure: return "ag-failure";
  }
  return "ag-failure";
}

struct ExecutionResult {
  Outcome outcome = Outcome::kAgFailure;
  Cost cost = 0;
  std::size_t iterations = 0;              // executed timesteps (makespan)
  std::vector<double> iteration_ms;        // wall time of each planning call
  std::size_t hps_created = 0;
  std::size_t hp_conflicts = 0;
  Configuration final_configuration;

  double total_ms() const {
    double t = 0;
    for (double x : iteration_ms) t += x;
    return t;
  }
  double median_iteration_ms() const {
    if (iteration_ms.empty()) return 0.0;
    auto v = iteration_ms;
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    if (v.size() % 2 == 1) return v[mid];
    const double hi = v[mid];
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return (lo + hi) / 2.0;
  }
  double max_iteration_ms() const {
    return iteration_ms.empty() ? 0.0 : *std::max_element(iteration_ms.begin(), iteration_ms.end());
  }
};

struct TraceRecord {
  std::size_t iteration = 0;
  Configuration configuration;
  Configuration next;
  std::vector<std::vector<AgentId>> groups;
  std::vector<HeuristicPenalty> penalties_written;
};

struct ExecutionTrace {
  std::vector<TraceRecord> records;
};

struct EpisodeLimits {
  std::optional<double> time_budget_s;
  std::size_t iteration_cap = 0;  // 0 = 64 * (N + sum of start distances)
  std::size_t livelock_threshold = 100;
  bool record_trace = true;
};

struct Episode {
  ExecutionResult result;
  ExecutionTrace trace;
  PenaltyStore store;
};

inline std::size_t default_iteration_cap(const Instance& inst, std::span<const DistanceField> fields) {
  std::size_t sum = inst.agent_count();
  for (std::size_t i = 0; i < inst.agent_count(); ++i) {
    sum += static_cast<std::size_t>(fields[i].at(inst.tasks[i].start));
  }
  return 64 * sum;
}

/// Applies h(C_Gr) <- max(h(C_Gr), c(C_Gr, C'_Gr) + h(C'_Gr)) for every group and stores the rise
/// above h_BD(C_Gr) as a penalty on the current group configuration. Returns entries that changed.
inline std::vector<HeuristicPenalty> apply_group_updates(const Configuration& current, const Configuration& next,
                                                         std::span<const std::vector<AgentId>> groups,
                                                         PenaltyStore& store, std::span<const DistanceField> fields,
                                                         std::span<const AgentTask> tasks) {
  std::vector<HeuristicPenalty> written;
  for (const auto& group : groups) {
    std::vector<bool> mask(current.size(), false);
    for (AgentId a : group) mask[static_cast<std::size_t>(a)] = true;
    const Cost base = h_bd(current, fields, mask);
    const Cost h_cur = base + matched_penalty(current, store, mask);
    const Cost h_next = h_bd(next, fields, mask) + matched_penalty(next, store, mask);
    const auto from = restrict_to(current, group);
    const auto to = restrict_to(next, group);
    const Cost updated = std::max(h_cur, group_cost(from, to, tasks) + h_next);
    const Cost candidate = updated - base;
    if (store.upsert(from, candidate)) written.push_back({from, *store.find(from)});
  }
  return written;
}

template <ActionGenerator G>
Episode run_episode(const Instance& inst, std::span<const DistanceField> fields, G& ag, const EpisodeLimits& limits = {}) {
  using Ms = std::chrono::duration<double, std::milli>;
  Episode ep;
  auto& res = ep.result;
  const auto started = Clock::now();
  std::optional<Clock::time_point> deadline;
  if (limits.time_budget_s) {
    deadline = started + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(*limits.time_budget_s));
  }
  const std::size_t cap = limits.iteration_cap ? limits.iteration_cap : default_iteration_cap(inst, fields);
  const Configuration goal = goal_configuration(inst.tasks);
  Configuration cur = start_configuration(inst.tasks);
  std::unordered_map<Configuration, std::size_t> visits;
  const bool count_visits = !ag.uses_penalties();
  if (count_visits) visits[cur] = 1;

  auto finish = [&](Outcome o) {
    res.outcome = o;
    res.hps_created = ep.store.size();
    res.final_configuration = cur;
    return std::move(ep);
  };

  while (cur != goal) {
    if (res.iterations >= cap) return finish(Outcome::kTimeout);
    if (deadline && Clock::now() >= *deadline) return finish(Outcome::kTimeout);
    AgOutput out;
    const auto t0 = Clock::now();
    try {
      out = ag.plan(cur, ep.store, deadline);
    } catch (const SearchTimeout&) {
      res.iteration_ms.push_back(Ms(Clock::now() - t0).count());
      return finish(Outcome::kTimeout);
    } catch (const SearchInfeasible&) {
      res.iteration_ms.push_back(Ms(Clock::now() - t0).count());
      return finish(Outcome::kAgFailure);
    }
    res.iteration_ms.push_back(Ms(Clock::now() - t0).count());
    res.hp_conflicts += out.hp_conflicts;
    if (out.steps.empty()) return finish(Outcome::kAgFailure);

    std::vector<HeuristicPenalty> written;
    if (ag.uses_penalties()) {
      written = apply_group_updates(cur, out.steps.front(), out.groups, ep.store, fields, inst.tasks);
    }
    for (std::size_t k = 0; k < out.steps.size(); ++k) {
      const Configuration& nxt = out.steps[k];
      if (!valid_joint_transition(cur, nxt, inst.map)) return finish(Outcome::kAgFailure);
      if (limits.record_trace) {
        TraceRecord rec;
        rec.iteration = res.iterations;
        rec.configuration = cur;
        rec.next = nxt;
        if (k == 0) {
          rec.groups = out.groups;
          rec.penalties_written = written;
        }
        ep.trace.records.push_back(std::move(rec));
      }
      res.cost += joint_cost(cur, nxt, inst.tasks);
      cur = nxt;
      ++res.iterations;
      if (cur == goal) break;
      if (count_visits && ++visits[cur] > limits.livelock_threshold) return finish(Outcome::kLivelock);
    }
  }
  return finish(Outcome::kSolved);
}

}  // namespace winc
