#pragma once

// Batch experiment harness: one episode per job, CSV rows in job order, optional JSONL traces.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "winc/framework.hpp"
#include "winc/heuristics.hpp"
#include "winc/model.hpp"

namespace winc {

enum class Algo { kSsCbs, kWcbs };

inline std::string to_string(Algo a) { return a == Algo::kSsCbs ? "sscbs" : "wcbs"; }

struct RunConfig {
  Algo algo = Algo::kSsCbs;
  int window = 1;  // wcbs only
  CommitPolicy commit = CommitPolicy::kWindow;
  double suboptimality = 1.0;
  TieBreak tiebreak = TieBreak::kNone;  // sscbs only
  std::uint64_t seed = 0;
  double timeout_s = 60.0;
  std::size_t iteration_cap = 0;  // 0 = default cap
  bool record_trace = false;
};

/// Runs one episode of the configured algorithm on `inst`.
inline Episode run_configured(const Instance& inst, std::span<const DistanceField> fields, const RunConfig& cfg) {
  EpisodeLimits limits;
  limits.time_budget_s = cfg.timeout_s;
  limits.iteration_cap = cfg.iteration_cap;
  limits.record_trace = cfg.record_trace;
  if (cfg.algo == Algo::kSsCbs) {
    auto pr = AgentPriorities::make(cfg.tiebreak, start_configuration(inst.tasks), fields, cfg.seed);
    SsCbsGenerator ag(inst.map, fields, std::move(pr), cfg.suboptimality);
    return run_episode(inst, fields, ag, limits);
  }
  WcbsGenerator ag(inst.map, fields, cfg.window, cfg.commit, cfg.suboptimality);
  return run_episode(inst, fields, ag, limits);
}

struct BenchJob {
  std::string map_name;
  std::string scen_name;
  std::shared_ptr<const Instance> instance;  // null when loading failed
  std::string load_error;
  RunConfig config;
  std::size_t requested_agents = 0;  // reported when the instance failed to load
};

struct BenchRow {
  std::string map_name;
  std::string scen_name;
  std::size_t n_agents = 0;
  RunConfig config;
  std::string outcome;
  std::optional<ExecutionResult> result;  // empty when the job could not run
};

inline const char* csv_header() {
  return "map,scen,n_agents,algo,window,subopt,tiebreak,seed,outcome,cost,iterations,total_ms,median_iter_ms,"
         "max_iter_ms,hps_created,hp_conflicts";
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string fixed(double v, int digits) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << v;
  return o.str();
}

}  // namespace detail

/// Fields that do not apply stay empty: window for sscbs, seed unless ties are broken randomly,
/// and tiebreak and penalty counts for wcbs.
inline std::string to_csv(const BenchRow& row) {
  const auto& c = row.config;
  const bool ss = c.algo == Algo::kSsCbs;
  std::vector<std::string> f;
  f.push_back(detail::csv_field(row.map_name));
  f.push_back(detail::csv_field(row.scen_name));
  f.push_back(std::to_string(row.n_agents));
  f.push_back(to_string(c.algo) + (!ss && c.commit == CommitPolicy::kSingle ? "-commit1" : ""));
  f.push_back(ss ? "" : std::to_string(c.window));
  f.push_back(detail::fixed(c.suboptimality, 3));
  f.push_back(ss ? to_string(c.tiebreak) : "");
  f.push_back(ss && c.tiebreak == TieBreak::kRandom ? std::to_string(c.seed) : "");
  f.push_back(row.outcome);
  if (row.result) {
    const auto& r = *row.result;
    f.push_back(std::to_string(r.cost));
    f.push_back(std::to_string(r.iterations));
    f.push_back(detail::fixed(r.total_ms(), 3));
    f.push_back(detail::fixed(r.median_iteration_ms(), 3));
    f.push_back(detail::fixed(r.max_iteration_ms(), 3));
    f.push_back(ss ? std::to_string(r.hps_created) : "");
    f.push_back(ss ? std::to_string(r.hp_conflicts) : "");
  } else {
    f.insert(f.end(), 7, "");
  }
  std::string line;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (i) line += ',';
    line += f[i];
  }
  return line;
}

/// Zero-based indices of the timing columns (total, median and max milliseconds).
inline constexpr std::size_t kTimingColumns[] = {11, 12, 13};

inline BenchRow run_job(const BenchJob& job) {
  BenchRow row;
  row.map_name = job.map_name;
  row.scen_name = job.scen_name;
  row.config = job.config;
  row.n_agents = job.requested_agents;
  if (!job.instance) {
    row.outcome = "error";
    return row;
  }
  row.n_agents = job.instance->agent_count();
  try {
    const auto fields = compute_distance_fields(*job.instance);
    auto cfg = job.config;
    cfg.record_trace = false;
    auto ep = run_configured(*job.instance, fields, cfg);
    row.outcome = to_string(ep.result.outcome);
    row.result = std::move(ep.result);
  } catch (const std::bad_alloc&) {
    row.outcome = "ag-failure";
  } catch (const std::exception&) {
    row.outcome = "error";
  }
  return row;
}

/// Runs all jobs on up to `parallelism` threads; rows come back in job order.
inline std::vector<BenchRow> run_bench(const std::vector<BenchJob>& jobs, unsigned parallelism = 1) {
  std::vector<BenchRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) rows[i] = run_job(jobs[i]);
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(parallelism, static_cast<unsigned>(jobs.size())));
  if (threads <= 1) {
    worker();
    return rows;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return rows;
}

inline void write_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << csv_header() << '\n';
  for (const auto& r : rows) out << to_csv(r) << '\n';
}

inline nlohmann::ordered_json to_json(Location loc) { return nlohmann::ordered_json::array({loc.row, loc.col}); }

inline nlohmann::ordered_json to_json(const Configuration& c) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& loc : c.locations) arr.push_back(to_json(loc));
  return arr;
}

inline nlohmann::ordered_json to_json(const TraceRecord& rec) {
  nlohmann::ordered_json j;
  j["iteration"] = rec.iteration;
  j["configuration"] = to_json(rec.configuration);
  j["next"] = to_json(rec.next);
  j["groups"] = rec.groups;
  auto pens = nlohmann::ordered_json::array();
  for (const auto& hp : rec.penalties_written) {
    auto group = nlohmann::ordered_json::array();
    for (const auto& [a, loc] : hp.group.entries) group.push_back({{"agent", a}, {"loc", to_json(loc)}});
    pens.push_back({{"group", group}, {"penalty", hp.penalty}});
  }
  j["penalties_written"] = pens;
  return j;
}

/// One JSON object per executed timestep.
inline void write_trace_jsonl(std::ostream& out, const ExecutionTrace& trace) {
  for (const auto& rec : trace.records) out << to_json(rec).dump() << '\n';
}

}  // namespace winc
