#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "winc/bench.hpp"
#include "winc/movingai.hpp"
#include "winc/scenarios.hpp"

namespace fs = std::filesystem;
using namespace winc;

namespace {

constexpr int kExitUsage = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code(Outcome o) {
  switch (o) {
    case Outcome::kSolved: return 0;
    case Outcome::kTimeout: return 2;
    case Outcome::kLivelock: return 3;
    case Outcome::kAgFailure: return 1;
  }
  return 1;
}

std::size_t scen_entry_count(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open scenario file '" + path + "'");
  std::string line;
  std::size_t n = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      continue;
    }
    if (line.find_first_not_of(" \t\r") != std::string::npos) ++n;
  }
  return n;
}

Instance load_instance(const std::string& map_path, const std::string& scen_path, std::size_t agents) {
  try {
    Instance inst;
    inst.map = load_map_file(map_path);
    const std::size_t n = agents ? agents : scen_entry_count(scen_path);
    inst.tasks = load_scen_file(scen_path, inst.map, n);
    return inst;
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
}

// Shared flags between solve and bench.
struct AlgoFlags {
  std::string tiebreak = "none";
  double subopt = 1.0;
  double timeout = 60.0;
  std::string commit = "window";
  // Unset means no cap: the wall-clock budget alone ends an episode.
  std::optional<std::size_t> iteration_cap;

  void add(CLI::App* app) {
    app->add_option("--tiebreak", tiebreak, "SS-CBS tie-breaking")->check(CLI::IsMember({"none", "dist", "random"}));
    app->add_option("--subopt", subopt, "high-level suboptimality factor")->check(CLI::Range(1.0, 1e9));
    app->add_option("--timeout", timeout, "per-episode wall-clock budget in seconds")->check(CLI::PositiveNumber);
    app->add_option("--commit", commit, "wCBS steps executed per plan")->check(CLI::IsMember({"window", "1"}));
    app->add_option("--iteration-cap", iteration_cap, "iteration cap; 0 selects 64 * (N + sum of start distances)");
  }

  RunConfig config() const {
    RunConfig c;
    c.tiebreak = tiebreak == "dist" ? TieBreak::kDistance : tiebreak == "random" ? TieBreak::kRandom : TieBreak::kNone;
    c.suboptimality = subopt;
    c.timeout_s = timeout;
    c.commit = commit == "1" ? CommitPolicy::kSingle : CommitPolicy::kWindow;
    c.iteration_cap = iteration_cap ? *iteration_cap : std::numeric_limits<std::size_t>::max();
    return c;
  }
};

struct SolveArgs {
  std::string map, scen, algo = "sscbs", trace, out;
  std::size_t agents = 0;
  int window = 1;
  std::uint64_t seed = 0;
  AlgoFlags flags;
};

int run_solve(const SolveArgs& a) {
  const auto inst = std::make_shared<const Instance>(load_instance(a.map, a.scen, a.agents));
  const auto fields = compute_distance_fields(*inst);
  RunConfig cfg = a.flags.config();
  cfg.algo = a.algo == "wcbs" ? Algo::kWcbs : Algo::kSsCbs;
  cfg.window = a.window;
  cfg.seed = a.seed;
  cfg.record_trace = !a.trace.empty();
  auto ep = run_configured(*inst, fields, cfg);
  const auto& r = ep.result;
  std::printf("outcome=%s cost=%lld iterations=%zu median_iter_ms=%.3f max_iter_ms=%.3f hps_created=%zu hp_conflicts=%zu\n",
              to_string(r.outcome).c_str(), static_cast<long long>(r.cost), r.iterations, r.median_iteration_ms(),
              r.max_iteration_ms(), r.hps_created, r.hp_conflicts);
  if (!a.trace.empty()) {
    std::ofstream t(a.trace);
    if (!t) throw UsageError("cannot write trace file '" + a.trace + "'");
    write_trace_jsonl(t, ep.trace);
  }
  if (!a.out.empty()) {
    std::ofstream o(a.out);
    if (!o) throw UsageError("cannot write output file '" + a.out + "'");
    BenchRow row{fs::path(a.map).filename().string(), fs::path(a.scen).filename().string(), inst->agent_count(), cfg,
                 to_string(r.outcome), r};
    write_csv(o, {row});
  }
  return exit_code(r.outcome);
}

struct BenchArgs {
  std::string map, scen_dir, out, seeds = "1";
  std::vector<std::string> scens;
  std::vector<std::size_t> agents;
  std::vector<std::string> algos{"sscbs"};
  std::vector<int> windows{1};
  unsigned jobs = 1;
  AlgoFlags flags;
};

// Accepts "3", "1,2,5" or "1-20".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string part;
  try {
    while (std::getline(ss, part, ',')) {
      const auto dash = part.find('-');
      if (dash == std::string::npos) {
        out.push_back(std::stoull(part));
        continue;
      }
      const auto lo = std::stoull(part.substr(0, dash));
      const auto hi = std::stoull(part.substr(dash + 1));
      if (hi < lo) throw UsageError("empty seed range '" + part + "'");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    }
  } catch (const std::logic_error&) {
    throw UsageError("bad --seeds value '" + text + "'");
  }
  return out;
}

int run_bench_cmd(const BenchArgs& a) {
  std::vector<std::string> scens = a.scens;
  if (!a.scen_dir.empty()) {
    if (!fs::is_directory(a.scen_dir)) throw UsageError("not a directory: '" + a.scen_dir + "'");
    std::vector<std::string> found;
    for (const auto& e : fs::directory_iterator(a.scen_dir)) {
      if (e.path().extension() == ".scen") found.push_back(e.path().string());
    }
    std::sort(found.begin(), found.end());
    scens.insert(scens.end(), found.begin(), found.end());
  }
  if (!scens.empty() && a.map.empty()) throw UsageError("--map is required with scenarios");
  const auto seeds = parse_seeds(a.seeds);
  const std::string map_name = a.map.empty() ? "" : fs::path(a.map).filename().string();

  std::vector<BenchJob> jobs;
  for (const auto& scen : scens) {
    const std::string scen_name = fs::path(scen).filename().string();
    std::vector<std::size_t> counts = a.agents;
    if (counts.empty()) counts.push_back(0);
    for (std::size_t n : counts) {
      std::shared_ptr<const Instance> inst;
      std::string err;
      try {
        inst = std::make_shared<const Instance>(load_instance(a.map, scen, n));
      } catch (const UsageError& e) {
        err = e.what();
        std::cerr << "warning: " << scen << " (" << n << " agents): " << err << '\n';
      }
      for (const auto& algo : a.algos) {
        RunConfig base = a.flags.config();
        if (algo == "sscbs") {
          for (auto seed : seeds) {
            BenchJob j{map_name, scen_name, inst, err, base, n};
            j.config.algo = Algo::kSsCbs;
            j.config.seed = seed;
            jobs.push_back(std::move(j));
          }
        } else {
          for (int w : a.windows) {
            BenchJob j{map_name, scen_name, inst, err, base, n};
            j.config.algo = Algo::kWcbs;
            j.config.window = w;
            jobs.push_back(std::move(j));
          }
        }
      }
    }
  }
  const auto rows = run_bench(jobs, a.jobs);
  if (a.out.empty()) {
    write_csv(std::cout, rows);
  } else {
    std::ofstream o(a.out);
    if (!o) throw UsageError("cannot write output file '" + a.out + "'");
    write_csv(o, rows);
  }
  return 0;
}

struct GenerateArgs {
  std::string kind, out_dir = ".";
  int agents = 0;
  std::uint64_t seed = 0;
};

int run_generate(const GenerateArgs& a) {
  const auto kind = parse_scenario_kind(a.kind);
  if (!kind) throw UsageError("unknown scenario kind '" + a.kind + "'");
  int n = a.agents;
  if (n == 0) n = scenario_agent_range(*kind).second;
  Scenario s;
  try {
    s = generate_scenario(*kind, n, a.seed);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  fs::create_directories(a.out_dir);
  const auto map_path = fs::path(a.out_dir) / (s.name + ".map");
  const auto scen_path = fs::path(a.out_dir) / (s.name + ".scen");
  const auto fields = compute_distance_fields(s.instance);
  std::vector<int> dist;
  for (std::size_t i = 0; i < s.instance.tasks.size(); ++i) {
    dist.push_back(static_cast<int>(fields[i].at(s.instance.tasks[i].start)));
  }
  std::ofstream m(map_path), sc(scen_path);
  if (!m || !sc) throw UsageError("cannot write into '" + a.out_dir + "'");
  write_map(m, s.instance.map);
  write_scen(sc, map_path.filename().string(), s.instance.map, s.instance.tasks, dist);
  std::cout << "wrote " << map_path.string() << " and " << scen_path.string() << " (reconstructed " << a.kind
            << " layout, " << n << " agents)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Windowed MAPF with single-step CBS and a windowed CBS baseline"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* sc = app.add_subcommand("solve", "run one episode");
  sc->add_option("--map", solve.map, "MovingAI map file")->required();
  sc->add_option("--scen", solve.scen, "MovingAI scenario file")->required();
  sc->add_option("--agents", solve.agents, "use the first N agents (default all)");
  sc->add_option("--algo", solve.algo, "action generator")->check(CLI::IsMember({"sscbs", "wcbs"}));
  sc->add_option("--window", solve.window, "wCBS window")->check(CLI::PositiveNumber);
  sc->add_option("--seed", solve.seed, "seed for random tie-breaking");
  sc->add_option("--trace", solve.trace, "write a JSONL trace here");
  sc->add_option("--out", solve.out, "write the result as CSV here");
  solve.flags.add(sc);

  BenchArgs bench;
  auto* bc = app.add_subcommand("bench", "run a batch of episodes and emit CSV");
  bc->add_option("--map", bench.map, "MovingAI map file shared by all scenarios");
  bc->add_option("--scen", bench.scens, "scenario files")->expected(0, -1);
  bc->add_option("--scen-dir", bench.scen_dir, "directory of .scen files");
  bc->add_option("--agents", bench.agents, "agent counts to sweep (default all)")->delimiter(',');
  bc->add_option("--algo", bench.algos, "algorithms")->delimiter(',')->check(CLI::IsMember({"sscbs", "wcbs"}));
  bc->add_option("--windows", bench.windows, "wCBS windows")->delimiter(',')->check(CLI::PositiveNumber);
  bc->add_option("--seeds", bench.seeds, "SS-CBS seeds: N, a,b,c or lo-hi");
  bc->add_option("--jobs", bench.jobs, "episodes run concurrently")->check(CLI::PositiveNumber);
  bc->add_option("--out", bench.out, "CSV path (default stdout)");
  bench.flags.add(bc);

  GenerateArgs gen;
  auto* gc = app.add_subcommand("generate", "write a congested scenario as map and scen files");
  gc->add_option("--kind", gen.kind, "tunnel, loopchain, connector or corridor-swap")->required();
  gc->add_option("--agents", gen.agents, "agent count (default the largest supported)");
  gc->add_option("--seed", gen.seed, "nonzero relabels the agents");
  gc->add_option("--out-dir", gen.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  try {
    if (*sc) return run_solve(solve);
    if (*bc) return run_bench_cmd(bench);
    return run_generate(gen);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
