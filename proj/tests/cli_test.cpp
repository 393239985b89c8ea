#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"
#include "winc/bench.hpp"
#include "winc/movingai.hpp"

namespace fs = std::filesystem;
using namespace winc;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("winc_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the CLI with stdout captured to a file; returns the exit status.
  int run(const std::string& args, std::string* out = nullptr) {
    const auto out_path = dir_ / "stdout.txt";
    const std::string cmd = std::string(WINC_CLI_PATH) + " " + args + " > " + out_path.string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    if (out) *out = slurp(out_path);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) {
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

const char* kOpenMap = "type octile\nheight 3\nwidth 5\nmap\n.....\n.....\n.....\n";

// One agent from (0,0) to (2,4): x is the column, y the row.
const char* kOneAgentScen = "version 1\n0\tm.map\t5\t3\t0\t0\t4\t2\t6\n";

}  // namespace

TEST_F(CliTest, SolveSingleAgentCostIsDistance) {
  write("m.map", kOpenMap);
  write("m.scen", kOneAgentScen);
  std::string out;
  EXPECT_EQ(run("solve --map " + p("m.map") + " --scen " + p("m.scen"), &out), 0);
  EXPECT_NE(out.find("outcome=solved"), std::string::npos);
  EXPECT_NE(out.find("cost=6"), std::string::npos);
}

TEST_F(CliTest, GeneratedTunnelLivelocksForWindowOne) {
  ASSERT_EQ(run("generate --kind tunnel --agents 3 --out-dir " + dir_.string()), 0);
  EXPECT_EQ(run("solve --map " + p("tunnel-3.map") + " --scen " + p("tunnel-3.scen") + " --algo wcbs --window 1"), 3);
}

TEST_F(CliTest, GeneratedConnectorSolvedBySsCbs) {
  ASSERT_EQ(run("generate --kind connector --agents 6 --out-dir " + dir_.string()), 0);
  std::string out;
  EXPECT_EQ(run("solve --map " + p("connector-6.map") + " --scen " + p("connector-6.scen") +
                    " --algo sscbs --timeout 60",
                &out),
            0);
  EXPECT_NE(out.find("outcome=solved"), std::string::npos);
}

TEST_F(CliTest, GeneratedFilesParse) {
  for (const char* kind : {"tunnel", "loopchain", "connector", "corridor-swap"}) {
    ASSERT_EQ(run(std::string("generate --kind ") + kind + " --out-dir " + dir_.string()), 0) << kind;
  }
  for (const auto& e : fs::directory_iterator(dir_)) {
    if (e.path().extension() != ".map") continue;
    const auto map = load_map_file(e.path().string());
    auto scen = e.path();
    scen.replace_extension(".scen");
    const auto stem = e.path().stem().string();
    const auto n = std::stoul(stem.substr(stem.rfind('-') + 1));
    const auto tasks = load_scen_file(scen.string(), map, n);
    EXPECT_EQ(tasks.size(), n);
    for (const auto& t : tasks) {
      EXPECT_TRUE(map.passable(t.start));
      EXPECT_TRUE(map.passable(t.goal));
    }
    std::ostringstream again;
    write_map(again, map);
    std::istringstream in(again.str());
    const auto reparsed = parse_map(in);
    EXPECT_EQ(reparsed.width(), map.width());
    EXPECT_EQ(reparsed.height(), map.height());
    for (std::size_t i = 0; i < map.cell_count(); ++i) {
      EXPECT_EQ(reparsed.passable(map.location(i)), map.passable(map.location(i)));
    }
  }
}

TEST_F(CliTest, UsageErrorsExitFour) {
  write("m.map", kOpenMap);
  write("m.scen", kOneAgentScen);
  EXPECT_EQ(run("solve --bogus"), 4);
  EXPECT_EQ(run("solve --map " + p("missing.map") + " --scen " + p("m.scen")), 4);
  EXPECT_EQ(run("solve --map " + p("m.map") + " --scen " + p("m.scen") + " --agents 5"), 4);
  EXPECT_EQ(run("generate --kind tunnel --agents 9 --out-dir " + dir_.string()), 4);
  EXPECT_EQ(run("generate --kind spiral --out-dir " + dir_.string()), 4);
}

TEST_F(CliTest, EmptyBenchPrintsHeaderOnly) {
  std::string out;
  EXPECT_EQ(run("bench", &out), 0);
  EXPECT_EQ(lines(out), (std::vector<std::string>{csv_header()}));
}

TEST_F(CliTest, BenchRowsRepeatExceptTiming) {
  ASSERT_EQ(run("generate --kind connector --agents 5 --out-dir " + dir_.string()), 0);
  std::string out;
  ASSERT_EQ(run("bench --map " + p("connector-5.map") + " --scen " + p("connector-5.scen") +
                    " --algo sscbs --seeds 1,2 --tiebreak none --jobs 2",
                &out),
            0);
  const auto rows = lines(out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], csv_header());
  auto a = split(rows[1], ',');
  auto b = split(rows[2], ',');
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t col : kTimingColumns) a[col] = b[col] = "";
  EXPECT_EQ(a, b);
  EXPECT_EQ(a[8], "solved");
}

TEST_F(CliTest, BenchMissingScenarioBecomesErrorRow) {
  write("m.map", kOpenMap);
  std::string out;
  EXPECT_EQ(run("bench --map " + p("m.map") + " --scen " + p("nope.scen") + " --algo wcbs --windows 2", &out), 0);
  const auto rows = lines(out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(split(rows[1], ',')[8], "error");
}

TEST_F(CliTest, TraceHasOneJsonLinePerIteration) {
  ASSERT_EQ(run("generate --kind corridor-swap --out-dir " + dir_.string()), 0);
  std::string out;
  ASSERT_EQ(run("solve --map " + p("corridor-swap-2.map") + " --scen " + p("corridor-swap-2.scen") + " --trace " +
                    p("t.jsonl"),
                &out),
            0);
  const auto pos = out.find("iterations=");
  ASSERT_NE(pos, std::string::npos);
  const auto iterations = std::stoul(out.substr(pos + 11));
  const auto trace = lines(slurp(dir_ / "t.jsonl"));
  ASSERT_EQ(trace.size(), iterations);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto j = nlohmann::json::parse(trace[i]);
    EXPECT_EQ(j.at("iteration").get<std::size_t>(), i);
    EXPECT_EQ(j.at("configuration").size(), 2u);
    EXPECT_EQ(j.at("next").size(), 2u);
    EXPECT_TRUE(j.contains("groups"));
    EXPECT_TRUE(j.contains("penalties_written"));
  }
}

TEST_F(CliTest, SolveCsvOutput) {
  write("m.map", kOpenMap);
  write("m.scen", kOneAgentScen);
  ASSERT_EQ(run("solve --map " + p("m.map") + " --scen " + p("m.scen") + " --out " + p("r.csv")), 0);
  const auto rows = lines(slurp(dir_ / "r.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], csv_header());
  const auto cols = split(rows[1], ',');
  EXPECT_EQ(cols[3], "sscbs");
  EXPECT_EQ(cols[8], "solved");
  EXPECT_EQ(cols[9], "6");
}
