#pragma once

// Reader/writer for the MovingAI `.map` and `.scen` benchmark formats.

#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "winc/model.hpp"

namespace winc {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

namespace detail {

inline std::string rstrip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t' || s.back() == '\n')) {
    s.pop_back();
  }
  return s;
}

inline int parse_header_int(const std::string& line, const std::string& key, int line_no) {
  std::istringstream in(line);
  std::string word;
  int value = 0;
  if (!(in >> word) || word != key || !(in >> value)) {
    throw ParseError(line_no, "expected '" + key + " <int>', got '" + line + "'");
  }
  std::string rest;
  if (in >> rest) throw ParseError(line_no, "trailing data after " + key);
  return value;
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  if (line.find('\t') != std::string::npos) {
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, '\t')) fields.push_back(field);
  } else {
    std::istringstream in(line);
    std::string field;
    while (in >> field) fields.push_back(field);
  }
  return fields;
}

inline int to_int(const std::string& s, int line_no, const char* what) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw ParseError(line_no, std::string("bad ") + what + " '" + s + "'");
  }
  if (pos != s.size()) throw ParseError(line_no, std::string("bad ") + what + " '" + s + "'");
  return v;
}

}  // namespace detail

inline GridMap parse_map(std::istream& in) {
  std::string line;
  int line_no = 0;
  auto next_line = [&](const char* expected) {
    if (!std::getline(in, line)) throw ParseError(line_no + 1, std::string("missing ") + expected);
    ++line_no;
    line = detail::rstrip(line);
  };

  next_line("type line");
  {
    std::istringstream t(line);
    std::string word, kind;
    if (!(t >> word >> kind) || word != "type") throw ParseError(line_no, "expected 'type <name>'");
  }
  next_line("height line");
  const int height = detail::parse_header_int(line, "height", line_no);
  next_line("width line");
  const int width = detail::parse_header_int(line, "width", line_no);
  if (height < 1 || width < 1) throw ParseError(line_no, "map dimensions must be positive");
  next_line("map line");
  if (line != "map") throw ParseError(line_no, "expected 'map', got '" + line + "'");

  GridMap map(width, height);
  for (int r = 0; r < height; ++r) {
    next_line("grid row");
    if (static_cast<int>(line.size()) != width) {
      throw ParseError(line_no, "row has " + std::to_string(line.size()) + " cells, expected " +
                                    std::to_string(width));
    }
    for (int c = 0; c < width; ++c) {
      switch (line[static_cast<std::size_t>(c)]) {
        case '.':
        case 'G':
          break;
        case '@':
        case 'O':
        case 'T':
          map.set_blocked({r, c}, true);
          break;
        default:
          throw ParseError(line_no, std::string("unknown map character '") +
                                        line[static_cast<std::size_t>(c)] + "'");
      }
    }
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::rstrip(line).empty()) throw ParseError(line_no, "extra rows after grid");
  }
  return map;
}

inline GridMap parse_map(const std::string& text) {
  std::istringstream in(text);
  return parse_map(in);
}

inline void write_map(std::ostream& out, const GridMap& map) {
  out << "type octile\nheight " << map.height() << "\nwidth " << map.width() << "\nmap\n";
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) out << (map.blocked({r, c}) ? '@' : '.');
    out << '\n';
  }
}

/// Reads the first `n` entries of a scenario; x is the column and y the row.
inline std::vector<AgentTask> parse_scen(std::istream& in, const GridMap& map, std::size_t n) {
  std::string line;
  int line_no = 0;
  std::vector<AgentTask> tasks;
  if (n == 0) return tasks;
  if (!std::getline(in, line)) throw ParseError(1, "missing version line");
  ++line_no;
  {
    std::istringstream v(detail::rstrip(line));
    std::string word;
    if (!(v >> word) || word != "version") throw ParseError(line_no, "expected 'version <n>'");
  }
  std::set<Location> starts;
  std::set<Location> goals;
  while (tasks.size() < n && std::getline(in, line)) {
    ++line_no;
    line = detail::rstrip(line);
    if (line.empty()) continue;
    auto fields = detail::split_fields(line);
    if (fields.size() < 8) throw ParseError(line_no, "expected at least 8 fields");
    const int w = detail::to_int(fields[2], line_no, "width");
    const int h = detail::to_int(fields[3], line_no, "height");
    if (w != map.width() || h != map.height()) {
      throw ParseError(line_no, "scenario size " + std::to_string(w) + "x" + std::to_string(h) +
                                    " does not match map " + std::to_string(map.width()) + "x" +
                                    std::to_string(map.height()));
    }
    const Location start{detail::to_int(fields[5], line_no, "start y"),
                         detail::to_int(fields[4], line_no, "start x")};
    const Location goal{detail::to_int(fields[7], line_no, "goal y"),
                        detail::to_int(fields[6], line_no, "goal x")};
    if (!map.passable(start)) throw ParseError(line_no, "start " + to_string(start) + " is blocked or out of bounds");
    if (!map.passable(goal)) throw ParseError(line_no, "goal " + to_string(goal) + " is blocked or out of bounds");
    if (!starts.insert(start).second) throw ParseError(line_no, "duplicate start " + to_string(start));
    if (!goals.insert(goal).second) throw ParseError(line_no, "duplicate goal " + to_string(goal));
    tasks.push_back({static_cast<AgentId>(tasks.size()), start, goal});
  }
  if (tasks.size() < n) {
    throw ParseError(line_no, "requested " + std::to_string(n) + " agents but scenario has " +
                                  std::to_string(tasks.size()));
  }
  return tasks;
}

inline std::vector<AgentTask> parse_scen(const std::string& text, const GridMap& map, std::size_t n) {
  std::istringstream in(text);
  return parse_scen(in, map, n);
}

/// Writes tasks as a scenario. `distances` (optional) fills the last column.
inline void write_scen(std::ostream& out, const std::string& map_name, const GridMap& map,
                       const std::vector<AgentTask>& tasks, const std::vector<int>& distances = {}) {
  out << "version 1\n";
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& t = tasks[i];
    out << 0 << '\t' << map_name << '\t' << map.width() << '\t' << map.height() << '\t' << t.start.col << '\t'
        << t.start.row << '\t' << t.goal.col << '\t' << t.goal.row << '\t'
        << (i < distances.size() ? distances[i] : 0) << '\n';
  }
}

inline GridMap load_map_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open map file '" + path + "'");
  return parse_map(in);
}

inline std::vector<AgentTask> load_scen_file(const std::string& path, const GridMap& map, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file '" + path + "'");
  return parse_scen(in, map, n);
}

}  // namespace winc
