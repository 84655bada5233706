#pragma once

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "linnash/metrics.hpp"
#include "linnash/runlog.hpp"

namespace linnash::harness {

inline constexpr const char* kRunLogHeader = "run_id,algo,t,arm_index,true_mean,reward,phase";
inline constexpr const char* kSummaryHeader =
    "algo,t,nash_regret,average_regret,nash_regret_per_replica,nash_regret_per_replica_se";

//! Shortest round-trip decimal form; independent of locale and stream state.
inline void put_double(std::string& out, double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, r.ptr);
}

inline void put_uint(std::string& out, std::uint64_t v) {
  char buf[24];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, r.ptr);
}

inline std::string runlog_csv(const std::string& run_id, const RunLog& log) {
  std::string out = kRunLogHeader;
  out += '\n';
  out.reserve(out.size() + log.entries.size() * 48);
  std::size_t t = 0;
  for (const auto& e : log.entries) {
    out += run_id;
    out += ',';
    out += log.header.algo;
    out += ',';
    put_uint(out, ++t);
    out += ',';
    put_uint(out, e.arm);
    out += ',';
    put_double(out, e.true_mean);
    out += ',';
    put_double(out, e.reward);
    out += ',';
    out += phase_tag(e);
    out += '\n';
  }
  return out;
}

struct CsvRun {
  std::string run_id;
  std::string algo;
  std::vector<RunEntry> entries;
};

namespace detail {

inline double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw InvalidArgument("csv line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  return v;
}

inline std::uint64_t parse_uint(std::string_view s, std::size_t line) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw InvalidArgument("csv line " + std::to_string(line) + ": bad integer '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

//! Parses one RunLog CSV. Rows must belong to one run and be in round order.
inline CsvRun parse_runlog_csv(std::istream& in) {
  CsvRun run;
  std::string line;
  if (!std::getline(in, line) || line != kRunLogHeader) throw InvalidArgument("csv: missing or wrong header row");
  std::size_t lineno = 1;
  std::vector<std::string_view> f;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    f.clear();
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i)
      if (i == line.size() || line[i] == ',') {
        f.emplace_back(line.data() + start, i - start);
        start = i + 1;
      }
    if (f.size() != 7) throw InvalidArgument("csv line " + std::to_string(lineno) + ": expected 7 fields");
    if (run.entries.empty()) {
      run.run_id = f[0];
      run.algo = f[1];
    } else if (f[0] != run.run_id || f[1] != run.algo) {
      throw InvalidArgument("csv line " + std::to_string(lineno) + ": mixed runs in one file");
    }
    if (detail::parse_uint(f[2], lineno) != run.entries.size() + 1)
      throw InvalidArgument("csv line " + std::to_string(lineno) + ": rounds out of order");
    RunEntry e = parse_phase_tag(std::string(f[6]));
    e.arm = detail::parse_uint(f[3], lineno);
    e.true_mean = detail::parse_double(f[4], lineno);
    e.reward = detail::parse_double(f[5], lineno);
    run.entries.push_back(e);
  }
  return run;
}

inline CsvRun read_runlog_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("missing run log '" + path + "'");
  return parse_runlog_csv(in);
}

struct SummaryRow {
  std::string algo;
  RegretPoint point;
};

inline std::vector<SummaryRow> summary_rows(const std::string& algo, const std::vector<RunLog>& logs,
                                            std::size_t stride) {
  std::vector<SummaryRow> rows;
  for (const auto& p : regret_curve(logs, stride)) rows.push_back({algo, p});
  return rows;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = kSummaryHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += r.algo;
    out += ',';
    put_uint(out, r.point.t);
    for (double v : {r.point.nash, r.point.average, r.point.nash_per_replica, r.point.nash_per_replica_se}) {
      out += ',';
      put_double(out, v);
    }
    out += '\n';
  }
  return out;
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidArgument("write failed for '" + path + "'");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace linnash::harness
