#pragma once

#include <map>
#include <string>
#include <vector>

#include "linnash/harness/csv.hpp"
#include "linnash/harness/svg.hpp"
#include "linnash/runlog.hpp"

namespace linnash::harness {

inline constexpr std::size_t kMaxScatterPoints = 5000;

//! Rounds (1-based) sampled at stride, thinned evenly to at most max_points.
inline std::vector<std::size_t> scatter_rounds(std::size_t T, std::size_t stride,
                                               std::size_t max_points = kMaxScatterPoints) {
  if (stride == 0) throw InvalidArgument("scatter: stride must be >= 1");
  const std::size_t n = T / stride;
  if (n == 0)
    throw InvalidArgument("scatter: empty stride window (stride " + std::to_string(stride) + " > horizon " +
                          std::to_string(T) + ")");
  std::vector<std::size_t> out;
  const std::size_t m = std::min(n, max_points);
  out.reserve(m);
  for (std::size_t k = 0; k < m; ++k) out.push_back((k * n / m + 1) * stride);
  return out;
}

struct PhaseStat {
  int phase = 0;
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // population variance of the pulled true means
};

//! Per-phase statistics of the pulled true means; Part I is phase 0.
inline std::vector<PhaseStat> phase_stats(const std::vector<RunEntry>& entries) {
  std::map<int, std::pair<std::size_t, std::pair<double, double>>> acc;  // Welford per phase
  for (const auto& e : entries) {
    auto& [n, mv] = acc[e.phase];
    auto& [m, s] = mv;
    ++n;
    const double d = e.true_mean - m;
    m += d / static_cast<double>(n);
    s += d * (e.true_mean - m);
  }
  std::vector<PhaseStat> out;
  for (const auto& [p, v] : acc) out.push_back({p, v.first, v.second.first, v.second.second / static_cast<double>(v.first)});
  return out;
}

inline bool variance_nonincreasing(const std::vector<PhaseStat>& s) {
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i].variance > s[i - 1].variance) return false;
  return true;
}

inline std::string phase_label(int p) { return p == 0 ? "Part I" : "phase " + std::to_string(p); }

//! Round-wise true-mean scatter of one run, one colour per phase.
inline std::string scatter_svg(const CsvRun& run, std::size_t stride) {
  const auto rounds = scatter_rounds(run.entries.size(), stride);
  std::map<int, Series> by_phase;
  for (std::size_t t : rounds) {
    const RunEntry& e = run.entries[t - 1];
    Series& s = by_phase[e.phase];
    if (s.name.empty()) {
      s.name = run.algo == "ts" || e.source == PullSource::Thompson ? run.algo : phase_label(e.phase);
      s.points = true;
    }
    s.x.push_back(static_cast<double>(t));
    s.y.push_back(e.true_mean);
  }
  std::vector<Series> series;
  for (auto& [p, s] : by_phase) series.push_back(std::move(s));
  PlotSpec spec;
  spec.title = "Round-wise mean reward: " + run.algo + " (" + run.run_id + ")";
  spec.ylabel = "mean reward of pulled arm";
  return render_svg(spec, series);
}

}  // namespace linnash::harness
