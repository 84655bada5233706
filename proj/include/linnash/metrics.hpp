#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "linnash/common.hpp"
#include "linnash/runlog.hpp"

namespace linnash {

namespace detail {

inline void check_logs(const std::vector<RunLog>& logs, std::size_t upto) {
  if (logs.empty()) throw InvalidArgument("regret: no logs");
  for (const auto& l : logs) {
    if (l.header.instance_digest != logs[0].header.instance_digest)
      throw InvalidArgument("regret: logs come from different instances");
    if (l.header.algo != logs[0].header.algo) throw InvalidArgument("regret: logs mix algorithms");
    if (l.entries.size() < upto) throw InvalidArgument("regret: log shorter than the requested horizon");
  }
  if (upto == 0) throw InvalidArgument("regret: upto must be >= 1");
}

// Per-round cross-replica mean of the true means, rounds [0, upto).
inline std::vector<double> round_means(const std::vector<RunLog>& logs, std::size_t upto) {
  std::vector<double> m(upto, 0.0);
  for (const auto& l : logs)
    for (std::size_t t = 0; t < upto; ++t) m[t] += l.entries[t].true_mean;
  const double r = static_cast<double>(logs.size());
  for (double& v : m) v /= r;
  return m;
}

// Running geometric/arithmetic means; a zero factor pins the geometric mean
// at 0 for the rest of the horizon.
struct MeanAccumulator {
  double log_sum = 0.0;
  double sum = 0.0;
  bool zero = false;
  bool constant = true;  // every value so far equals `first`
  double first = 0.0;
  std::size_t n = 0;

  void add(double v) {
    if (n == 0) first = v;
    else if (v != first) constant = false;
    ++n;
    sum += v;
    if (v <= 0.0) zero = true;
    else log_sum += std::log(v);
  }
  double arithmetic() const { return constant ? first : sum / static_cast<double>(n); }
  // Clamped to the arithmetic mean so AM-GM holds in floating point too.
  double geometric() const {
    if (zero) return 0.0;
    if (constant) return first;
    return std::min(std::exp(log_sum / static_cast<double>(n)), arithmetic());
  }
};

}  // namespace detail

//! opt - (prod_t E[<X_t, theta*>])^(1/upto), expectations by replica average.
inline double nash_regret(const std::vector<RunLog>& logs, std::size_t upto) {
  detail::check_logs(logs, upto);
  detail::MeanAccumulator acc;
  for (double v : detail::round_means(logs, upto)) acc.add(v);
  return logs[0].header.optimum - acc.geometric();
}

inline double average_regret(const std::vector<RunLog>& logs, std::size_t upto) {
  detail::check_logs(logs, upto);
  detail::MeanAccumulator acc;
  for (double v : detail::round_means(logs, upto)) acc.add(v);
  return logs[0].header.optimum - acc.arithmetic();
}

struct RegretPoint {
  std::size_t t = 0;
  double nash = 0.0;
  double average = 0.0;
  // Nash regret of each replica on its own, averaged, and its standard error.
  double nash_per_replica = 0.0;
  double nash_per_replica_se = 0.0;
};

//! Regrets at t = stride, 2 stride, ..., always ending at T.
inline std::vector<RegretPoint> regret_curve(const std::vector<RunLog>& logs, std::size_t stride) {
  if (stride == 0) throw InvalidArgument("regret_curve: stride must be >= 1");
  if (logs.empty()) throw InvalidArgument("regret: no logs");
  const std::size_t T = logs[0].entries.size();
  detail::check_logs(logs, T);
  const double opt = logs[0].header.optimum;
  const std::vector<double> means = detail::round_means(logs, T);
  const std::size_t R = logs.size();

  detail::MeanAccumulator pooled;
  std::vector<detail::MeanAccumulator> per(R);
  std::vector<RegretPoint> out;
  for (std::size_t t = 0; t < T; ++t) {
    pooled.add(means[t]);
    for (std::size_t r = 0; r < R; ++r) per[r].add(logs[r].entries[t].true_mean);
    const std::size_t step = t + 1;
    if (step % stride != 0 && step != T) continue;
    RegretPoint p;
    p.t = step;
    p.nash = opt - pooled.geometric();
    p.average = opt - pooled.arithmetic();
    double s = 0.0, s2 = 0.0;
    for (const auto& a : per) {
      const double v = opt - a.geometric();
      s += v;
      s2 += v * v;
    }
    p.nash_per_replica = s / static_cast<double>(R);
    if (R > 1) {
      const double var = std::max(0.0, (s2 - s * s / static_cast<double>(R)) / static_cast<double>(R - 1));
      p.nash_per_replica_se = std::sqrt(var / static_cast<double>(R));
    }
    out.push_back(p);
  }
  return out;
}

//! Nash regret of a single replica at its full horizon.
inline double replica_nash_regret(const RunLog& log) {
  detail::MeanAccumulator acc;
  for (const auto& e : log.entries) acc.add(e.true_mean);
  if (acc.n == 0) throw InvalidArgument("regret: empty log");
  return log.header.optimum - acc.geometric();
}

//! Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("loglog_slope: need >= 2 paired points");
  double mx = 0, my = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidArgument("loglog_slope: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace linnash
