#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "linnash/baselines.hpp"
#include "linnash/harness/config.hpp"
#include "linnash/linnash.hpp"
#include "linnash/metrics.hpp"

namespace linnash::harness {

inline BanditInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open instance file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument("instance file '" + path + "': " + e.what());
  }
  return instance_from_json(j);
}

inline BanditInstance make_instance(const InstanceSpec& s, std::uint64_t seed) {
  if (s.kind == "file") return load_instance(s.path);
  RngStream rng(seed, 0, "instance");
  if (s.kind == "sphere") return generate_sphere_instance(s.d, s.n_arms, s.max_mean, reward_model(s), rng);
  return generate_instance(s.d, s.n_arms, s.max_mean, reward_model(s), rng);
}

//! Runs f(0..n-1) on `workers` threads. Each index is claimed exactly once;
//! callers write results into slot i so output order never depends on
//! scheduling. The first exception is rethrown after all workers stop.
template <class F>
void parallel_for(std::size_t n, std::size_t workers, F&& f) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  }
  if (error) std::rethrow_exception(error);
}

struct ReplicaRun {
  RunLog log;
  std::optional<LinNashTrace> trace;
};

inline ReplicaRun run_replica(const BanditInstance& inst, const AlgoSpec& a, std::size_t T, SeedLineage lineage) {
  RngStream rng(std::move(lineage));
  ReplicaRun out;
  if (a.kind == "ts") {
    out.log = run_thompson(inst, T, ThompsonOptions{a.v, a.lambda_reg}, rng);
  } else {
    LinNashOptions opt;
    opt.width_scale = a.width_scale;
    opt.mvee_eps = a.mvee_eps;
    opt.design.tol = a.design_tol;
    auto res = run_linnash(inst, T, a.kind == "linnash" ? Variant::Finite : Variant::Infinite, rng, opt);
    out.log = std::move(res.log);
    out.trace = std::move(res.trace);
  }
  out.log.header.algo = a.name;
  return out;
}

struct TuningPoint {
  double v = 0.0;
  double nash = 0.0;
};

struct AlgoOutcome {
  AlgoSpec spec;  // v holds the tuned value when tuning ran
  std::vector<ReplicaRun> runs;
  std::vector<TuningPoint> tuning;
};

struct ExperimentResult {
  ExperimentConfig config;
  BanditInstance instance;
  std::vector<AlgoOutcome> algos;
};

inline void check_feasible(const ExperimentConfig& c, const BanditInstance& inst) {
  for (const auto& a : c.algorithms)
    if (a.kind != "ts" && c.horizon < inst.dim() + 1)
      throw InvalidArgument("infeasible horizon: " + a.name + " needs T >= d + 1 = " + std::to_string(inst.dim() + 1));
}

//! Picks v from the grid by pooled Nash regret on replicas that are disjoint
//! from the reported ones (purpose "<name>/tune"); ties go to the first entry.
inline std::vector<TuningPoint> tune_thompson(const BanditInstance& inst, AlgoSpec& a, const ExperimentConfig& c,
                                              std::size_t workers) {
  const std::size_t G = a.tune_v.size(), R = a.tune_replicas;
  std::vector<RunLog> logs(G * R);
  parallel_for(G * R, workers, [&](std::size_t k) {
    AlgoSpec trial = a;
    trial.v = a.tune_v[k / R];
    logs[k] = run_replica(inst, trial, c.horizon, SeedLineage{c.seed, k % R, a.name + "/tune"}).log;
  });
  std::vector<TuningPoint> pts;
  for (std::size_t g = 0; g < G; ++g) {
    const std::vector<RunLog> group(logs.begin() + static_cast<std::ptrdiff_t>(g * R),
                                    logs.begin() + static_cast<std::ptrdiff_t>((g + 1) * R));
    pts.push_back({a.tune_v[g], nash_regret(group, c.horizon)});
  }
  a.v = std::min_element(pts.begin(), pts.end(), [](auto& x, auto& y) { return x.nash < y.nash; })->v;
  return pts;
}

inline ExperimentResult run_experiment(const ExperimentConfig& c, std::size_t workers) {
  validate(c);
  ExperimentResult res{c, make_instance(c.instance, c.seed), {}};
  check_feasible(c, res.instance);
  for (const auto& a : c.algorithms) {
    AlgoOutcome o{a, {}, {}};
    if (a.kind == "ts" && !a.tune_v.empty()) o.tuning = tune_thompson(res.instance, o.spec, c, workers);
    res.algos.push_back(std::move(o));
  }
  const std::size_t A = res.algos.size(), R = c.replicas;
  std::vector<ReplicaRun> runs(A * R);
  parallel_for(A * R, workers, [&](std::size_t k) {
    const AlgoSpec& a = res.algos[k / R].spec;
    runs[k] = run_replica(res.instance, a, c.horizon, SeedLineage{c.seed, k % R, a.name});
  });
  for (std::size_t k = 0; k < runs.size(); ++k) res.algos[k / R].runs.push_back(std::move(runs[k]));
  return res;
}

inline std::vector<RunLog> logs_of(const AlgoOutcome& o) {
  std::vector<RunLog> out;
  out.reserve(o.runs.size());
  for (const auto& r : o.runs) out.push_back(r.log);
  return out;
}

}  // namespace linnash::harness
