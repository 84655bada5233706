#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "linnash/harness/csv.hpp"
#include "linnash/harness/runner.hpp"
#include "linnash/harness/scatter.hpp"
#include "linnash/harness/svg.hpp"

namespace linnash::harness {

namespace fs = std::filesystem;

inline std::string run_id(const std::string& algo, std::size_t replica) { return algo + "-" + std::to_string(replica); }

inline std::string run_csv_path(const std::string& out_dir, const std::string& algo, std::size_t replica) {
  char name[32];
  std::snprintf(name, sizeof name, "r%04zu.csv", replica);
  return (fs::path(out_dir) / "runs" / algo / name).string();
}

inline std::string phases_csv(const ExperimentResult& res) {
  std::string out = "algo,replica,phase,t_prime,rounds,support_size,surviving_before,surviving_after,estimated\n";
  for (const auto& a : res.algos)
    for (std::size_t r = 0; r < a.runs.size(); ++r) {
      if (!a.runs[r].trace) continue;
      for (const auto& p : a.runs[r].trace->phases) {
        out += a.spec.name + ",";
        put_uint(out, r);
        out += ',';
        put_uint(out, static_cast<std::uint64_t>(p.index));
        out += ',';
        put_double(out, p.t_prime);
        for (std::size_t v : {p.rounds, p.support_size, p.surviving_before, p.surviving_after}) {
          out += ',';
          put_uint(out, v);
        }
        out += p.estimated ? ",1\n" : ",0\n";
      }
    }
  return out;
}

inline std::string regret_svg(const ExperimentConfig& c, const std::vector<SummaryRow>& rows) {
  std::vector<Series> series;
  for (const auto& a : c.algorithms) {
    Series nash{a.name + " Nash", {}, {}, false, false};
    Series avg{a.name + " average", {}, {}, true, false};
    for (const auto& r : rows) {
      if (r.algo != a.name) continue;
      nash.x.push_back(static_cast<double>(r.point.t));
      nash.y.push_back(r.point.nash);
      avg.x.push_back(static_cast<double>(r.point.t));
      avg.y.push_back(r.point.average);
    }
    series.push_back(std::move(nash));
    series.push_back(std::move(avg));
  }
  PlotSpec spec;
  spec.title = "Regret vs rounds";
  spec.ylabel = "regret";
  spec.logx = spec.logy = c.loglog;
  return render_svg(spec, series);
}

struct RunArtifacts {
  std::vector<std::string> files;
  std::vector<SummaryRow> summary;
};

//! Writes config.json, instance.json, runs/<algo>/rNNNN.csv, summary.csv,
//! phases.csv, regret.svg and (when tuning ran) tuning.json under out_dir.
inline RunArtifacts write_run_artifacts(const ExperimentResult& res, const std::string& out_dir) {
  RunArtifacts art;
  fs::create_directories(out_dir);
  auto put = [&](const std::string& path, const std::string& bytes) {
    write_file(path, bytes);
    art.files.push_back(path);
  };
  put((fs::path(out_dir) / "config.json").string(), to_json(res.config).dump(2) + "\n");
  put((fs::path(out_dir) / "instance.json").string(), instance_to_json(res.instance).dump() + "\n");

  json tuning = json::object();
  for (const auto& a : res.algos) {
    fs::create_directories(fs::path(out_dir) / "runs" / a.spec.name);
    for (std::size_t r = 0; r < a.runs.size(); ++r)
      put(run_csv_path(out_dir, a.spec.name, r), runlog_csv(run_id(a.spec.name, r), a.runs[r].log));
    const auto rows = summary_rows(a.spec.name, logs_of(a), res.config.stride);
    art.summary.insert(art.summary.end(), rows.begin(), rows.end());
    if (!a.tuning.empty()) {
      json grid = json::array();
      for (const auto& p : a.tuning) grid.push_back({{"v", p.v}, {"nash_regret", p.nash}});
      tuning[a.spec.name] = {{"chosen_v", a.spec.v}, {"replicas", a.spec.tune_replicas}, {"grid", grid}};
    }
  }
  put((fs::path(out_dir) / "summary.csv").string(), summary_csv(art.summary));
  put((fs::path(out_dir) / "phases.csv").string(), phases_csv(res));
  put((fs::path(out_dir) / "regret.svg").string(), regret_svg(res.config, art.summary));
  if (!tuning.empty()) put((fs::path(out_dir) / "tuning.json").string(), tuning.dump(2) + "\n");
  return art;
}

//! Scatter plots for replica `replica` of every algorithm in the config,
//! read back from the CSVs a previous run wrote.
inline std::vector<std::string> write_scatter(const ExperimentConfig& c, const std::string& out_dir, std::size_t stride,
                                              std::size_t replica = 0) {
  std::vector<std::string> files;
  for (const auto& a : c.algorithms) {
    const CsvRun run = read_runlog_csv(run_csv_path(out_dir, a.name, replica));
    if (run.entries.empty()) throw InvalidArgument("run log for " + a.name + " is empty");
    const std::string path = (fs::path(out_dir) / ("scatter_" + a.name + ".svg")).string();
    write_file(path, scatter_svg(run, stride));
    files.push_back(path);
  }
  return files;
}

}  // namespace linnash::harness
