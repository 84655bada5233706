// linnash: run, plot and validate LinNash / Thompson-sampling experiments.

#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "linnash/harness/artifacts.hpp"
#include "linnash/harness/validate.hpp"

namespace h = linnash::harness;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> scale;
  std::optional<std::string> out;
  std::optional<std::size_t> stride;
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
};

// --config takes a JSON file, or a preset name when no such file exists.
h::ExperimentConfig load_config(const Common& c) {
  h::ExperimentConfig cfg;
  if (c.config.empty()) throw linnash::InvalidArgument("--config is required (file or preset name)");
  if (fs::exists(c.config)) {
    if (c.scale) throw linnash::InvalidArgument("--scale applies to presets only");
    h::json j;
    try {
      j = h::json::parse(h::read_file(c.config));
    } catch (const h::json::exception& e) {
      throw linnash::InvalidArgument("config '" + c.config + "': " + e.what());
    }
    cfg = h::config_from_json(j);
  } else {
    cfg = h::preset(c.config, c.scale.value_or(1.0));
  }
  if (c.seed) cfg.seed = *c.seed;
  if (c.out) cfg.out_dir = *c.out;
  if (c.stride) cfg.stride = *c.stride;
  h::validate(cfg);
  return cfg;
}

void add_common(CLI::App* app, Common& c, bool with_workers) {
  app->add_option("--config", c.config, "experiment JSON file or preset name (paper-figure1)");
  app->add_option("--seed", c.seed, "master seed (overrides the config)");
  app->add_option("--scale", c.scale, "preset scaler");
  app->add_option("--out", c.out, "output directory (overrides the config)");
  app->add_option("--stride", c.stride, "round stride for summaries and plots")->check(CLI::PositiveNumber);
  if (with_workers) app->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
}

int cmd_run(const Common& c) {
  const h::ExperimentConfig cfg = load_config(c);
  const h::ExperimentResult res = h::run_experiment(cfg, c.workers);
  const h::RunArtifacts art = h::write_run_artifacts(res, cfg.out_dir);
  for (const auto& a : res.algos) {
    const auto logs = h::logs_of(a);
    std::cout << a.spec.name << ": T=" << cfg.horizon << " replicas=" << cfg.replicas
              << " nash_regret=" << linnash::nash_regret(logs, cfg.horizon)
              << " average_regret=" << linnash::average_regret(logs, cfg.horizon);
    if (!a.tuning.empty()) std::cout << " tuned_v=" << a.spec.v;
    std::cout << "\n";
  }
  std::cout << "wrote " << art.files.size() << " files under " << cfg.out_dir << "\n";
  return 0;
}

int cmd_scatter(const Common& c, std::size_t replica) {
  const h::ExperimentConfig cfg = load_config(c);
  const auto files = h::write_scatter(cfg, cfg.out_dir, c.stride.value_or(1), replica);
  for (const auto& f : files) std::cout << "wrote " << f << "\n";
  return 0;
}

int cmd_validate(const std::string& suite, const Common& c, std::size_t trials, bool corrupt) {
  h::ValidationOptions o;
  if (c.seed) o.seed = *c.seed;
  o.tail_trials = trials;
  o.corrupt_nu = corrupt;
  const auto checks = h::run_validation(suite, o);
  const std::string dir = c.out.value_or(".");
  fs::create_directories(dir);
  const std::string path = (fs::path(dir) / "validation.json").string();
  h::write_file(path, h::validation_report(suite, o, checks).dump(2) + "\n");
  for (const auto& k : checks) std::cout << (k.pass ? "PASS " : "FAIL ") << k.suite << "/" << k.name << "\n";
  std::cout << "report: " << path << "\n";
  if (h::all_pass(checks)) return 0;
  std::cerr << "failing checks:\n";
  for (const auto& k : checks)
    if (!k.pass) std::cerr << "  " << k.suite << "/" << k.name << "\n";
  return 1;
}

int cmd_gen_instance(const Common& c) {
  const h::ExperimentConfig cfg = load_config(c);
  const linnash::BanditInstance inst = h::make_instance(cfg.instance, cfg.seed);
  fs::create_directories(cfg.out_dir);
  const std::string path = (fs::path(cfg.out_dir) / "instance.json").string();
  h::write_file(path, linnash::instance_to_json(inst).dump() + "\n");
  std::cout << "wrote " << path << " (d=" << inst.dim() << ", arms=" << inst.size() << ", optimum=" << inst.optimum()
            << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LinNash linear-bandit simulator"};
  app.require_subcommand(1);

  Common run_opts, scatter_opts, validate_opts, gen_opts;
  auto* run = app.add_subcommand("run", "simulate all algorithms and write logs, summary and regret plot");
  add_common(run, run_opts, true);

  auto* scatter = app.add_subcommand("scatter", "round-wise mean-reward scatter from existing run logs");
  add_common(scatter, scatter_opts, false);
  std::size_t replica = 0;
  scatter->add_option("--replica", replica, "replica to plot");

  auto* validate = app.add_subcommand("validate", "property suites with a JSON report");
  std::string suite = "all";
  validate->add_option("suite", suite, "design | geometry | concentration | all")
      ->check(CLI::IsMember({"design", "geometry", "concentration", "all"}));
  validate->add_option("--seed", validate_opts.seed, "master seed");
  validate->add_option("--out", validate_opts.out, "directory for validation.json");
  std::size_t trials = 100000;
  validate->add_option("--trials", trials, "Monte-Carlo trials per tail check")->check(CLI::Range(1000, 100000000));
  bool corrupt = false;
  validate->add_flag("--corrupt-nu", corrupt)->group("");

  auto* gen = app.add_subcommand("gen-instance", "write the configured instance as JSON");
  add_common(gen, gen_opts, false);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_opts);
    if (*scatter) return cmd_scatter(scatter_opts, replica);
    if (*validate) return cmd_validate(suite, validate_opts, trials, corrupt);
    if (*gen) return cmd_gen_instance(gen_opts);
  } catch (const linnash::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
