#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "linnash/common.hpp"
#include "linnash/env.hpp"
#include "linnash/rng.hpp"

namespace linnash::harness {

using nlohmann::json;

struct InstanceSpec {
  std::string kind = "gaussian";  // gaussian | sphere | file
  std::size_t d = 5;
  std::size_t n_arms = 50;  // net size when kind == sphere
  double max_mean = 0.5;
  std::string model = "bernoulli";
  double model_scale = 1.0;  // B for scaled_bernoulli
  std::string path;          // kind == file
};

struct AlgoSpec {
  std::string name;  // label used in files; defaults to kind
  std::string kind;  // linnash | linnash-inf | ts
  double width_scale = 1.0;
  double mvee_eps = 1e-3;
  double design_tol = 0.05;
  double v = 0.25;
  double lambda_reg = 1.0;
  std::vector<double> tune_v;  // nonempty: pick v on separate tuning replicas
  std::size_t tune_replicas = 3;
};

struct ExperimentConfig {
  std::string preset;
  InstanceSpec instance;
  std::vector<AlgoSpec> algorithms;
  std::size_t horizon = 4096;
  std::size_t replicas = 10;
  std::uint64_t seed = 1;
  std::size_t stride = 64;
  std::string out_dir = "out";
  bool loglog = false;
};

inline RewardModel reward_model(const InstanceSpec& s) { return RewardModel::from_tag(s.model, s.model_scale); }

inline void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& m) { throw InvalidArgument("config: " + m); };
  const auto& in = c.instance;
  if (in.kind != "gaussian" && in.kind != "sphere" && in.kind != "file") fail("instance.kind must be gaussian, sphere or file");
  if (in.kind == "file") {
    if (in.path.empty()) fail("instance.path is required for kind=file");
  } else {
    if (in.d == 0) fail("instance.d must be positive");
    if (in.n_arms == 0) fail("instance.n_arms must be positive");
    const RewardModel m = reward_model(in);
    if (!(in.max_mean > 0.0) || in.max_mean > m.max_mean()) fail("instance.max_mean outside the model's range");
  }
  if (c.algorithms.empty()) fail("algorithms must be nonempty");
  if (c.horizon == 0) fail("horizon must be positive");
  if (c.replicas == 0) fail("replicas must be positive");
  if (c.stride == 0) fail("stride must be positive");
  std::set<std::string> names;
  for (const auto& a : c.algorithms) {
    if (a.kind != "linnash" && a.kind != "linnash-inf" && a.kind != "ts") fail("unknown algorithm kind '" + a.kind + "'");
    if (a.name.empty() || a.name.find_first_of(",/\\\n\r\" ") != std::string::npos)
      fail("algorithm name '" + a.name + "' is empty or has a reserved character");
    if (!names.insert(a.name).second) fail("duplicate algorithm name '" + a.name + "'");
    if (!(a.width_scale >= 0.0)) fail(a.name + ": width_scale must be >= 0");
    if (!(a.mvee_eps > 0.0)) fail(a.name + ": mvee_eps must be positive");
    if (!(a.design_tol > 0.0)) fail(a.name + ": design_tol must be positive");
    if (!(a.v > 0.0)) fail(a.name + ": v must be positive");
    if (!(a.lambda_reg > 0.0)) fail(a.name + ": lambda_reg must be positive");
    for (double v : a.tune_v)
      if (!(v > 0.0)) fail(a.name + ": tune_v entries must be positive");
    if (!a.tune_v.empty() && a.tune_replicas == 0) fail(a.name + ": tune_replicas must be positive");
  }
}

namespace detail {

// Unknown keys are an error so that typos do not silently fall back to defaults.
inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw InvalidArgument("config: " + where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw InvalidArgument("config: unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline json to_json(const AlgoSpec& a) {
  return json{{"name", a.name},
              {"kind", a.kind},
              {"width_scale", a.width_scale},
              {"mvee_eps", a.mvee_eps},
              {"design_tol", a.design_tol},
              {"v", a.v},
              {"lambda_reg", a.lambda_reg},
              {"tune_v", a.tune_v},
              {"tune_replicas", a.tune_replicas}};
}

inline json to_json(const ExperimentConfig& c) {
  const auto& in = c.instance;
  const json inst{{"kind", in.kind},         {"d", in.d},
                  {"n_arms", in.n_arms},     {"max_mean", in.max_mean},
                  {"model", in.model},       {"model_scale", in.model_scale},
                  {"path", in.path}};
  json algos = json::array();
  for (const auto& a : c.algorithms) algos.push_back(to_json(a));
  return json{{"preset", c.preset}, {"instance", inst}, {"algorithms", algos}, {"horizon", c.horizon},
              {"replicas", c.replicas}, {"seed", c.seed}, {"stride", c.stride}, {"out_dir", c.out_dir},
              {"loglog", c.loglog}};
}

inline AlgoSpec algo_from_json(const json& j) {
  detail::reject_unknown(j,
                         {"name", "kind", "width_scale", "mvee_eps", "design_tol", "v", "lambda_reg", "tune_v",
                          "tune_replicas"},
                         "algorithm");
  AlgoSpec a;
  detail::read(j, "kind", a.kind);
  a.name = a.kind;
  detail::read(j, "name", a.name);
  detail::read(j, "width_scale", a.width_scale);
  detail::read(j, "mvee_eps", a.mvee_eps);
  detail::read(j, "design_tol", a.design_tol);
  detail::read(j, "v", a.v);
  detail::read(j, "lambda_reg", a.lambda_reg);
  detail::read(j, "tune_v", a.tune_v);
  detail::read(j, "tune_replicas", a.tune_replicas);
  return a;
}

inline ExperimentConfig config_from_json(const json& j) {
  detail::reject_unknown(j, {"preset", "instance", "algorithms", "horizon", "replicas", "seed", "stride", "out_dir", "loglog"},
                         "config");
  ExperimentConfig c;
  detail::read(j, "preset", c.preset);
  if (j.contains("instance")) {
    const json& in = j["instance"];
    detail::reject_unknown(in, {"kind", "d", "n_arms", "max_mean", "model", "model_scale", "path"}, "instance");
    detail::read(in, "kind", c.instance.kind);
    detail::read(in, "d", c.instance.d);
    detail::read(in, "n_arms", c.instance.n_arms);
    detail::read(in, "max_mean", c.instance.max_mean);
    detail::read(in, "model", c.instance.model);
    detail::read(in, "model_scale", c.instance.model_scale);
    detail::read(in, "path", c.instance.path);
  }
  if (j.contains("algorithms")) {
    if (!j["algorithms"].is_array()) throw InvalidArgument("config: algorithms must be an array");
    for (const auto& a : j["algorithms"]) c.algorithms.push_back(algo_from_json(a));
  }
  detail::read(j, "horizon", c.horizon);
  detail::read(j, "replicas", c.replicas);
  detail::read(j, "seed", c.seed);
  detail::read(j, "stride", c.stride);
  detail::read(j, "out_dir", c.out_dir);
  detail::read(j, "loglog", c.loglog);
  validate(c);
  return c;
}

inline bool operator==(const InstanceSpec& a, const InstanceSpec& b) {
  return a.kind == b.kind && a.d == b.d && a.n_arms == b.n_arms && a.max_mean == b.max_mean && a.model == b.model &&
         a.model_scale == b.model_scale && a.path == b.path;
}

inline bool operator==(const AlgoSpec& a, const AlgoSpec& b) {
  return a.name == b.name && a.kind == b.kind && a.width_scale == b.width_scale && a.mvee_eps == b.mvee_eps &&
         a.design_tol == b.design_tol && a.v == b.v && a.lambda_reg == b.lambda_reg && a.tune_v == b.tune_v &&
         a.tune_replicas == b.tune_replicas;
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.preset == b.preset && a.instance == b.instance && a.algorithms == b.algorithms && a.horizon == b.horizon &&
         a.replicas == b.replicas && a.seed == b.seed && a.stride == b.stride && a.out_dir == b.out_dir &&
         a.loglog == b.loglog;
}

inline std::size_t scaled_count(std::size_t base, double f) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(base) * f)));
}

//! The experiment setup of the paper's first figure, optionally shrunk by f:
//! d = 80 f, |X| = 10000 f, T = 50000 f.
inline ExperimentConfig paper_figure1(double f = 1.0) {
  if (!(f > 0.0) || !std::isfinite(f)) throw InvalidArgument("preset scale must be positive");
  ExperimentConfig c;
  c.preset = "paper-figure1";
  c.instance.d = scaled_count(80, f);
  c.instance.n_arms = scaled_count(10000, f);
  c.instance.max_mean = 0.5;
  c.horizon = scaled_count(50000, f);
  c.replicas = 20;
  c.seed = 0;
  c.stride = std::max<std::size_t>(1, c.horizon / 100);
  AlgoSpec ln;
  ln.name = ln.kind = "linnash";
  AlgoSpec ts;
  ts.name = ts.kind = "ts";
  ts.tune_v = {0.1, 0.25, 0.5, 1.0};
  c.algorithms = {ln, ts};
  return c;
}

inline ExperimentConfig preset(const std::string& name, double f = 1.0) {
  if (name == "paper-figure1") return paper_figure1(f);
  throw InvalidArgument("unknown preset '" + name + "'");
}

}  // namespace linnash::harness
