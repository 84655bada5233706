#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "linnash/concentration.hpp"
#include "linnash/design.hpp"
#include "linnash/env.hpp"
#include "linnash/geometry.hpp"
#include "linnash/harness/config.hpp"

namespace linnash::harness {

struct ValidationCheck {
  std::string suite;
  std::string name;
  bool pass = false;
  json detail;
};

struct ValidationOptions {
  std::uint64_t seed = 2023;
  std::size_t design_instances = 50;
  std::size_t mvee_instances = 50;
  std::size_t center_instances = 100;
  std::size_t tail_trials = 100000;
  std::size_t mgf_samples = 200000;
  bool corrupt_nu = false;  // claim nu = 0.1 for the Poisson MGF check
};

inline constexpr double kDesignFactor = 1.05;
inline constexpr double kDesignSeconds = 5.0;
inline constexpr double kMveeEps = 1e-6;
inline constexpr double kCenterSlack = 1e-8;
inline constexpr double kTriangleTol = 1e-6;

namespace detail {

inline std::size_t pick(RngStream& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1));
}

inline Matrix gaussian_matrix(std::size_t n, std::size_t d, RngStream& rng) {
  Matrix x(eidx(n), eidx(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
  return x;
}

}  // namespace detail

//! Kiefer-Wolfowitz certificate g <= 1.05 d on random clouds, d in 2..10,
//! |X| in 20..200, each solve under 5 s.
inline std::vector<ValidationCheck> validate_design(const ValidationOptions& o) {
  double worst_ratio = 0.0, worst_secs = 0.0;
  std::size_t bad_g = 0, bad_time = 0, bad_support = 0;
  json per = json::array();
  for (std::size_t i = 0; i < o.design_instances; ++i) {
    RngStream rng(o.seed, i, "validate/design");
    const std::size_t d = detail::pick(rng, 2, 10), n = detail::pick(rng, 20, 200);
    const ArmSet arms(detail::gaussian_matrix(n, d, rng));
    const auto t0 = std::chrono::steady_clock::now();
    const DesignResult r = solve_d_optimal(arms);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double ratio = r.g / static_cast<double>(d);
    worst_ratio = std::max(worst_ratio, ratio);
    worst_secs = std::max(worst_secs, secs);
    bad_g += ratio > kDesignFactor;
    bad_time += secs >= kDesignSeconds;
    bad_support += r.design.support.size() > d * (d + 1) / 2;
    per.push_back({{"d", d}, {"n_arms", n}, {"g_over_d", ratio}});
  }
  return {
      {"design", "kw-certificate", bad_g == 0,
       {{"instances", o.design_instances}, {"max_g_over_d", worst_ratio}, {"limit", kDesignFactor}, {"failures", bad_g},
        {"instances_detail", per}}},
      {"design", "solve-time", bad_time == 0,
       {{"max_seconds", worst_secs}, {"limit_seconds", kDesignSeconds}, {"failures", bad_time}}},
      {"design", "support-size", bad_support == 0, {{"limit", "d(d+1)/2"}, {"failures", bad_support}}},
  };
}

//! MVEE containment, triangle center, and the center-sampling guarantee
//! E_U <x, theta*> >= mu* / (d + 1).
inline std::vector<ValidationCheck> validate_geometry(const ValidationOptions& o) {
  std::vector<ValidationCheck> out;
  {
    double worst = 0.0;
    std::size_t bad = 0;
    for (std::size_t i = 0; i < o.mvee_instances; ++i) {
      RngStream rng(o.seed, i, "validate/mvee");
      const std::size_t d = detail::pick(rng, 2, 8), n = detail::pick(rng, 20, 200);
      const ArmSet pts(detail::gaussian_matrix(n, d, rng));
      const MveeResult r = mvee(pts, kMveeEps);
      double m = 0.0;
      for (Index k = 0; k < pts.size(); ++k) m = std::max(m, r.ellipsoid.shape_norm_sq(pts.arm(k).transpose()));
      worst = std::max(worst, m);
      bad += m > 1.0 + kMveeEps;
    }
    out.push_back({"geometry", "mvee-containment", bad == 0,
                   {{"instances", o.mvee_instances}, {"max_shape_norm_sq", worst}, {"limit", 1.0 + kMveeEps},
                    {"failures", bad}}});
  }
  {
    Matrix x(3, 2);
    x << 0, 0, 1, 0, 0, 1;
    const MveeResult r = mvee(ArmSet(x), kMveeEps);
    const double err = std::max(std::abs(r.ellipsoid.center(0) - 1.0 / 3.0), std::abs(r.ellipsoid.center(1) - 1.0 / 3.0));
    out.push_back({"geometry", "mvee-triangle-center", err <= kTriangleTol,
                   {{"center", {r.ellipsoid.center(0), r.ellipsoid.center(1)}}, {"max_abs_error", err},
                    {"limit", kTriangleTol}}});
  }
  {
    double worst_margin = std::numeric_limits<double>::infinity();
    std::size_t bad = 0;
    for (std::size_t i = 0; i < o.center_instances; ++i) {
      RngStream rng(o.seed, i, "validate/center");
      const std::size_t d = detail::pick(rng, 2, 10), n = detail::pick(rng, 20, 200);
      const BanditInstance inst = generate_instance(d, n, 0.5, RewardModel::bernoulli(), rng);
      const CenterDistribution u = center_distribution(inst.arms());
      const double got = u.expected_value(inst.arms(), inst.theta_star());
      const double need = inst.optimum() / static_cast<double>(d + 1);
      worst_margin = std::min(worst_margin, got - need);
      bad += got < need - kCenterSlack;
    }
    out.push_back({"geometry", "center-optimum-over-d-plus-one", bad == 0,
                   {{"instances", o.center_instances}, {"min_margin", worst_margin}, {"slack", kCenterSlack},
                    {"failures", bad}}});
  }
  return out;
}

namespace detail {

inline ValidationCheck mgf_check(const std::string& name, const ScalarSampler& s, double nu, double mean,
                                 const ValidationOptions& o, std::uint64_t stream) {
  static const std::vector<double> grid{-2, -1, -0.5, 0.5, 1, 2};
  RngStream rng(o.seed, stream, "validate/mgf");
  const SubPoissonReport r = check_sub_poisson(s, nu, mean, grid, o.mgf_samples, rng, name);
  return {"concentration", "mgf/" + name, r.pass(), to_json(r)};
}

inline ValidationCheck tail_entry(const std::string& prefix, const CheckOutcome& c, double leverage) {
  json j = to_json(c);
  j["leverage"] = leverage;
  return {"concentration", prefix + "/" + c.name, c.pass(), j};
}

}  // namespace detail

//! Sub-Poisson MGF checks, OLS tail checks, design leverage and the Chernoff
//! quota bound.
inline std::vector<ValidationCheck> validate_concentration(const ValidationOptions& o) {
  std::vector<ValidationCheck> out;
  auto poisson1 = [](RngStream& r) { return static_cast<double>(std::poisson_distribution<int>(1.0)(r)); };
  out.push_back(detail::mgf_check("bernoulli", [](RngStream& r) { return r.uniform() < 0.3 ? 1.0 : 0.0; }, 1.0, 0.3, o, 0));
  out.push_back(detail::mgf_check(
      "scaled-bernoulli", [](RngStream& r) { return r.uniform() < 0.3 ? 2.0 : 0.0; }, 2.0, 0.6, o, 1));
  out.push_back(detail::mgf_check("poisson", poisson1, o.corrupt_nu ? 0.1 : 1.0, 1.0, o, 2));
  {
    const double m = 1.0, s = 0.5;
    const double mean = s * std::sqrt(2.0 / M_PI) * std::exp(-m * m / (2 * s * s)) + m * std::erf(m / (s * std::sqrt(2.0)));
    out.push_back(detail::mgf_check(
        "folded-normal", [=](RngStream& r) { return std::abs(m + s * r.normal()); }, s * s / mean, mean, o, 3));
  }
  {
    // The checker must reject a Poisson sampler that claims nu = 0.1.
    ValidationCheck c = detail::mgf_check("poisson-misclaimed", poisson1, 0.1, 1.0, o, 4);
    c.pass = !c.pass;
    c.detail["expected"] = "FAIL";
    out.push_back(std::move(c));
  }

  // 200 pulls each of e1, e2, e3 with Poisson rewards; z = e1 so gamma = 1/200.
  const PullMultiset basis{Matrix::Identity(3, 3), {200, 200, 200}};
  std::uint64_t stream = 0;
  for (double delta : {0.1, 0.3, 0.5})
    for (auto dir : {TailDirection::Upper, TailDirection::Lower, TailDirection::TwoSided}) {
      RngStream rng(o.seed, stream++, "validate/tail");
      const auto rep = mc_tail_check(basis, Vector::Ones(3), Vector::Unit(3, 0), reward_sum_sampler(RewardModel::poisson()),
                                     {dir, delta, 1.0 / 200, 1.0, 0.0}, o.tail_trials, rng);
      char prefix[48];
      std::snprintf(prefix, sizeof prefix, "tail/poisson-basis/delta=%g", delta);
      for (const auto& c : rep.checks) out.push_back(detail::tail_entry(prefix, c, rep.leverage));
    }

  // Design-weighted pulls on a random nonnegative instance, with the
  // alpha-form variants at alpha = max mean.
  {
    RngStream g(o.seed, 0, "validate/tail-instance");
    const BanditInstance inst = generate_instance(4, 40, 0.9, RewardModel::bernoulli(), g);
    const DesignResult dr = solve_d_optimal(inst.arms());
    const double t_prime = 2000.0;
    PullMultiset xs;
    xs.arms = inst.arms().subset(dr.design.support).points();
    for (Index i : dr.design.support)
      xs.counts.push_back(static_cast<std::size_t>(std::ceil(dr.design.weights[i] * t_prime)));
    Matrix v = Matrix::Zero(4, 4);
    for (Eigen::Index i = 0; i < xs.arms.rows(); ++i)
      v += static_cast<double>(xs.counts[static_cast<std::size_t>(i)]) * xs.arms.row(i).transpose() * xs.arms.row(i);
    const Vector z = inst.arms().arm(inst.best_arm()).transpose();
    const double gamma = (xs.arms * v.ldlt().solve(z)).maxCoeff();

    // Leverage of every arm under ceil(lambda T') pulls is at most g / T'.
    const Matrix vinv = v.inverse();
    double lev = 0.0;
    for (Index i = 0; i < inst.size(); ++i) lev = std::max(lev, (inst.arms().arm(i) * vinv * inst.arms().arm(i).transpose()).value());
    const double lev_bound = dr.g / t_prime;
    out.push_back({"concentration", "leverage/design-pulls", lev <= lev_bound * (1 + 1e-9),
                   {{"max_leverage", lev}, {"bound", lev_bound}, {"t_prime", t_prime}}});

    for (double delta : {0.1, 0.3, 0.5})
      for (auto dir : {TailDirection::Upper, TailDirection::Lower}) {
        RngStream rng(o.seed, stream++, "validate/tail");
        const auto rep = mc_tail_check(xs, inst.theta_star(), z, reward_sum_sampler(inst.model()),
                                       {dir, delta, gamma, inst.nu(), 0.0}, o.tail_trials, rng, inst.optimum());
        char prefix[48];
        std::snprintf(prefix, sizeof prefix, "tail/bernoulli-design/delta=%g/%s", delta,
                      dir == TailDirection::Upper ? "up" : "down");
        for (const auto& c : rep.checks) out.push_back(detail::tail_entry(prefix, c, rep.leverage));
      }
  }
  {
    RngStream rng(o.seed, 0, "validate/quota");
    const CheckOutcome c = chernoff_quota_check(300, 1.0 / 3.0, o.tail_trials, rng);
    out.push_back({"concentration", "quota/chernoff", c.pass(), to_json(c)});
  }
  return out;
}

inline std::vector<ValidationCheck> run_validation(const std::string& suite, const ValidationOptions& o) {
  if (suite != "design" && suite != "geometry" && suite != "concentration" && suite != "all")
    throw InvalidArgument("unknown suite '" + suite + "' (design|geometry|concentration|all)");
  std::vector<ValidationCheck> out;
  auto add = [&](std::vector<ValidationCheck> v) { out.insert(out.end(), v.begin(), v.end()); };
  if (suite == "design" || suite == "all") add(validate_design(o));
  if (suite == "geometry" || suite == "all") add(validate_geometry(o));
  if (suite == "concentration" || suite == "all") add(validate_concentration(o));
  return out;
}

inline bool all_pass(const std::vector<ValidationCheck>& checks) {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

inline json validation_report(const std::string& suite, const ValidationOptions& o,
                              const std::vector<ValidationCheck>& checks) {
  json list = json::array(), failing = json::array();
  for (const auto& c : checks) {
    list.push_back({{"suite", c.suite}, {"name", c.name}, {"verdict", c.pass ? "PASS" : "FAIL"}, {"detail", c.detail}});
    if (!c.pass) failing.push_back(c.suite + "/" + c.name);
  }
  return {{"suite", suite}, {"seed", o.seed},           {"tail_trials", o.tail_trials}, {"mgf_samples", o.mgf_samples},
          {"checks", list}, {"failing", failing},       {"verdict", failing.empty() ? "PASS" : "FAIL"}};
}

}  // namespace linnash::harness
