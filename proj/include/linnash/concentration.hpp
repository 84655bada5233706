#pragma once

// Sub-Poisson MGF bounds, multiplicative OLS tail bounds, and Monte-Carlo
// checks of both.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "linnash/common.hpp"
#include "linnash/env.hpp"
#include "linnash/rng.hpp"

namespace linnash {

//! exp(mean / nu * (e^{nu lambda} - 1))
inline double mgf_bound(double mean, double nu, double lambda) {
  if (!(nu > 0.0)) throw InvalidArgument("mgf_bound: nu must be positive");
  return std::exp(mean / nu * std::expm1(nu * lambda));
}

struct MgfPoint {
  double lambda = 0.0;
  double empirical = 0.0;
  double std_error = 0.0;
  double bound = 0.0;
  bool converged = true;
  bool pass = true;
};

struct SubPoissonReport {
  std::string name;
  double claimed_nu = 0.0;
  double mean = 0.0;
  std::size_t samples = 0;
  std::vector<MgfPoint> points;

  bool pass() const {
    for (const auto& p : points)
      if (!p.pass) return false;
    return true;
  }
};

using ScalarSampler = std::function<double(RngStream&)>;

//! Empirical MGF on a lambda grid against the nu-sub-Poisson bound. A point
//! fails when the empirical MGF exceeds the bound by more than 3 standard
//! errors. Points where one sample carries over half the empirical sum are
//! flagged as not converged.
inline SubPoissonReport check_sub_poisson(const ScalarSampler& sampler, double claimed_nu, double mean,
                                          const std::vector<double>& lambda_grid, std::size_t n_samples,
                                          RngStream& rng, std::string name = {}) {
  if (n_samples < 10000) throw InvalidArgument("check_sub_poisson: need at least 1e4 samples");
  for (double l : lambda_grid)
    if (!std::isfinite(l)) throw InvalidArgument("check_sub_poisson: non-finite lambda");
  std::vector<double> xs(n_samples);
  for (double& x : xs) x = sampler(rng);

  SubPoissonReport rep;
  rep.name = std::move(name);
  rep.claimed_nu = claimed_nu;
  rep.mean = mean;
  rep.samples = n_samples;
  const double n = static_cast<double>(n_samples);
  for (double l : lambda_grid) {
    double s = 0.0, s2 = 0.0, biggest = 0.0;
    for (double x : xs) {
      const double e = std::exp(l * x);
      s += e;
      s2 += e * e;
      biggest = std::max(biggest, e);
    }
    MgfPoint p;
    p.lambda = l;
    p.empirical = s / n;
    const double var = std::max(0.0, s2 / n - p.empirical * p.empirical);
    p.std_error = std::sqrt(var / n);
    p.bound = mgf_bound(mean, claimed_nu, l);
    p.converged = std::isfinite(s2) && biggest <= 0.5 * s;
    p.pass = p.empirical <= p.bound + 3.0 * p.std_error;
    rep.points.push_back(p);
  }
  return rep;
}

enum class TailDirection { Upper, Lower, TwoSided };

struct TailBoundSpec {
  TailDirection direction = TailDirection::Upper;
  double delta = 0.0;
  double gamma = 1.0;
  double nu = 1.0;
  double mean = 0.0;  // <z, theta*>
};

inline void validate(const TailBoundSpec& s) {
  if (!(s.delta >= 0.0 && s.delta <= 1.0)) throw InvalidArgument("tail bound: delta must lie in [0, 1]");
  if (!(s.gamma > 0.0)) throw InvalidArgument("tail bound: gamma must be positive");
  if (!(s.nu > 0.0)) throw InvalidArgument("tail bound: nu must be positive");
  if (!(s.mean >= 0.0)) throw InvalidArgument("tail bound: target mean must be nonnegative");
}

//! Multiplicative OLS tail bound for <z, theta_hat> around <z, theta*>.
inline double ols_tail_bound(const TailBoundSpec& s) {
  validate(s);
  const double a = s.delta * s.delta * s.mean / (s.nu * s.gamma);
  switch (s.direction) {
    case TailDirection::Upper: return std::exp(-a / 3.0);
    case TailDirection::Lower: return std::exp(-a / 2.0);
    case TailDirection::TwoSided: return std::min(1.0, 2.0 * std::exp(-a / 3.0));
  }
  return 1.0;
}

//! Upper tail against an upper bound alpha >= <z, theta*>:
//! P(<z, theta_hat> >= (1 + delta) alpha).
inline double alpha_upper_bound(double delta, double alpha, double gamma, double nu) {
  return std::exp(-delta * delta * alpha / (3.0 * gamma * nu));
}

//! P(<z, theta_hat> <= <z, theta*> - delta alpha).
inline double alpha_lower_bound(double delta, double alpha, double gamma, double nu) {
  return std::exp(-delta * delta * alpha / (2.0 * gamma * nu));
}

struct CheckOutcome {
  std::string name;
  double bound = 0.0;
  double empirical = 0.0;
  double slack = 0.0;  // 3 binomial standard errors at the bound
  std::size_t trials = 0;

  bool pass() const { return empirical <= bound + slack; }
};

inline CheckOutcome make_outcome(std::string name, double bound, std::size_t hits, std::size_t trials) {
  CheckOutcome c;
  c.name = std::move(name);
  c.bound = bound;
  c.trials = trials;
  c.empirical = static_cast<double>(hits) / static_cast<double>(trials);
  const double b = std::clamp(bound, 0.0, 1.0);
  c.slack = 3.0 * std::sqrt(b * (1.0 - b) / static_cast<double>(trials));
  return c;
}

//! A fixed multiset of pulls: distinct arms (rows) with pull counts.
struct PullMultiset {
  Matrix arms;
  std::vector<std::size_t> counts;
};

//! Sum of `count` independent rewards with the given mean.
using RewardSumSampler = std::function<double(std::size_t count, double mean, RngStream&)>;

inline RewardSumSampler reward_sum_sampler(const RewardModel& model) {
  switch (model.kind) {
    case RewardModel::Kind::Bernoulli:
      return [](std::size_t c, double m, RngStream& rng) {
        return static_cast<double>(std::binomial_distribution<long long>(static_cast<long long>(c), m)(rng));
      };
    case RewardModel::Kind::ScaledBernoulli:
      return [b = model.scale](std::size_t c, double m, RngStream& rng) {
        return b * static_cast<double>(
                       std::binomial_distribution<long long>(static_cast<long long>(c), m / b)(rng));
      };
    case RewardModel::Kind::Poisson:
      return [](std::size_t c, double m, RngStream& rng) {
        const double mu = static_cast<double>(c) * m;
        return mu > 0.0 ? static_cast<double>(std::poisson_distribution<long long>(mu)(rng)) : 0.0;
      };
  }
  throw InvalidArgument("reward_sum_sampler: unknown model");
}

struct TailCheckReport {
  double leverage = 0.0;  // max_j z^T V^{-1} x_j
  double target_mean = 0.0;
  std::vector<CheckOutcome> checks;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass()) return false;
    return true;
  }
};

//! Simulates the OLS estimate on the fixed pulls `trials` times and compares
//! deviation frequencies with the analytic bounds. `spec.mean` is replaced by
//! <z, theta*>. With alpha > 0 the two alpha-form events are checked too.
inline TailCheckReport mc_tail_check(const PullMultiset& xs, const Vector& theta, const Vector& z,
                                     const RewardSumSampler& sampler, TailBoundSpec spec, std::size_t trials,
                                     RngStream& rng, double alpha = 0.0) {
  if (trials < 1000) throw InvalidArgument("mc_tail_check: need at least 1e3 trials");
  if (xs.arms.rows() != static_cast<Eigen::Index>(xs.counts.size()))
    throw DimensionMismatch("mc_tail_check: counts/arms size");
  if (xs.arms.cols() != theta.size() || z.size() != theta.size())
    throw DimensionMismatch("mc_tail_check: dimension");

  const Eigen::Index k = xs.arms.rows();
  Matrix v = Matrix::Zero(theta.size(), theta.size());
  for (Eigen::Index i = 0; i < k; ++i)
    v.noalias() += static_cast<double>(xs.counts[static_cast<std::size_t>(i)]) * xs.arms.row(i).transpose() *
                   xs.arms.row(i);
  Eigen::LDLT<Matrix> ldlt(v);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-12 * ldlt.vectorD().maxCoeff())
    throw SingularMatrix("mc_tail_check: pulls do not span R^d");
  const Vector vz = ldlt.solve(z);
  const Vector w = xs.arms * vz;  // w_i = z^T V^{-1} x_i

  TailCheckReport rep;
  rep.target_mean = z.dot(theta);
  Eigen::Index worst = 0;
  rep.leverage = w.maxCoeff(&worst);
  if (rep.leverage > spec.gamma * (1.0 + 1e-12))
    throw PreconditionViolated("mc_tail_check: leverage " + std::to_string(rep.leverage) + " exceeds gamma " +
                                   std::to_string(spec.gamma),
                               static_cast<std::ptrdiff_t>(worst));
  spec.mean = rep.target_mean;
  validate(spec);
  if (alpha > 0.0 && rep.target_mean > alpha * (1.0 + 1e-12))
    throw PreconditionViolated("mc_tail_check: alpha below <z, theta*>");

  const Vector means = xs.arms * theta;
  for (Eigen::Index i = 0; i < k; ++i)
    if (means(i) < -kMeanSlack) throw PreconditionViolated("mc_tail_check: negative arm mean", i);

  const double m = rep.target_mean;
  const double d = spec.delta;
  std::size_t hit_main = 0, hit_au = 0, hit_al = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    double est = 0.0;
    for (Eigen::Index i = 0; i < k; ++i)
      est += w(i) * sampler(xs.counts[static_cast<std::size_t>(i)], std::max(means(i), 0.0), rng);
    switch (spec.direction) {
      case TailDirection::Upper: hit_main += est >= (1.0 + d) * m; break;
      case TailDirection::Lower: hit_main += est <= (1.0 - d) * m; break;
      case TailDirection::TwoSided: hit_main += std::abs(est - m) >= d * m; break;
    }
    if (alpha > 0.0) {
      hit_au += est >= (1.0 + d) * alpha;
      hit_al += est <= m - d * alpha;
    }
  }
  static const char* names[] = {"upper", "lower", "two-sided"};
  rep.checks.push_back(
      make_outcome(names[static_cast<int>(spec.direction)], ols_tail_bound(spec), hit_main, trials));
  if (alpha > 0.0) {
    rep.checks.push_back(
        make_outcome("upper-alpha", alpha_upper_bound(d, alpha, spec.gamma, spec.nu), hit_au, trials));
    rep.checks.push_back(
        make_outcome("lower-alpha", alpha_lower_bound(d, alpha, spec.gamma, spec.nu), hit_al, trials));
  }
  return rep;
}

//! Chernoff lower tail for fair coins: frequency of S <= (1 - eps) mu among
//! `trials` runs of n flips, against exp(-mu eps^2 / 2).
inline CheckOutcome chernoff_quota_check(std::size_t n_flips, double eps, std::size_t trials, RngStream& rng) {
  const double mu = 0.5 * static_cast<double>(n_flips);
  const double cut = (1.0 - eps) * mu;
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::size_t heads = 0;
    for (std::size_t i = 0; i < n_flips; ++i) heads += rng.fair_coin();
    hits += static_cast<double>(heads) <= cut + 1e-9;
  }
  return make_outcome("quota", std::exp(-mu * eps * eps / 2.0), hits, trials);
}

inline nlohmann::json to_json(const CheckOutcome& c) {
  return {{"name", c.name},       {"bound", c.bound}, {"empirical", c.empirical},
          {"slack", c.slack},     {"trials", c.trials}, {"verdict", c.pass() ? "PASS" : "FAIL"}};
}

inline nlohmann::json to_json(const SubPoissonReport& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : r.points)
    pts.push_back({{"lambda", p.lambda},
                   {"empirical", p.empirical},
                   {"std_error", p.std_error},
                   {"bound", p.bound},
                   {"converged", p.converged},
                   {"verdict", p.pass ? "PASS" : "FAIL"}});
  return {{"name", r.name},       {"claimed_nu", r.claimed_nu}, {"mean", r.mean},
          {"samples", r.samples}, {"points", pts},              {"verdict", r.pass() ? "PASS" : "FAIL"}};
}

}  // namespace linnash
