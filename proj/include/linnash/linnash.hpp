#pragma once

// LinNash for finite arm sets (Nash confidence bounds) and its |X|-free
// variant for large or infinite arm sets.

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "linnash/common.hpp"
#include "linnash/design.hpp"
#include "linnash/env.hpp"
#include "linnash/geometry.hpp"
#include "linnash/rng.hpp"
#include "linnash/runlog.hpp"

namespace linnash {

enum class Variant { Finite, Infinite };

inline const char* variant_name(Variant v) { return v == Variant::Finite ? "linnash" : "linnash-inf"; }

namespace detail {

// ceil that ignores round-off just above an integer (lambda * T / 3 with
// lambda = 1/3 should not round up to the next pull).
inline std::size_t ceil_count(double x) {
  if (!(x > 0.0)) return 0;
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, x)) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(x));
}

}  // namespace detail

//! Length of Part I. Natural log; clamped to [d + 1, T].
inline std::size_t horizon_split(std::size_t T, std::size_t d, double nu, std::size_t n_arms,
                                 Variant variant) {
  const double tt = static_cast<double>(T);
  const double dd = static_cast<double>(d);
  double raw = 0.0;
  if (variant == Variant::Finite)
    raw = 3.0 * std::sqrt(tt * dd * nu * std::log(tt * static_cast<double>(n_arms)));
  else
    raw = 3.0 * std::sqrt(tt * std::pow(dd, 2.5) * nu * std::log(tt));
  const std::size_t v = std::isfinite(raw) ? static_cast<std::size_t>(std::ceil(std::max(raw, 0.0))) : T;
  return std::max(d + 1, std::min(v, T));
}

struct ScheduleEntry {
  Index arm = 0;
  PullSource source = PullSource::SampleU;
};

//! Part I arm sequence. `rng` needs fair_coin() (true = SAMPLE-U) and
//! uniform() in [0, 1).
template <class Source>
std::vector<ScheduleEntry> generate_arm_sequence(std::size_t t_tilde, const DesignWeights& design,
                                                 const CenterDistribution& center, Source& rng) {
  std::vector<ScheduleEntry> out;
  out.reserve(t_tilde);
  IndexSet pool = design.support;
  std::sort(pool.begin(), pool.end());
  std::vector<std::size_t> quota(pool.size()), count(pool.size(), 0);
  for (std::size_t k = 0; k < pool.size(); ++k)
    quota[k] = detail::ceil_count(design.weights[pool[k]] * static_cast<double>(t_tilde) / 3.0);
  std::vector<std::size_t> slot(pool.size());
  for (std::size_t k = 0; k < pool.size(); ++k) slot[k] = k;
  std::size_t pos = 0;

  for (std::size_t i = 0; i < t_tilde; ++i) {
    const bool sample_u = rng.fair_coin();
    if (sample_u || slot.empty()) {
      out.push_back({center.sample(rng.uniform()), PullSource::SampleU});
      continue;
    }
    const std::size_t k = slot[pos];
    out.push_back({pool[k], PullSource::Opt});
    if (++count[k] >= quota[k]) {
      slot.erase(slot.begin() + static_cast<std::ptrdiff_t>(pos));
      if (pos == slot.size()) pos = 0;
    } else {
      pos = (pos + 1) % slot.size();
    }
  }
  return out;
}

//! Running least squares: V = sum x x^T, s = sum r x.
class OlsState {
 public:
  explicit OlsState(std::size_t d = 0) { reset(d); }

  void reset(std::size_t d) {
    v_ = Matrix::Zero(eidx(d), eidx(d));
    s_ = Vector::Zero(eidx(d));
    dirty_ = true;
  }

  template <class Row>
  void update(const Row& x, double reward) {
    v_.noalias() += x.transpose() * x;
    s_.noalias() += reward * x.transpose();
    dirty_ = true;
  }

  //! `count` pulls of the same arm with total reward `reward_sum`.
  template <class Row>
  void update_repeated(const Row& x, double count, double reward_sum) {
    v_.noalias() += count * (x.transpose() * x);
    s_.noalias() += reward_sum * x.transpose();
    dirty_ = true;
  }

  const Matrix& v() const noexcept { return v_; }
  const Vector& s() const noexcept { return s_; }

  //! Pseudo-inverse solve with spectral cutoff 1e-10 * largest eigenvalue.
  const Vector& theta_hat() const {
    if (dirty_) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(v_);
      const Vector& ev = es.eigenvalues();
      const double cut = 1e-10 * std::max(ev.size() ? ev.maxCoeff() : 0.0, 0.0);
      const Matrix& q = es.eigenvectors();
      Vector coef = q.transpose() * s_;
      for (Eigen::Index i = 0; i < coef.size(); ++i) coef(i) = ev(i) > cut && ev(i) > 0.0 ? coef(i) / ev(i) : 0.0;
      theta_ = q * coef;
      dirty_ = false;
    }
    return theta_;
  }

 private:
  Matrix v_;
  Vector s_;
  mutable Vector theta_;
  mutable bool dirty_ = true;
};

struct NashBounds {
  double lncb = 0.0;
  double uncb = 0.0;
};

//! Nash confidence bounds; negative estimates get zero width.
inline NashBounds nash_bounds(double est, double nu, std::size_t d, double log_term, double t,
                              double width_scale = 1.0) {
  const double w = width_scale * 6.0 * std::sqrt(std::max(est, 0.0) * nu * static_cast<double>(d) * log_term / t);
  return {est - w, est + w};
}

//! Keeps x with uncb[x] >= max lncb over the candidates; never empty.
inline IndexSet eliminate_with_bounds(const IndexSet& surviving, const std::vector<NashBounds>& bounds,
                                      const std::vector<double>& estimates) {
  if (surviving.empty()) throw PreconditionViolated("eliminate: empty surviving set");
  double best_lower = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < surviving.size(); ++k) best_lower = std::max(best_lower, bounds[k].lncb);
  IndexSet keep;
  for (std::size_t k = 0; k < surviving.size(); ++k)
    if (bounds[k].uncb >= best_lower) keep.push_back(surviving[k]);
  if (keep.empty()) {
    const auto it = std::max_element(estimates.begin(), estimates.end());
    keep.push_back(surviving[static_cast<std::size_t>(it - estimates.begin())]);
  }
  return keep;
}

//! `estimates[k]` is <x, theta_hat> for arm surviving[k].
inline IndexSet eliminate_finite(const IndexSet& surviving, const std::vector<double>& estimates, double nu,
                                 std::size_t d, double log_term, double t, double width_scale = 1.0) {
  if (estimates.size() != surviving.size()) throw DimensionMismatch("eliminate_finite: estimates size");
  std::vector<NashBounds> b(surviving.size());
  for (std::size_t k = 0; k < surviving.size(); ++k)
    b[k] = nash_bounds(estimates[k], nu, d, log_term, t, width_scale);
  return eliminate_with_bounds(surviving, b, estimates);
}

//! Keeps x with estimate >= gamma - width(gamma), gamma the largest estimate.
template <class WidthFn>
IndexSet eliminate_by_gamma(const IndexSet& surviving, const std::vector<double>& estimates, WidthFn width) {
  if (surviving.empty()) throw PreconditionViolated("eliminate: empty surviving set");
  const double gamma = *std::max_element(estimates.begin(), estimates.end());
  const double floor = gamma - width(gamma);
  IndexSet keep;
  for (std::size_t k = 0; k < surviving.size(); ++k)
    if (estimates[k] >= floor) keep.push_back(surviving[k]);
  return keep;
}

struct LinNashOptions {
  double width_scale = 1.0;  // 0 reduces both rules to "keep the argmax"
  DesignOptions design;
  double mvee_eps = 1e-3;
};

struct PhaseRecord {
  int index = 0;               // 0 is Part I
  double t_prime = 0.0;        // T~/3 for Part I
  std::size_t rounds = 0;
  std::size_t support_size = 0;
  std::size_t surviving_before = 0;
  std::size_t surviving_after = 0;
  bool estimated = false;
  Vector theta_hat;
};

struct LinNashTrace {
  std::size_t t_tilde = 0;
  std::vector<PhaseRecord> phases;
  std::vector<IndexSet> surviving_history;  // after Part I, then after each phase
  IndexSet final_surviving;
};

struct LinNashResult {
  RunLog log;
  LinNashTrace trace;
};

using RewardSource = std::function<double(const BanditInstance&, Index, RngStream&)>;

inline double default_reward(const BanditInstance& inst, Index arm, RngStream& rng) {
  return sample_reward(inst, arm, rng);
}

namespace detail {

inline std::vector<double> estimates_on(const ArmSet& arms, const IndexSet& idx, const Vector& theta) {
  std::vector<double> e(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) e[k] = arms.arm(idx[k]).dot(theta);
  return e;
}

// All-zero arm sets carry no information; any design is as good as another.
inline DesignWeights design_for(const ArmSet& arms, const DesignOptions& opt) {
  if (numeric_rank(arms.points()) == 0) return DesignWeights::uniform(arms.size());
  return solve_d_optimal_in_span(arms, opt).design;
}

}  // namespace detail

//! One full run of LinNash on `inst` for T rounds.
inline LinNashResult run_linnash(const BanditInstance& inst, std::size_t T, Variant variant, RngStream& rng,
                                 const LinNashOptions& opt = {}, const RewardSource& reward = default_reward) {
  const std::size_t d = inst.dim();
  const std::size_t n = inst.size();
  if (n == 0) throw InvalidArgument("run_linnash: no arms");
  if (T < d + 1) throw InvalidArgument("run_linnash: horizon T must be at least d + 1");
  const ArmSet& arms = inst.arms();
  const double nu = inst.nu();
  const double dd = static_cast<double>(d);
  const double log_tx = std::log(static_cast<double>(T) * static_cast<double>(n));
  const double log_t = std::log(static_cast<double>(T));

  LinNashResult res;
  res.log.header = make_header(inst, variant_name(variant), rng.lineage());
  res.log.entries.reserve(T);
  RngStream schedule_rng = rng.child("schedule");
  RngStream reward_rng = rng.child("rewards");

  auto pull = [&](Index arm, std::int32_t phase, PullSource src) {
    const double r = reward(inst, arm, reward_rng);
    res.log.entries.push_back({arm, inst.mean(arm), r, phase, src});
    return r;
  };

  auto eliminate = [&](const IndexSet& surv, const Vector& theta, double t_arg, bool part_one) {
    const std::vector<double> est = detail::estimates_on(arms, surv, theta);
    if (variant == Variant::Finite) return eliminate_finite(surv, est, nu, d, log_tx, t_arg, opt.width_scale);
    const double extra = part_one ? 3.0 : 1.0;
    return eliminate_by_gamma(surv, est, [&](double gamma) {
      return opt.width_scale * 16.0 * std::sqrt(extra * std::max(gamma, 0.0) * std::pow(dd, 2.5) * nu * log_t / t_arg);
    });
  };

  // Part I
  const std::size_t t_tilde = horizon_split(T, d, nu, n, variant);
  res.trace.t_tilde = t_tilde;
  IndexSet all(n);
  for (Index i = 0; i < n; ++i) all[i] = i;
  {
    const DesignWeights design = detail::design_for(arms, opt.design);
    const CenterDistribution center = center_distribution(arms, opt.mvee_eps);
    const auto seq = generate_arm_sequence(t_tilde, design, center, schedule_rng);
    OlsState ols(d);
    for (const auto& e : seq) ols.update(arms.arm(e.arm), pull(e.arm, 0, e.source));
    PhaseRecord rec;
    rec.index = 0;
    rec.t_prime = static_cast<double>(t_tilde) / 3.0;
    rec.rounds = seq.size();
    rec.support_size = design.support.size();
    rec.surviving_before = n;
    rec.estimated = true;
    rec.theta_hat = ols.theta_hat();
    // Finite widths use T~/3; the infinite rule is written with T~ directly.
    const double t_arg = variant == Variant::Finite ? rec.t_prime : static_cast<double>(t_tilde);
    res.trace.final_surviving = eliminate(all, rec.theta_hat, t_arg, true);
    rec.surviving_after = res.trace.final_surviving.size();
    res.trace.phases.push_back(std::move(rec));
    res.trace.surviving_history.push_back(res.trace.final_surviving);
  }

  // Part II
  double t_prime = 2.0 * static_cast<double>(t_tilde) / 3.0;
  Vector last_theta = res.trace.phases.back().theta_hat;
  for (int phase = 1; res.log.entries.size() < T; ++phase, t_prime *= 2.0) {
    IndexSet& surv = res.trace.final_surviving;
    const ArmSet sub = arms.subset(surv);
    const DesignWeights design = detail::design_for(sub, opt.design);
    IndexSet support = design.support;
    std::sort(support.begin(), support.end());

    OlsState ols(d);
    std::size_t pulls = 0;
    for (Index k : support) {
      const Index arm = surv[k];
      const std::size_t want = detail::ceil_count(design.weights[k] * t_prime);
      const std::size_t take = std::min(want, T - res.log.entries.size());
      double sum = 0.0;
      for (std::size_t j = 0; j < take; ++j) sum += pull(arm, phase, PullSource::Phase);
      ols.update_repeated(arms.arm(arm), static_cast<double>(take), sum);
      pulls += take;
      if (res.log.entries.size() == T) break;
    }

    PhaseRecord rec;
    rec.index = phase;
    rec.t_prime = t_prime;
    rec.rounds = pulls;
    rec.support_size = support.size();
    rec.surviving_before = surv.size();
    rec.estimated = pulls >= d;
    if (rec.estimated) last_theta = ols.theta_hat();
    rec.theta_hat = last_theta;
    surv = eliminate(surv, last_theta, t_prime, false);
    rec.surviving_after = surv.size();
    res.trace.phases.push_back(std::move(rec));
    res.trace.surviving_history.push_back(surv);
  }
  return res;
}

inline LinNashResult run_linnash_finite(const BanditInstance& inst, std::size_t T, RngStream& rng,
                                        const LinNashOptions& opt = {},
                                        const RewardSource& reward = default_reward) {
  return run_linnash(inst, T, Variant::Finite, rng, opt, reward);
}

inline LinNashResult run_linnash_infinite(const BanditInstance& inst, std::size_t T, RngStream& rng,
                                          const LinNashOptions& opt = {},
                                          const RewardSource& reward = default_reward) {
  return run_linnash(inst, T, Variant::Infinite, rng, opt, reward);
}

}  // namespace linnash
