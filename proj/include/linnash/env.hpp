#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "linnash/common.hpp"
#include "linnash/rng.hpp"

namespace linnash {

struct RewardModel {
  enum class Kind { Bernoulli, Poisson, ScaledBernoulli };
  Kind kind = Kind::Bernoulli;
  double scale = 1.0;  // B for ScaledBernoulli

  static RewardModel bernoulli() { return {Kind::Bernoulli, 1.0}; }
  static RewardModel poisson() { return {Kind::Poisson, 1.0}; }
  static RewardModel scaled_bernoulli(double b) {
    if (!(b > 0.0) || !std::isfinite(b)) throw InvalidArgument("scaled_bernoulli: B must be positive");
    return {Kind::ScaledBernoulli, b};
  }

  //! Sub-Poisson parameter of the family.
  double nu() const { return kind == Kind::ScaledBernoulli ? scale : 1.0; }

  //! Largest admissible mean (infinity for Poisson).
  double max_mean() const {
    switch (kind) {
      case Kind::Bernoulli: return 1.0;
      case Kind::ScaledBernoulli: return scale;
      case Kind::Poisson: break;
    }
    return std::numeric_limits<double>::infinity();
  }

  std::string tag() const {
    switch (kind) {
      case Kind::Bernoulli: return "bernoulli";
      case Kind::Poisson: return "poisson";
      case Kind::ScaledBernoulli: return "scaled_bernoulli";
    }
    return "?";
  }

  static RewardModel from_tag(const std::string& tag, double scale = 1.0) {
    if (tag == "bernoulli") return bernoulli();
    if (tag == "poisson") return poisson();
    if (tag == "scaled_bernoulli") return scaled_bernoulli(scale);
    throw InvalidArgument("unknown reward model '" + tag + "'");
  }
};

// Means this far below zero are treated as rounding noise and clamped.
inline constexpr double kMeanSlack = 1e-12;

//! Arms, hidden parameter and reward model. Immutable once built.
class BanditInstance {
 public:
  BanditInstance() = default;

  BanditInstance(ArmSet arms, Vector theta_star, RewardModel model)
      : arms_(std::move(arms)), theta_(std::move(theta_star)), model_(model) {
    if (arms_.empty()) throw InvalidArgument("BanditInstance: no arms");
    if (static_cast<std::size_t>(theta_.size()) != arms_.dim())
      throw DimensionMismatch("BanditInstance: theta dimension differs from arm dimension");
    means_ = arms_.points() * theta_;
    const double hi = model_.max_mean();
    for (Eigen::Index i = 0; i < means_.size(); ++i) {
      const double m = means_(i);
      if (!std::isfinite(m) || m < -kMeanSlack || m > hi * (1.0 + 1e-12))
        throw PreconditionViolated("BanditInstance: mean " + std::to_string(m) + " outside the " +
                                       model_.tag() + " range",
                                   static_cast<std::ptrdiff_t>(i));
      means_(i) = std::clamp(m, 0.0, hi);
    }
  }

  const ArmSet& arms() const noexcept { return arms_; }
  const Vector& theta_star() const noexcept { return theta_; }
  const RewardModel& model() const noexcept { return model_; }
  double nu() const { return model_.nu(); }
  std::size_t size() const { return arms_.size(); }
  std::size_t dim() const { return arms_.dim(); }

  double mean(Index arm) const { return means_(eidx(arm)); }
  const Vector& means() const noexcept { return means_; }
  Index best_arm() const {
    Eigen::Index k = 0;
    means_.maxCoeff(&k);
    return static_cast<Index>(k);
  }
  double optimum() const { return means_.maxCoeff(); }

 private:
  ArmSet arms_;
  Vector theta_;
  RewardModel model_;
  Vector means_;
};

//! One stochastic reward for pulling `arm`.
inline double sample_reward(const BanditInstance& inst, Index arm, RngStream& rng) {
  if (arm >= inst.size())
    throw PreconditionViolated("sample_reward: arm index out of range", static_cast<std::ptrdiff_t>(arm));
  const double m = inst.mean(arm);
  const RewardModel& model = inst.model();
  switch (model.kind) {
    case RewardModel::Kind::Bernoulli:
      return rng.uniform() < m ? 1.0 : 0.0;
    case RewardModel::Kind::ScaledBernoulli:
      return rng.uniform() < m / model.scale ? model.scale : 0.0;
    case RewardModel::Kind::Poisson:
      if (m == 0.0) return 0.0;
      return static_cast<double>(std::poisson_distribution<long long>(m)(rng));
  }
  return 0.0;
}

namespace detail {

inline void check_generate_args(std::size_t d, std::size_t n_arms, double max_mean, const RewardModel& model) {
  if (d == 0 || n_arms == 0) throw InvalidArgument("generate_instance: d and n_arms must be >= 1");
  if (!(max_mean > 0.0) || max_mean > model.max_mean())
    throw InvalidArgument("generate_instance: max_mean outside (0, " +
                          std::to_string(model.max_mean()) + "]");
}

// Shift rows of x along theta so the smallest mean is 0, then scale so the
// largest is max_mean.
inline void shift_and_scale(Matrix& x, const Vector& theta, double max_mean) {
  const double tt = theta.squaredNorm();
  Vector means = x * theta;
  const double lo = means.minCoeff();
  const double hi = means.maxCoeff();
  if (hi - lo > 1e-12 * std::max(1.0, std::abs(hi))) {
    x.rowwise() -= (lo / tt) * theta.transpose();
    x *= max_mean / (hi - lo);
  } else {
    // All means equal (e.g. one arm): move them straight to max_mean.
    x.rowwise() += ((max_mean - hi) / tt) * theta.transpose();
  }
  // Pin the extremes exactly against rounding in the rescale.
  means = x * theta;
  for (Eigen::Index i = 0; i < means.size(); ++i) {
    if (means(i) < 0.0) x.row(i) -= (means(i) / tt) * theta.transpose();
    else if (means(i) > max_mean) x.row(i) -= ((means(i) - max_mean) / tt) * theta.transpose();
  }
}

}  // namespace detail

//! Gaussian arms and parameter, shifted along theta so the smallest mean is 0,
//! then scaled so the largest is max_mean.
inline BanditInstance generate_instance(std::size_t d, std::size_t n_arms, double max_mean,
                                        RewardModel model, RngStream& rng) {
  detail::check_generate_args(d, n_arms, max_mean, model);
  Vector theta(eidx(d));
  for (Eigen::Index j = 0; j < theta.size(); ++j) theta(j) = rng.normal();
  Matrix x(eidx(n_arms), eidx(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
  detail::shift_and_scale(x, theta, max_mean);
  return BanditInstance(ArmSet(std::move(x)), std::move(theta), model);
}

//! Finite proxy for the unit sphere: net_size uniform directions, then the
//! same shift and scale as generate_instance.
inline BanditInstance generate_sphere_instance(std::size_t d, std::size_t net_size, double max_mean,
                                               RewardModel model, RngStream& rng) {
  detail::check_generate_args(d, net_size, max_mean, model);
  Vector theta(eidx(d));
  for (Eigen::Index j = 0; j < theta.size(); ++j) theta(j) = rng.normal();
  Matrix x(eidx(net_size), eidx(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
    const double n = x.row(i).norm();
    if (n > 0.0) x.row(i) /= n;
  }
  detail::shift_and_scale(x, theta, max_mean);
  return BanditInstance(ArmSet(std::move(x)), std::move(theta), model);
}

inline nlohmann::json instance_to_json(const BanditInstance& inst) {
  nlohmann::json j;
  const Matrix& x = inst.arms().points();
  j["d"] = inst.dim();
  j["n_arms"] = inst.size();
  auto& rows = j["arms"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::vector<double> r(x.cols());
    for (Eigen::Index k = 0; k < x.cols(); ++k) r[static_cast<std::size_t>(k)] = x(i, k);
    rows.push_back(std::move(r));
  }
  j["theta_star"] = std::vector<double>(inst.theta_star().data(),
                                        inst.theta_star().data() + inst.theta_star().size());
  j["model"] = inst.model().tag();
  j["scale"] = inst.model().scale;
  j["nu"] = inst.nu();
  return j;
}

inline BanditInstance instance_from_json(const nlohmann::json& j) {
  const auto rows = j.at("arms").get<std::vector<std::vector<double>>>();
  const auto theta = j.at("theta_star").get<std::vector<double>>();
  if (rows.empty()) throw InvalidArgument("instance json: no arms");
  Matrix x(eidx(rows.size()), eidx(theta.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != theta.size()) throw DimensionMismatch("instance json: ragged arms");
    for (std::size_t k = 0; k < theta.size(); ++k) x(eidx(i), eidx(k)) = rows[i][k];
  }
  Vector th = Eigen::Map<const Vector>(theta.data(), eidx(theta.size()));
  const RewardModel model = RewardModel::from_tag(j.at("model").get<std::string>(), j.value("scale", 1.0));
  if (j.contains("nu") && std::abs(j["nu"].get<double>() - model.nu()) > 1e-12)
    throw InvalidArgument("instance json: nu does not match the reward model");
  return BanditInstance(ArmSet(std::move(x)), std::move(th), model);
}

}  // namespace linnash
