#include "linnash/concentration.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "linnash/design.hpp"
#include "test_support.hpp"

namespace linnash {
namespace {

const std::vector<double> kGrid{-2, -1, -0.5, 0.5, 1, 2};

TEST(MgfBound, Examples) {
  EXPECT_EQ(mgf_bound(0.7, 2.0, 0.0), 1.0);
  EXPECT_EQ(mgf_bound(123.0, 0.01, 0.0), 1.0);
  // Poisson(mu) MGF is exactly the nu = 1 bound.
  EXPECT_NEAR(mgf_bound(2.0, 1.0, 0.5), std::exp(2.0 * (std::exp(0.5) - 1.0)), 1e-14);
  // Bernoulli(0.3): 0.7 + 0.3 e <= exp(0.3 (e - 1)).
  const double bern = 0.7 + 0.3 * std::exp(1.0);
  EXPECT_NEAR(bern, 1.5155, 1e-4);
  EXPECT_NEAR(mgf_bound(0.3, 1.0, 1.0), 1.6745, 1e-4);
  EXPECT_LE(bern, mgf_bound(0.3, 1.0, 1.0));
}

TEST(MgfBound, BoundedVariablesOnDenseGrid) {
  // Closed-form two-point MGFs against the B-sub-Poisson bound.
  for (double b : {0.5, 1.0, 3.0})
    for (double p : {0.01, 0.3, 0.9})
      for (double l = -4.0; l <= 4.0; l += 0.125)
        EXPECT_LE(1.0 - p + p * std::exp(l * b), mgf_bound(p * b, b, l) * (1 + 1e-14)) << b << " " << p << " " << l;
}

TEST(CheckSubPoisson, BernoulliPasses) {
  RngStream rng(1, 0, "mgf");
  const auto rep = check_sub_poisson([](RngStream& r) { return r.uniform() < 0.3 ? 1.0 : 0.0; }, 1.0, 0.3,
                                     {-2, -1, 0.5, 1, 2}, 100000, rng);
  EXPECT_TRUE(rep.pass());
  for (const auto& p : rep.points) EXPECT_TRUE(p.converged);
}

TEST(CheckSubPoisson, PoissonNearEquality) {
  RngStream rng(2, 0, "mgf");
  const auto rep = check_sub_poisson(
      [](RngStream& r) { return double(std::poisson_distribution<int>(1.0)(r)); }, 1.0, 1.0, kGrid, 200000, rng);
  EXPECT_TRUE(rep.pass());
  for (const auto& p : rep.points) EXPECT_NEAR(p.empirical, p.bound, 4 * p.std_error) << p.lambda;
}

TEST(CheckSubPoisson, MisclaimedNuFails) {
  RngStream rng(3, 0, "mgf");
  const auto rep = check_sub_poisson(
      [](RngStream& r) { return double(std::poisson_distribution<int>(1.0)(r)); }, 0.1, 1.0, kGrid, 100000, rng);
  EXPECT_FALSE(rep.pass());
  for (const auto& p : rep.points)
    if (p.lambda == 1.0) {
      EXPECT_FALSE(p.pass);
      EXPECT_NEAR(p.bound, 2.86, 0.01);
      EXPECT_NEAR(p.empirical, std::exp(std::exp(1.0) - 1.0), 0.1);
    }
}

TEST(CheckSubPoisson, FoldedNormalWithVarianceOverMean) {
  // |N(m, s^2)| is s-sub-Gaussian (1-Lipschitz image of a Gaussian), so it is
  // (s^2 / mean)-sub-Poisson.
  const double m = 1.0, s = 0.5;
  const double mean = s * std::sqrt(2.0 / M_PI) * std::exp(-m * m / (2 * s * s)) + m * std::erf(m / (s * std::sqrt(2.0)));
  RngStream rng(4, 0, "mgf");
  const auto rep = check_sub_poisson([&](RngStream& r) { return std::abs(m + s * r.normal()); }, s * s / mean, mean,
                                     kGrid, 200000, rng);
  EXPECT_TRUE(rep.pass());
}

TEST(CheckSubPoisson, HeavyTailFlaggedNotThrown) {
  RngStream rng(5, 0, "mgf");
  // Lognormal with large sigma: e^{2X} is dominated by single samples.
  const auto rep = check_sub_poisson([](RngStream& r) { return std::exp(3.0 * r.normal()); }, 1.0, std::exp(4.5),
                                     {2.0}, 10000, rng);
  ASSERT_EQ(rep.points.size(), 1u);
  EXPECT_FALSE(rep.points[0].converged);
}

TEST(CheckSubPoisson, RejectsTooFewSamples) {
  RngStream rng(1, 0, "mgf");
  EXPECT_THROW(check_sub_poisson([](RngStream&) { return 0.0; }, 1.0, 0.0, {1.0}, 10, rng), InvalidArgument);
}

TEST(OlsTailBound, Examples) {
  TailBoundSpec s{TailDirection::Upper, 0.0, 0.01, 1.0, 3.0};
  EXPECT_EQ(ols_tail_bound(s), 1.0);
  s.delta = 0.1;
  EXPECT_NEAR(ols_tail_bound(s), std::exp(-1.0), 1e-15);
  TailBoundSpec lower = s;
  lower.direction = TailDirection::Lower;
  EXPECT_LE(ols_tail_bound(lower), ols_tail_bound(s));
  TailBoundSpec two = s;
  two.direction = TailDirection::TwoSided;
  EXPECT_NEAR(ols_tail_bound(two), 2 * std::exp(-1.0), 1e-15);
}

TEST(OlsTailBound, Monotone) {
  for (auto dir : {TailDirection::Upper, TailDirection::Lower, TailDirection::TwoSided}) {
    const TailBoundSpec base{dir, 0.5, 0.02, 1.5, 2.0};
    const double b = ols_tail_bound(base);
    auto with = [&](auto f) {
      TailBoundSpec s = base;
      f(s);
      return ols_tail_bound(s);
    };
    EXPECT_LT(with([](auto& s) { s.delta = 0.6; }), b);
    EXPECT_LT(with([](auto& s) { s.mean = 3.0; }), b);
    EXPECT_GT(with([](auto& s) { s.gamma = 0.03; }), b);
    EXPECT_GT(with([](auto& s) { s.nu = 2.0; }), b);
  }
}

TEST(OlsTailBound, InvalidSpec) {
  EXPECT_THROW(ols_tail_bound({TailDirection::Upper, 1.5, 1, 1, 1}), InvalidArgument);
  EXPECT_THROW(ols_tail_bound({TailDirection::Upper, 0.5, 0, 1, 1}), InvalidArgument);
  EXPECT_THROW(ols_tail_bound({TailDirection::Upper, 0.5, 1, 1, -1}), InvalidArgument);
}

PullMultiset basis_pulls() {
  return PullMultiset{Matrix::Identity(3, 3), {200, 200, 200}};
}

TEST(McTailCheck, DeterministicRewardsNeverDeviate) {
  RngStream rng(6, 0, "tail");
  const auto zero_var = [](std::size_t c, double m, RngStream&) { return double(c) * m; };
  const auto rep = mc_tail_check(basis_pulls(), Vector::Ones(3), Vector::Unit(3, 0), zero_var,
                                 {TailDirection::TwoSided, 0.01, 1.0 / 200, 1.0, 0.0}, 1000, rng, 1.0);
  for (const auto& c : rep.checks) {
    EXPECT_EQ(c.empirical, 0.0) << c.name;
    EXPECT_TRUE(c.pass());
  }
}

TEST(McTailCheck, PoissonBasisExample) {
  RngStream rng(7, 0, "tail");
  const auto rep = mc_tail_check(basis_pulls(), Vector::Ones(3), Vector::Unit(3, 0),
                                 reward_sum_sampler(RewardModel::poisson()),
                                 {TailDirection::Upper, 0.3, 1.0 / 200, 1.0, 0.0}, 100000, rng);
  EXPECT_NEAR(rep.leverage, 1.0 / 200, 1e-15);
  ASSERT_EQ(rep.checks.size(), 1u);
  EXPECT_NEAR(rep.checks[0].bound, std::exp(-6.0), 1e-12);
  EXPECT_TRUE(rep.checks[0].pass()) << rep.checks[0].empirical;
}

TEST(McTailCheck, LeverageViolationReportsIndex) {
  RngStream rng(8, 0, "tail");
  PullMultiset xs{Matrix::Identity(3, 3), {200, 10, 200}};
  try {
    mc_tail_check(xs, Vector::Ones(3), Vector::Ones(3), reward_sum_sampler(RewardModel::poisson()),
                  {TailDirection::Upper, 0.3, 1.0 / 200, 1.0, 0.0}, 1000, rng);
    FAIL() << "expected PreconditionViolated";
  } catch (const PreconditionViolated& e) {
    EXPECT_EQ(e.index(), 1);
  }
}

TEST(McTailCheck, AlphaBelowTargetRejected) {
  RngStream rng(8, 0, "tail");
  EXPECT_THROW(mc_tail_check(basis_pulls(), Vector::Ones(3), Vector::Unit(3, 0),
                             reward_sum_sampler(RewardModel::poisson()),
                             {TailDirection::Upper, 0.3, 1.0 / 200, 1.0, 0.0}, 1000, rng, 0.5),
               PreconditionViolated);
}

TEST(McTailCheck, DesignPullsBernoulli) {
  // Pulls from a near-optimal design on random nonnegative-mean arms.
  const ArmSet raw = testing::gaussian_arms(40, 3, 12);
  Vector theta(3);
  theta << 0.2, 0.1, 0.05;
  Matrix x = raw.points();
  const Vector m0 = x * theta;
  x.rowwise() -= (m0.minCoeff() / theta.squaredNorm()) * theta.transpose();
  x *= 0.9 / (x * theta).maxCoeff();
  const ArmSet arms(x);
  const auto design = solve_d_optimal(arms).design;
  PullMultiset xs;
  xs.arms = arms.subset(design.support).points();
  for (Index i : design.support) xs.counts.push_back(std::size_t(std::ceil(design.weights[i] * 2000)));
  Eigen::Index best = 0;
  (x * theta).maxCoeff(&best);
  const Vector z = x.row(best).transpose();

  Matrix v = Matrix::Zero(3, 3);
  for (Eigen::Index i = 0; i < xs.arms.rows(); ++i)
    v += double(xs.counts[std::size_t(i)]) * xs.arms.row(i).transpose() * xs.arms.row(i);
  const double gamma = (xs.arms * v.ldlt().solve(z)).maxCoeff();

  for (auto dir : {TailDirection::Upper, TailDirection::Lower, TailDirection::TwoSided}) {
    RngStream rng(9, int(dir), "tail");
    const auto rep = mc_tail_check(xs, theta, z, reward_sum_sampler(RewardModel::bernoulli()),
                                   {dir, 0.1, gamma, 1.0, 0.0}, 20000, rng, 1.0);
    ASSERT_EQ(rep.checks.size(), 3u);
    for (const auto& c : rep.checks) EXPECT_TRUE(c.pass()) << c.name << " " << c.empirical << " " << c.bound;
  }
}

TEST(ChernoffQuota, FairCoins) {
  RngStream rng(10, 0, "quota");
  const auto c = chernoff_quota_check(300, 1.0 / 3.0, 10000, rng);
  EXPECT_NEAR(c.bound, std::exp(-150.0 / 18.0), 1e-15);
  EXPECT_NEAR(c.bound, 2.4e-4, 0.1e-4);
  EXPECT_TRUE(c.pass());
}

TEST(ReportJson, VerdictStrings) {
  const auto ok = make_outcome("x", 0.5, 10, 100);
  EXPECT_EQ(to_json(ok)["verdict"], "PASS");
  const auto bad = make_outcome("x", 0.01, 50, 100);
  EXPECT_EQ(to_json(bad)["verdict"], "FAIL");
}

}  // namespace
}  // namespace linnash
