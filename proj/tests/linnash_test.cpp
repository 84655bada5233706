#include "linnash/linnash.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <deque>

#include "test_support.hpp"

namespace linnash {
namespace {

using testing::gaussian_arms;

// Replays a fixed coin sequence; uniform() is constant.
struct StubSource {
  std::deque<bool> coins;
  double u = 0.0;
  bool fair_coin() {
    const bool c = coins.front();
    coins.pop_front();
    return c;
  }
  double uniform() { return u; }
};

double noiseless(const BanditInstance& inst, Index arm, RngStream&) { return inst.mean(arm); }

BanditInstance make_instance(Matrix x, Vector theta, RewardModel m = RewardModel::bernoulli()) {
  return BanditInstance(ArmSet(std::move(x)), std::move(theta), m);
}

TEST(HorizonSplit, FiniteExample) {
  EXPECT_EQ(horizon_split(10000, 4, 1.0, 25, Variant::Finite), 2116u);
}

TEST(HorizonSplit, InfiniteFormula) {
  const double raw = 3.0 * std::sqrt(30000.0 * std::pow(5.0, 2.5) * std::log(30000.0));
  EXPECT_EQ(horizon_split(30000, 5, 1.0, 100000, Variant::Infinite), std::size_t(std::ceil(raw)));
}

TEST(HorizonSplit, Clamps) {
  EXPECT_EQ(horizon_split(50, 4, 1.0, 1000, Variant::Finite), 50u);
  EXPECT_EQ(horizon_split(1, 3, 1.0, 1, Variant::Finite), 4u);
  EXPECT_GE(horizon_split(10, 9, 1e-9, 2, Variant::Finite), 10u);
}

TEST(GenerateArmSequence, EmptyWhenZeroLength) {
  StubSource src;
  const CenterDistribution u{{0}, {1.0}, Vector::Zero(1)};
  EXPECT_TRUE(generate_arm_sequence(0, DesignWeights::uniform(1), u, src).empty());
}

TEST(GenerateArmSequence, QuotaEmptiesPool) {
  // One atom z = 2, quota ceil(1 * 3 / 3) = 1; U always returns arm 0.
  StubSource src{{false, false, false}, 0.0};
  const CenterDistribution u{{0}, {1.0}, Vector::Zero(1)};
  const DesignWeights design{{0.0, 0.0, 1.0}, {2}};
  const auto seq = generate_arm_sequence(3, design, u, src);
  ASSERT_EQ(seq.size(), 3u);
  EXPECT_EQ(seq[0].arm, 2u);
  EXPECT_EQ(seq[0].source, PullSource::Opt);
  EXPECT_EQ(seq[1].arm, 0u);
  EXPECT_EQ(seq[1].source, PullSource::SampleU);
  EXPECT_EQ(seq[2].arm, 0u);
  EXPECT_EQ(seq[2].source, PullSource::SampleU);
}

TEST(GenerateArmSequence, RoundRobinOrder) {
  // Support {1, 3} with quotas ceil(0.5 * 12 / 3) = 2 each.
  StubSource src{std::deque<bool>(12, false), 0.0};
  const CenterDistribution u{{0}, {1.0}, Vector::Zero(1)};
  const DesignWeights design{{0.0, 0.5, 0.0, 0.5}, {3, 1}};
  const auto seq = generate_arm_sequence(12, design, u, src);
  const IndexSet expect{1, 3, 1, 3, 0, 0, 0, 0, 0, 0, 0, 0};
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(seq[i].arm, expect[i]) << i;
}

TEST(GenerateArmSequence, LengthAlwaysMatches) {
  const ArmSet arms = gaussian_arms(40, 3, 1);
  const auto design = solve_d_optimal(arms).design;
  const auto center = center_distribution(arms);
  for (std::size_t len : {1u, 7u, 100u, 1001u}) {
    RngStream rng(len, 0, "seq");
    EXPECT_EQ(generate_arm_sequence(len, design, center, rng).size(), len);
  }
}

TEST(GenerateArmSequence, OptBranchQuotaHolds) {
  // The D/G-OPT branch must fire at least T~/3 times for every quota to fill.
  const ArmSet arms = gaussian_arms(30, 4, 8);
  const auto design = solve_d_optimal(arms).design;
  const auto center = center_distribution(arms);
  int ok = 0;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    RngStream rng(77, r, "seq");
    const auto seq = generate_arm_sequence(300, design, center, rng);
    std::size_t opt = 0;
    for (const auto& e : seq) opt += e.source == PullSource::Opt;
    ok += opt >= 100;
  }
  EXPECT_GE(ok, 997);
}

TEST(GenerateArmSequence, LeverageBoundWhenQuotaMet) {
  const ArmSet arms = gaussian_arms(20, 3, 21);
  DesignOptions opt;
  opt.tol = 1e-11;
  const auto res = solve_d_optimal(arms, opt);
  const auto center = center_distribution(arms);
  const std::size_t t_tilde = 300;
  const double bound = 3.0 * 3 / double(t_tilde) + 1e-9;
  int checked = 0;
  for (std::uint64_t r = 0; r < 50; ++r) {
    RngStream rng(5, r, "seq");
    const auto seq = generate_arm_sequence(t_tilde, res.design, center, rng);
    std::vector<std::size_t> opt_pulls(arms.size(), 0);
    Matrix v = Matrix::Zero(3, 3);
    for (const auto& e : seq) {
      v += arms.arm(e.arm).transpose() * arms.arm(e.arm);
      if (e.source == PullSource::Opt) ++opt_pulls[e.arm];
    }
    bool quota = true;
    for (Index z : res.design.support)
      quota &= opt_pulls[z] >= std::size_t(std::ceil(res.design.weights[z] * t_tilde / 3.0 - 1e-9));
    if (!quota) continue;
    ++checked;
    const Matrix w = arms.points() * v.inverse() * arms.points().transpose();
    double worst = 0.0;
    for (const auto& e : seq) worst = std::max(worst, w.col(eidx(e.arm)).maxCoeff());
    EXPECT_LE(worst, bound) << r;
  }
  EXPECT_GT(checked, 45);
}

TEST(OlsState, SingleUpdate) {
  OlsState s(3);
  s.update(Vector::Unit(3, 0).transpose(), 1.0);
  Matrix expect = Matrix::Zero(3, 3);
  expect(0, 0) = 1;
  EXPECT_EQ(s.v(), expect);
  EXPECT_EQ(s.s(), Vector::Unit(3, 0));
}

TEST(OlsState, BasisRecoversTheta) {
  Vector theta(4);
  theta << 0.3, -1.0, 2.5, 0.0;
  OlsState s(4);
  for (Eigen::Index i = 0; i < 4; ++i) s.update(Vector::Unit(4, i).transpose(), theta(i));
  EXPECT_EQ(s.theta_hat(), theta);
}

TEST(OlsState, MatchesBatchNormalEquations) {
  const ArmSet arms = gaussian_arms(10, 4, 3);
  RngStream rng(3, 0, "rewards");
  Vector r(10);
  OlsState s(4);
  for (Index i = 0; i < 10; ++i) {
    r(eidx(i)) = rng.normal();
    s.update(arms.arm(i), r(eidx(i)));
  }
  const Matrix& x = arms.points();
  const Vector batch = (x.transpose() * x).ldlt().solve(x.transpose() * r);
  EXPECT_LT((s.theta_hat() - batch).norm(), 1e-10);
  EXPECT_LE((s.v() * s.theta_hat() - s.s()).norm(), 1e-8 * s.s().norm());
}

TEST(OlsState, SingularUsesPseudoInverse) {
  OlsState s(2);
  s.update(Vector::Unit(2, 0).transpose(), 0.7);
  s.update(Vector::Unit(2, 0).transpose(), 0.3);
  EXPECT_NEAR(s.theta_hat()(0), 0.5, 1e-15);
  EXPECT_EQ(s.theta_hat()(1), 0.0);
}

TEST(NashBounds, Examples) {
  auto b = nash_bounds(0.5, 1.0, 2, 4.0, 900);
  EXPECT_NEAR(b.lncb, 0.1, 1e-15);
  EXPECT_NEAR(b.uncb, 0.9, 1e-15);
  b = nash_bounds(0.0, 1.0, 2, 4.0, 900);
  EXPECT_EQ(b.lncb, 0.0);
  EXPECT_EQ(b.uncb, 0.0);
  b = nash_bounds(-0.1, 1.0, 2, 4.0, 900);
  EXPECT_EQ(b.lncb, -0.1);
  EXPECT_EQ(b.uncb, -0.1);
}

TEST(Eliminate, SingleArmUnchanged) {
  EXPECT_EQ(eliminate_finite({4}, {0.0}, 1.0, 3, 10.0, 5.0), IndexSet{4});
  EXPECT_EQ(eliminate_finite({4}, {-3.0}, 1.0, 3, 10.0, 5.0), IndexSet{4});
}

TEST(Eliminate, ForcedWidths) {
  const std::vector<NashBounds> b{{0.85, 0.95}, {0.05, 0.15}};
  EXPECT_EQ(eliminate_with_bounds({0, 1}, b, {0.9, 0.1}), IndexSet{0});
}

TEST(Eliminate, ZeroWidthKeepsArgmaxSet) {
  EXPECT_EQ(eliminate_finite({0, 1, 2, 3}, {0.2, 0.7, 0.7, 0.1}, 1.0, 3, 10.0, 5.0, 0.0),
            (IndexSet{1, 2}));
}

TEST(Eliminate, NeverEmpty) {
  const std::vector<NashBounds> b{{0.5, 0.4}, {0.6, 0.45}};
  EXPECT_EQ(eliminate_with_bounds({7, 9}, b, {0.45, 0.52}), IndexSet{9});
}

TEST(RunLinNash, SingleArmAlwaysPlayed) {
  Matrix x(1, 2);
  x << 0.3, 0.1;
  Vector theta(2);
  theta << 1.0, 1.0;
  const auto inst = make_instance(x, theta);
  for (Variant v : {Variant::Finite, Variant::Infinite}) {
    RngStream rng(1, 0, "run");
    const auto res = run_linnash(inst, 500, v, rng);
    ASSERT_EQ(res.log.entries.size(), 500u);
    for (const auto& e : res.log.entries) {
      ASSERT_EQ(e.arm, 0u);
      ASSERT_EQ(e.true_mean, inst.optimum());
    }
  }
}

TEST(RunLinNash, InfeasibleHorizon) {
  RngStream rng(1, 0, "run");
  RngStream g(1, 0, "instance");
  const auto inst = generate_instance(5, 10, 0.5, RewardModel::bernoulli(), g);
  EXPECT_THROW(run_linnash_finite(inst, 5, rng), InvalidArgument);
}

TEST(RunLinNash, RoundAccountingAndNesting) {
  RngStream g(3, 0, "instance");
  const auto inst = generate_instance(4, 60, 0.5, RewardModel::bernoulli(), g);
  for (Variant v : {Variant::Finite, Variant::Infinite}) {
    RngStream rng(3, 1, "run");
    const std::size_t T = 20000;
    const auto res = run_linnash(inst, T, v, rng);
    ASSERT_EQ(res.log.entries.size(), T);
    std::size_t total = 0;
    for (const auto& p : res.trace.phases) {
      total += p.rounds;
      if (p.index > 0) EXPECT_LE(double(p.rounds), p.t_prime + 4 * 5 / 2);
      EXPECT_LE(p.surviving_after, p.surviving_before);
    }
    EXPECT_EQ(total, T);
    EXPECT_EQ(res.trace.phases[0].rounds, res.trace.t_tilde);
    for (std::size_t k = 1; k < res.trace.surviving_history.size(); ++k)
      for (Index a : res.trace.surviving_history[k])
        EXPECT_TRUE(std::binary_search(res.trace.surviving_history[k - 1].begin(),
                                       res.trace.surviving_history[k - 1].end(), a));
    // Phase entries carry their phase number.
    int last = 0;
    for (const auto& e : res.log.entries) {
      EXPECT_GE(e.phase, last);
      last = e.phase;
    }
  }
}

TEST(RunLinNash, EmpiricalBestNeverEliminated) {
  RngStream g(4, 0, "instance");
  const auto inst = generate_instance(3, 40, 0.5, RewardModel::bernoulli(), g);
  for (std::uint64_t r = 0; r < 5; ++r) {
    RngStream rng(4, r, "run");
    const auto res = run_linnash_finite(inst, 10000, rng);
    IndexSet before(inst.size());
    for (Index i = 0; i < inst.size(); ++i) before[i] = i;
    for (std::size_t k = 0; k < res.trace.phases.size(); ++k) {
      const Vector& th = res.trace.phases[k].theta_hat;
      Index best = before[0];
      for (Index a : before)
        if (inst.arms().arm(a).dot(th) > inst.arms().arm(best).dot(th)) best = a;
      const IndexSet& after = res.trace.surviving_history[k];
      EXPECT_TRUE(std::find(after.begin(), after.end(), best) != after.end()) << "phase " << k;
      before = after;
    }
  }
}

TEST(RunLinNash, NoiselessEliminationMatchesRule) {
  RngStream g(6, 0, "instance");
  const auto inst = generate_instance(3, 25, 0.5, RewardModel::bernoulli(), g);
  RngStream rng(6, 0, "run");
  const std::size_t T = 1000000;
  const auto res = run_linnash_finite(inst, T, rng, {}, noiseless);

  // Replay the rule on exact means.
  const double log_tx = std::log(double(T) * 25.0);
  auto apply = [&](const IndexSet& s, double t) {
    double best = -1e300;
    for (Index a : s) best = std::max(best, nash_bounds(inst.mean(a), 1.0, 3, log_tx, t).lncb);
    IndexSet keep;
    for (Index a : s)
      if (nash_bounds(inst.mean(a), 1.0, 3, log_tx, t).uncb >= best) keep.push_back(a);
    return keep;
  };
  IndexSet expect(25);
  for (Index i = 0; i < 25; ++i) expect[i] = i;
  for (std::size_t k = 0; k < res.trace.phases.size(); ++k) {
    const auto& p = res.trace.phases[k];
    if (!p.estimated) continue;
    // Late survivors may not span R^d; only the estimates on them are exact.
    for (Index a : expect) EXPECT_NEAR(inst.arms().arm(a).dot(p.theta_hat), inst.mean(a), 1e-9) << k;
    expect = apply(expect, p.t_prime);
    EXPECT_EQ(res.trace.surviving_history[k], expect) << k;
  }
  EXPECT_LT(res.trace.final_surviving.size(), 25u);
}

TEST(RunLinNash, ZeroWidthVariantsAgree) {
  RngStream g(8, 0, "instance");
  const auto inst = generate_instance(4, 50, 0.5, RewardModel::bernoulli(), g);
  LinNashOptions opt;
  opt.width_scale = 0.0;
  RngStream a(8, 0, "run"), b(8, 0, "run");
  const auto fin = run_linnash_finite(inst, 5000, a, opt, noiseless);
  const auto inf = run_linnash_infinite(inst, 5000, b, opt, noiseless);
  EXPECT_EQ(fin.trace.final_surviving, inf.trace.final_surviving);
  EXPECT_EQ(fin.trace.final_surviving, IndexSet{inst.best_arm()});
}

TEST(RunLinNash, OrthogonalArmsKeepOptimum) {
  Matrix x(2, 2);
  x << 1, 0, 0, 1;
  Vector theta(2);
  theta << 0.5, 0.1;
  const auto inst = make_instance(x, theta);
  int kept = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    RngStream rng(2024, r, "run");
    const auto res = run_linnash_finite(inst, 20000, rng);
    const auto& s = res.trace.final_surviving;
    kept += std::find(s.begin(), s.end(), Index{0}) != s.end();
  }
  EXPECT_GE(kept, 95);
}

TEST(RunLinNash, Deterministic) {
  RngStream g(9, 0, "instance");
  const auto inst = generate_instance(3, 30, 0.5, RewardModel::bernoulli(), g);
  RngStream a(9, 2, "run"), b(9, 2, "run");
  const auto ra = run_linnash_finite(inst, 3000, a);
  const auto rb = run_linnash_finite(inst, 3000, b);
  ASSERT_EQ(ra.log.entries.size(), rb.log.entries.size());
  for (std::size_t t = 0; t < ra.log.entries.size(); ++t) {
    ASSERT_EQ(ra.log.entries[t].arm, rb.log.entries[t].arm);
    ASSERT_EQ(ra.log.entries[t].reward, rb.log.entries[t].reward);
  }
}

TEST(RunLinNash, RankDeficientSurvivors) {
  // Arms on a line through the origin: Part II designs live in a 1-d span.
  Matrix x(5, 3);
  for (Eigen::Index i = 0; i < 5; ++i) x.row(i) << 0.1 * (i + 1), 0.2 * (i + 1), 0.0;
  Vector theta(3);
  theta << 0.5, 0.25, 3.0;
  const auto inst = make_instance(x, theta);
  RngStream rng(1, 0, "run");
  const auto res = run_linnash_finite(inst, 4000, rng);
  EXPECT_EQ(res.log.entries.size(), 4000u);
}

}  // namespace
}  // namespace linnash
