#include "linnash/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "test_support.hpp"

namespace linnash {
namespace {

using testing::gaussian_arms;

void expect_distribution_valid(const CenterDistribution& dist, const ArmSet& arms,
                               std::size_t max_atoms) {
  ASSERT_EQ(dist.atom_indices.size(), dist.atom_weights.size());
  EXPECT_LE(dist.atom_indices.size(), max_atoms);
  double total = 0.0;
  Vector mean = Vector::Zero(eidx(arms.dim()));
  for (std::size_t k = 0; k < dist.atom_indices.size(); ++k) {
    EXPECT_GE(dist.atom_weights[k], 0.0);
    total += dist.atom_weights[k];
    mean += dist.atom_weights[k] * arms.arm(dist.atom_indices[k]).transpose();
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_LE((mean - dist.center).norm(), 1e-8 * std::max(1.0, arms.points().rowwise().norm().maxCoeff()));
}

TEST(Mvee, SymmetricSegment) {
  Matrix x(2, 1);
  x << -1, 1;
  const auto r = mvee(ArmSet(x));
  EXPECT_NEAR(r.ellipsoid.center(0), 0.0, 1e-12);
  EXPECT_NEAR(r.ellipsoid.shape(0, 0), 1.0, 1e-9);
}

TEST(Mvee, Cross) {
  Matrix x(4, 2);
  x << 1, 0, -1, 0, 0, 1, 0, -1;
  const auto r = mvee(ArmSet(x));
  EXPECT_LT(r.ellipsoid.center.norm(), 1e-12);
  EXPECT_LT((r.ellipsoid.shape - Matrix::Identity(2, 2)).norm(), 1e-6);
  for (Eigen::Index i = 0; i < 4; ++i)
    EXPECT_NEAR(r.ellipsoid.shape_norm_sq(x.row(i).transpose()), 1.0, 1e-6);
}

TEST(Mvee, TriangleMatchesSteinerCircumellipse) {
  // The Steiner circumellipse is the minimum-area ellipse through a
  // triangle's vertices; its center is the centroid and every vertex lies on
  // its boundary.
  Matrix x(3, 2);
  x << 0, 0, 1, 0, 0, 1;
  const Vector centroid = x.colwise().mean().transpose();
  const auto r = mvee(ArmSet(x), 1e-9);
  EXPECT_NEAR(r.ellipsoid.center(0), centroid(0), 1e-6);
  EXPECT_NEAR(r.ellipsoid.center(1), centroid(1), 1e-6);
  EXPECT_NEAR(centroid(0), 1.0 / 3.0, 1e-15);
  for (Eigen::Index i = 0; i < 3; ++i)
    EXPECT_NEAR(r.ellipsoid.shape_norm_sq(x.row(i).transpose()), 1.0, 1e-6);
}

TEST(Mvee, ContainmentAndBarycenterOnRandomClouds) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t d = 2 + seed % 6;
    const ArmSet pts = gaussian_arms(20 + 7 * seed, d, 500 + seed);
    const auto r = mvee(pts, 1e-6);
    Vector bary = Vector::Zero(eidx(d));
    for (Index i = 0; i < pts.size(); ++i) {
      EXPECT_LE(r.ellipsoid.shape_norm_sq(pts.arm(i).transpose()), 1.0 + 1e-6) << seed;
      bary += r.weights[i] * pts.arm(i).transpose();
    }
    EXPECT_LE((bary - r.ellipsoid.center).norm(), 1e-8);
    Eigen::SelfAdjointEigenSolver<Matrix> es(r.ellipsoid.shape);
    EXPECT_GT(es.eigenvalues()(0), 0.0);
    EXPECT_LT((r.ellipsoid.shape - r.ellipsoid.shape.transpose()).norm(), 1e-10);
  }
}

TEST(Mvee, DegenerateReportsRank) {
  Matrix x(4, 3);
  x << 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 1, 0;
  try {
    mvee(ArmSet(x));
    FAIL() << "expected RankDeficient";
  } catch (const RankDeficient& e) {
    EXPECT_EQ(e.rank(), 2u);
  }
}

TEST(CaratheodoryReduce, SinglePoint) {
  Matrix x(1, 2);
  x << 0.3, -2;
  const auto dist = caratheodory_reduce(ArmSet(x), {1.0}, x.row(0).transpose());
  EXPECT_EQ(dist.atom_indices, IndexSet{0});
  EXPECT_EQ(dist.atom_weights, std::vector<double>{1.0});
}

TEST(CaratheodoryReduce, LineThreePoints) {
  Matrix x(3, 1);
  x << 0, 1, 2;
  const ArmSet pts(x);
  const auto dist = caratheodory_reduce(pts, {0.25, 0.5, 0.25}, Vector::Constant(1, 1.0));
  expect_distribution_valid(dist, pts, 2);
}

TEST(CaratheodoryReduce, UnitSquareCorners) {
  Matrix x(4, 2);
  x << 0, 0, 1, 0, 0, 1, 1, 1;
  const ArmSet pts(x);
  const auto dist = caratheodory_reduce(pts, {0.25, 0.25, 0.25, 0.25}, Vector::Constant(2, 0.5));
  expect_distribution_valid(dist, pts, 3);
}

TEST(CaratheodoryReduce, RandomDenseWeights) {
  RngStream rng(3, 0, "weights");
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t d = 1 + seed % 7;
    const ArmSet pts = gaussian_arms(40, d, 900 + seed);
    std::vector<double> w(40);
    for (double& v : w) v = rng.uniform() + 1e-3;
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= s;
    Vector target = Vector::Zero(eidx(d));
    for (Index i = 0; i < 40; ++i) target += w[i] * pts.arm(i).transpose();
    expect_distribution_valid(caratheodory_reduce(pts, w, target), pts, d + 1);
  }
}

TEST(CaratheodoryReduce, InconsistentTargetRejected) {
  Matrix x(2, 1);
  x << 0, 1;
  EXPECT_THROW(caratheodory_reduce(ArmSet(x), {0.5, 0.5}, Vector::Constant(1, 0.9)),
               PreconditionViolated);
  EXPECT_THROW(caratheodory_reduce(ArmSet(x), {0.7, 0.7}, Vector::Constant(1, 0.7)),
               PreconditionViolated);
}

TEST(CenterDistribution, CrossCenteredAtOrigin) {
  Matrix x(4, 2);
  x << 1, 0, -1, 0, 0, 1, 0, -1;
  const ArmSet arms(x);
  const auto dist = center_distribution(arms);
  expect_distribution_valid(dist, arms, 3);
  EXPECT_LT(dist.center.norm(), 1e-8);
}

TEST(CenterDistribution, SingleArm) {
  Matrix x(1, 3);
  x << 0.1, 0.2, 0.3;
  const auto dist = center_distribution(ArmSet(x));
  EXPECT_EQ(dist.atom_indices, IndexSet{0});
  EXPECT_EQ(dist.atom_weights, std::vector<double>{1.0});
}

TEST(CenterDistribution, CollinearArmsUseAffineHull) {
  Matrix x(5, 3);
  for (Eigen::Index i = 0; i < 5; ++i) x.row(i) << 1.0 + i, 2.0 * i, -0.5 * i;
  const ArmSet arms(x);
  const auto dist = center_distribution(arms);
  expect_distribution_valid(dist, arms, 2);
  // Segment center is the midpoint of the extreme arms.
  EXPECT_LT((dist.center - 0.5 * (x.row(0) + x.row(4)).transpose()).norm(), 1e-6);
}

TEST(CenterDistribution, FewerArmsThanDimension) {
  const ArmSet arms = gaussian_arms(3, 6, 17);
  const auto dist = center_distribution(arms);
  expect_distribution_valid(dist, arms, 3);
}

// Shift arms along theta so the smallest mean is exactly zero.
ArmSet nonnegative_instance(std::size_t n, std::size_t d, std::uint64_t seed, Vector& theta) {
  RngStream rng(seed, 0, "lemma-theta");
  theta.resize(eidx(d));
  for (Eigen::Index j = 0; j < theta.size(); ++j) theta(j) = rng.normal();
  Matrix x = gaussian_arms(n, d, seed).points();
  const double shift = (x * theta).minCoeff() / theta.squaredNorm();
  x.rowwise() -= shift * theta.transpose();
  return ArmSet(x);
}

TEST(CenterDistribution, ExpectedRewardAtLeastOptimumOverDPlusOne) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Vector theta;
    const ArmSet arms = nonnegative_instance(50, 3, 7000 + seed, theta);
    const auto dist = center_distribution(arms);
    expect_distribution_valid(dist, arms, 4);
    const double best = (arms.points() * theta).maxCoeff();
    EXPECT_GE(dist.expected_value(arms, theta), best / 4.0) << seed;
  }
}

TEST(CenterDistribution, AdversarialOrthogonalArms) {
  // All but one arm orthogonal to theta: uniform sampling would get best/n.
  const std::size_t d = 4;
  Matrix x = Matrix::Zero(40, eidx(d));
  RngStream rng(5, 0, "ortho");
  for (Eigen::Index i = 0; i < 39; ++i)
    for (Eigen::Index j = 1; j < eidx(d); ++j) x(i, j) = rng.normal();
  x(39, 0) = 1.0;
  Vector theta = Vector::Zero(eidx(d));
  theta(0) = 1.0;
  const ArmSet arms(x);
  const auto dist = center_distribution(arms);
  EXPECT_GE(dist.expected_value(arms, theta), 1.0 / (d + 1) - 1e-8);

  // Looser ellipsoids keep the eps-adjusted guarantee exactly.
  for (double eps : {1e-2, 1e-3, 1e-6}) {
    const auto coarse = center_distribution(arms, eps);
    EXPECT_GE(coarse.expected_value(arms, theta), 1.0 / (d * (1 + eps) + 1) - 1e-12) << eps;
  }
}

}  // namespace
}  // namespace linnash
