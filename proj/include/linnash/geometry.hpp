#pragma once

// Ellipsoid center of conv(X) and its expression as a small convex
// combination of arms.
//
// We use the minimum-volume enclosing (Loewner) ellipsoid. Shrunk by 1/d about
// its center it lies inside conv(X), so for any theta with <x, theta> >= 0 on
// every arm the center c satisfies <c, theta> >= max_x <x, theta> / (d + 1).
// The center is the barycenter of the dual weights, so a Caratheodory
// reduction of those weights yields the sampling distribution directly.
//
// With the approximate ellipsoid (containment 1 + eps) the bound becomes
// max_x <x, theta> / (d (1 + eps) + 1): the weighted variance of <x, theta> is
// at most (M - mean) mean for values in [0, M], and every point is within
// d (1 + eps) of the center in the scatter metric.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "linnash/common.hpp"
#include "linnash/design.hpp"
#include "linnash/detail/caratheodory.hpp"

namespace linnash {

//! {x : (x - center)^T shape (x - center) <= 1}
struct Ellipsoid {
  Vector center;
  Matrix shape;

  double shape_norm_sq(const Eigen::Ref<const Vector>& x) const {
    const Vector diff = x - center;
    return diff.dot(shape * diff);
  }
};

struct MveeResult {
  Ellipsoid ellipsoid;
  std::vector<double> weights;  //!< barycentric weights; center = sum_i w_i x_i
  std::size_t iterations = 0;
};

//! A distribution over at most d + 1 arms whose mean is `center`.
struct CenterDistribution {
  IndexSet atom_indices;
  std::vector<double> atom_weights;
  Vector center;

  //! Inverse-CDF draw from a uniform variate in [0, 1).
  Index sample(double u01) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < atom_indices.size(); ++k) {
      acc += atom_weights[k];
      if (u01 < acc) return atom_indices[k];
    }
    return atom_indices.back();
  }

  //! E_{x ~ U} <x, theta>
  double expected_value(const ArmSet& arms, const Vector& theta) const {
    double s = 0.0;
    for (std::size_t k = 0; k < atom_indices.size(); ++k)
      s += atom_weights[k] * arms.arm(atom_indices[k]).dot(theta);
    return s;
  }
};

namespace detail {

struct AffineFrame {
  Vector origin;
  Matrix basis;  // d x r, orthonormal columns
  std::size_t rank = 0;
};

inline AffineFrame affine_frame(const Matrix& x, double rel_tol = 1e-9) {
  AffineFrame f;
  f.origin = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - f.origin.transpose();
  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  const Vector sv = svd.singularValues();
  Eigen::Index r = 0;
  if (sv.size() > 0 && sv(0) > 0.0)
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > rel_tol * sv(0)) ++r;
  f.rank = static_cast<std::size_t>(r);
  f.basis = svd.matrixV().leftCols(r);
  return f;
}

inline double point_scale(const Matrix& x) {
  return std::max(1.0, x.rowwise().norm().maxCoeff());
}

}  // namespace detail

//! Minimum-volume enclosing ellipsoid by the Khachiyan iteration (with
//! Todd-Yildirim away steps) on the lifted points (x, 1). On return every
//! point satisfies (x - c)^T H (x - c) <= 1 + eps.
inline MveeResult mvee(const ArmSet& points, double eps = 1e-6, std::size_t max_iter = 1000000) {
  if (points.empty()) throw InvalidArgument("mvee: empty point set");
  if (!(eps > 0.0)) throw InvalidArgument("mvee: eps must be positive");
  const std::size_t d = points.dim();
  const detail::AffineFrame frame = detail::affine_frame(points.points());
  if (frame.rank < d) throw RankDeficient("mvee: points do not affinely span R^d", frame.rank);

  const Eigen::Index n = points.points().rows();
  Matrix lifted(n, eidx(d) + 1);
  lifted.leftCols(eidx(d)) = points.points();
  lifted.col(eidx(d)).setOnes();

  std::vector<double> u(static_cast<std::size_t>(n), 0.0);
  const IndexSet start = detail::volumetric_starter(lifted);
  for (Index i : start) u[i] = 1.0 / static_cast<double>(start.size());

  DesignOptions opt;
  opt.tol = static_cast<double>(d) * eps / static_cast<double>(d + 1);
  opt.max_iter = max_iter;
  auto fw = detail::frank_wolfe(lifted, std::move(u), opt, nullptr);
  if (!fw.converged)
    throw DesignNotConverged(fw.g, (1.0 + opt.tol) * static_cast<double>(d + 1));

  MveeResult out;
  out.iterations = fw.iterations;
  out.weights = std::move(fw.lambda);
  const Matrix& x = points.points();
  Vector c = Vector::Zero(eidx(d));
  for (Eigen::Index i = 0; i < n; ++i) c += out.weights[static_cast<std::size_t>(i)] * x.row(i).transpose();
  Matrix scatter = Matrix::Zero(eidx(d), eidx(d));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = out.weights[static_cast<std::size_t>(i)];
    if (w == 0.0) continue;
    const Vector diff = x.row(i).transpose() - c;
    scatter.noalias() += w * diff * diff.transpose();
  }
  Matrix shape = detail::spd_inverse(scatter) / static_cast<double>(d);
  out.ellipsoid.center = std::move(c);
  out.ellipsoid.shape = 0.5 * (shape + shape.transpose());
  return out;
}

//! Rewrites target = sum_i w_i p_i with at most d + 1 of the input points.
inline CenterDistribution caratheodory_reduce(const ArmSet& points, const std::vector<double>& weights,
                                              const Vector& target, std::size_t max_atoms = 0) {
  if (weights.size() != points.size())
    throw DimensionMismatch("caratheodory_reduce: weights/points size");
  if (static_cast<std::size_t>(target.size()) != points.dim())
    throw DimensionMismatch("caratheodory_reduce: target dimension");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::any_of(weights.begin(), weights.end(), [](double w) { return w < 0.0; }) ||
      std::abs(total - 1.0) > 1e-9)
    throw PreconditionViolated("caratheodory_reduce: weights are not convex");

  const Matrix& x = points.points();
  const double tol = 1e-8 * detail::point_scale(x);
  Vector combo = Vector::Zero(target.size());
  for (Index i = 0; i < weights.size(); ++i) combo += weights[i] * x.row(eidx(i)).transpose();
  if ((combo - target).norm() > tol)
    throw PreconditionViolated("caratheodory_reduce: weighted sum differs from target by " +
                               std::to_string((combo - target).norm()));

  if (max_atoms == 0) max_atoms = points.dim() + 1;
  std::vector<double> reduced = detail::reduce_affine_support(x, weights, max_atoms);

  CenterDistribution out;
  double mass = 0.0;
  for (Index i = 0; i < reduced.size(); ++i)
    if (reduced[i] > 0.0) {
      out.atom_indices.push_back(i);
      out.atom_weights.push_back(reduced[i]);
      mass += reduced[i];
    }
  for (double& w : out.atom_weights) w /= mass;
  out.center = target;
  return out;
}

//! Sampling distribution U over at most d + 1 arms with E_U[x] equal to the
//! enclosing-ellipsoid center. Arm sets that are not full-dimensional are
//! handled inside their affine hull. The default eps keeps the (d + 1)
//! reward guarantee within 1e-8 relative slack.
inline CenterDistribution center_distribution(const ArmSet& arms, double eps = 1e-9) {
  if (arms.empty()) throw InvalidArgument("center_distribution: empty arm set");
  const Matrix& x = arms.points();
  const detail::AffineFrame frame = detail::affine_frame(x);
  if (frame.rank == 0) {
    CenterDistribution single;
    single.atom_indices = {0};
    single.atom_weights = {1.0};
    single.center = x.row(0).transpose();
    return single;
  }

  std::vector<double> weights;
  if (frame.rank == arms.dim()) {
    weights = mvee(arms, eps).weights;
  } else {
    const Matrix coords = (x.rowwise() - frame.origin.transpose()) * frame.basis;
    weights = mvee(ArmSet(coords), eps).weights;
  }
  Vector center = Vector::Zero(x.cols());
  for (Index i = 0; i < weights.size(); ++i) center += weights[i] * x.row(eidx(i)).transpose();
  return caratheodory_reduce(arms, weights, center, frame.rank + 1);
}

}  // namespace linnash
