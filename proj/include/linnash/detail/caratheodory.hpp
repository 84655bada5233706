#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "linnash/common.hpp"

namespace linnash::detail {

// Removes atoms from a nonnegative weighting while keeping the weighted
// feature sum sum_i w_i f_i fixed. Each step moves along a dependency
// (sum_i c_i f_i = 0) until one weight hits zero. With keep_mass the
// dependencies also satisfy sum_i c_i = 0 (affine Caratheodory); without it
// they are oriented so the total mass never grows (conic Caratheodory, which
// reaches at most rank(f) atoms). Rows of `features` are the atoms' feature
// vectors. Stops once at most `max_atoms` weights are positive or no
// dependency remains.
inline std::vector<double> reduce_support(const Matrix& features, std::vector<double> w,
                                          std::size_t max_atoms, bool keep_mass) {
  if (static_cast<std::size_t>(features.rows()) != w.size())
    throw DimensionMismatch("reduce_affine_support: features/weights size");

  IndexSet active;
  for (Index i = 0; i < w.size(); ++i)
    if (w[i] > 0.0) active.push_back(i);
    else w[i] = 0.0;
  if (active.size() <= max_atoms) return w;

  const Eigen::Index m = features.cols();
  const Eigen::Index k = static_cast<Eigen::Index>(active.size());
  Matrix a(keep_mass ? m + 1 : m, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    a.col(j).head(m) = features.row(eidx(active[static_cast<Index>(j)])).transpose();
    if (keep_mass) a(m, j) = 1.0;
  }
  Eigen::FullPivLU<Matrix> lu(a);
  lu.setThreshold(1e-11);
  Matrix basis = lu.kernel();
  if (lu.rank() == k) return w;

  std::vector<double> local(active.size());
  for (std::size_t j = 0; j < active.size(); ++j) local[j] = w[active[j]];

  auto positive_count = [&] {
    return static_cast<std::size_t>(
        std::count_if(local.begin(), local.end(), [](double v) { return v > 0.0; }));
  };

  Eigen::Index next = 0;
  while (positive_count() > max_atoms && next < basis.cols()) {
    Vector c = basis.col(next);
    const double scale = c.cwiseAbs().maxCoeff();
    if (scale == 0.0) { ++next; continue; }
    if (keep_mass ? c.maxCoeff() <= 1e-12 * scale : c.sum() < 0.0) c = -c;

    Eigen::Index pivot = -1;
    double step = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (c(j) <= 1e-12 * scale) continue;
      const double ratio = local[static_cast<std::size_t>(j)] / c(j);
      if (pivot < 0 || ratio < step) { pivot = j; step = ratio; }
    }
    if (pivot < 0) { ++next; continue; }

    for (Eigen::Index j = 0; j < k; ++j) {
      auto& v = local[static_cast<std::size_t>(j)];
      v -= step * c(j);
      if (v < 0.0) v = 0.0;
    }
    local[static_cast<std::size_t>(pivot)] = 0.0;

    // Later dependencies must not touch the atom just removed.
    for (Eigen::Index col = next + 1; col < basis.cols(); ++col) {
      const double f = basis(pivot, col) / c(pivot);
      basis.col(col) -= f * c;
      basis(pivot, col) = 0.0;
    }
    ++next;
  }

  for (std::size_t j = 0; j < active.size(); ++j) w[active[j]] = local[j];
  return w;
}

inline std::vector<double> reduce_affine_support(const Matrix& features, std::vector<double> w,
                                                 std::size_t max_atoms) {
  return reduce_support(features, std::move(w), max_atoms, true);
}

}  // namespace linnash::detail
