#pragma once

// D-optimal experimental design over a finite arm set.
//
// The Frank-Wolfe iteration maximizes log det U(lambda) with the closed-form
// line search of the Fedorov-Wynn exchange; by the Kiefer-Wolfowitz
// equivalence the worst-case leverage g(lambda) = max_x x^T U^{-1} x is then
// within (1 + tol) of its optimum d.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "linnash/common.hpp"
#include "linnash/detail/caratheodory.hpp"

namespace linnash {

//! Probability vector over arm indices with its explicit support.
struct DesignWeights {
  std::vector<double> weights;
  IndexSet support;

  static DesignWeights from_weights(std::vector<double> w) {
    DesignWeights out;
    double total = 0.0;
    for (double& v : w) {
      if (!(v > 0.0)) v = 0.0;
      total += v;
    }
    if (total <= 0.0) throw InvalidArgument("design weights have no mass");
    for (double& v : w) v /= total;
    for (Index i = 0; i < w.size(); ++i)
      if (w[i] > 0.0) out.support.push_back(i);
    out.weights = std::move(w);
    return out;
  }

  static DesignWeights uniform(std::size_t n) {
    return from_weights(std::vector<double>(n, 1.0));
  }
};

//! Frank-Wolfe ran out of iterations before the leverage certificate held.
class DesignNotConverged : public Error {
 public:
  DesignNotConverged(double achieved_g, double target)
      : Error("D-optimal design did not converge: g = " +
              std::to_string(achieved_g) + " > target " +
              std::to_string(target)),
        achieved_g_(achieved_g) {}
  double achieved_g() const noexcept { return achieved_g_; }

 private:
  double achieved_g_;
};

struct DesignOptions {
  double tol = 0.05;                //!< stop once g <= (1 + tol) d
  std::size_t max_iter = 200000;
  std::size_t refactor_every = 50;  //!< full refactorization period
  bool record_log_det = false;
};

struct DesignResult {
  DesignWeights design;
  double g = 0.0;               //!< g-value of the returned (pruned) design
  double g_before_prune = 0.0;
  std::size_t iterations = 0;
  bool prune_warning = false;
  std::vector<double> log_det_history;  //!< filled when record_log_det is set
};

struct PruneResult {
  DesignWeights design;
  double g = 0.0;
  bool warning = false;  //!< U became singular; last nonsingular iterate kept
};

inline Matrix information_matrix(const ArmSet& arms, const std::vector<double>& weights) {
  if (weights.size() != arms.size())
    throw DimensionMismatch("information_matrix: " + std::to_string(weights.size()) +
                            " weights for " + std::to_string(arms.size()) + " arms");
  if (arms.dim() == 0) throw DimensionMismatch("information_matrix: d = 0");
  const Matrix& x = arms.points();
  Matrix u = Matrix::Zero(x.cols(), x.cols());
  for (Index i = 0; i < weights.size(); ++i) {
    if (weights[i] == 0.0) continue;
    u.selfadjointView<Eigen::Lower>().rankUpdate(x.row(eidx(i)).transpose(), weights[i]);
  }
  u.triangularView<Eigen::StrictlyUpper>() = u.transpose();
  return u;
}

inline Matrix information_matrix(const ArmSet& arms, const DesignWeights& design) {
  return information_matrix(arms, design.weights);
}

namespace detail {

inline bool is_numerically_singular(const Matrix& u) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(u, Eigen::EigenvaluesOnly);
  const double trace = u.trace();
  return !(trace > 0.0) || es.eigenvalues()(0) <= 1e-10 * trace;
}

// Leverages x_i^T U^{-1} x_i for every row.
inline Vector leverages(const Matrix& x, const Matrix& u_inv) {
  return (x * u_inv).cwiseProduct(x).rowwise().sum();
}

inline Matrix spd_inverse(const Matrix& u) {
  Eigen::LDLT<Matrix> ldlt(u);
  Matrix inv = ldlt.solve(Matrix::Identity(u.rows(), u.cols()));
  return 0.5 * (inv + inv.transpose());
}

inline double log_det_spd(const Matrix& u) {
  Eigen::LDLT<Matrix> ldlt(u);
  double s = 0.0;
  const Vector diag = ldlt.vectorD();
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(diag(i) > 0.0)) return -std::numeric_limits<double>::infinity();
    s += std::log(diag(i));
  }
  return s;
}

inline std::size_t numeric_rank(const Matrix& x, double rel_tol = 1e-9) {
  if (x.rows() == 0 || x.cols() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(x);
  const Vector sv = svd.singularValues();
  if (!(sv(0) > 0.0)) return 0;
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * sv(0)) ++r;
  return r;
}

struct FrankWolfeOutcome {
  std::vector<double> lambda;
  double g = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Fedorov-Wynn / Frank-Wolfe on the rows of x from a nonsingular start.
inline FrankWolfeOutcome frank_wolfe(const Matrix& x, std::vector<double> lambda,
                                     const DesignOptions& opt,
                                     std::vector<double>* log_det_history) {
  const Eigen::Index n = x.rows();
  const double d = static_cast<double>(x.cols());
  const double target = (1.0 + opt.tol) * d;

  auto refactor = [&](Matrix& u_inv, Vector& lev, double* log_det) {
    Matrix u = Matrix::Zero(x.cols(), x.cols());
    for (Eigen::Index i = 0; i < n; ++i)
      if (lambda[static_cast<std::size_t>(i)] > 0.0)
        u.selfadjointView<Eigen::Lower>().rankUpdate(x.row(i).transpose(),
                                                     lambda[static_cast<std::size_t>(i)]);
    u.triangularView<Eigen::StrictlyUpper>() = u.transpose();
    if (is_numerically_singular(u)) throw SingularMatrix("Frank-Wolfe: singular start");
    u_inv = spd_inverse(u);
    lev = leverages(x, u_inv);
    if (log_det) *log_det = log_det_spd(u);
  };

  Matrix u_inv;
  Vector lev;
  double log_det = 0.0;
  refactor(u_inv, lev, &log_det);
  if (log_det_history) log_det_history->push_back(log_det);

  FrankWolfeOutcome out;
  std::size_t since_refactor = 0;
  for (std::size_t it = 0;; ++it) {
    Eigen::Index j = 0;
    const double g = lev.maxCoeff(&j);
    out.g = g;
    out.iterations = it;
    if (g <= target) {
      out.converged = true;
      break;
    }
    if (it >= opt.max_iter) break;

    // Away candidate: the support atom with the smallest leverage.
    Eigen::Index away = -1;
    for (Eigen::Index i = 0; i < n; ++i)
      if (lambda[static_cast<std::size_t>(i)] > 0.0 && (away < 0 || lev(i) < lev(away))) away = i;

    double gamma = (g / d - 1.0) / (g - 1.0);
    bool drop = false;
    if (away >= 0 && 1.0 - lev(away) / d > g / d - 1.0) {
      // Same exact line search, moving mass away from `away`; clipped so its
      // weight stays nonnegative.
      const double lw = lambda[static_cast<std::size_t>(away)];
      const double cap = lw / (1.0 - lw);
      const double lev_a = lev(away);
      double beta = lev_a > 1.0 ? (1.0 - lev_a / d) / (lev_a - 1.0) : cap;
      if (beta >= cap) { beta = cap; drop = true; }
      if (lw < 1.0 && beta > 0.0) {
        j = away;
        gamma = -beta;
      }
    }
    const double g_j = lev(j);
    for (double& v : lambda) v *= (1.0 - gamma);
    lambda[static_cast<std::size_t>(j)] += gamma;
    if (drop && gamma < 0.0) lambda[static_cast<std::size_t>(j)] = 0.0;

    if (++since_refactor >= opt.refactor_every) {
      since_refactor = 0;
      refactor(u_inv, lev, log_det_history ? &log_det : nullptr);
    } else {
      // Sherman-Morrison for U' = (1 - gamma) U + gamma a a^T.
      const Vector w = u_inv * x.row(j).transpose();
      const double denom = (1.0 - gamma) + gamma * g_j;
      const Vector proj = x * w;
      lev = (lev - (gamma / denom) * proj.cwiseAbs2()) / (1.0 - gamma);
      u_inv = (u_inv - (gamma / denom) * (w * w.transpose())) / (1.0 - gamma);
      if (log_det_history) log_det += d * std::log1p(-gamma) + std::log(denom / (1.0 - gamma));
    }
    if (log_det_history) log_det_history->push_back(log_det);
  }
  out.lambda = std::move(lambda);
  return out;
}

// Greedy volumetric starter: d rows by residual norm (determinant gain), then
// up to d more by leverage against the current uniform design.
inline IndexSet volumetric_starter(const Matrix& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  IndexSet chosen;
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  Matrix residual = x;
  for (Eigen::Index k = 0; k < d; ++k) {
    Eigen::Index best = -1;
    double best_norm = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      const double nrm = residual.row(i).squaredNorm();
      if (best < 0 || nrm > best_norm) { best = i; best_norm = nrm; }
    }
    if (best < 0 || !(best_norm > 0.0)) break;
    const Vector q = residual.row(best).transpose() / std::sqrt(best_norm);
    residual -= (residual * q) * q.transpose();
    taken[static_cast<std::size_t>(best)] = true;
    chosen.push_back(static_cast<Index>(best));
  }
  if (static_cast<Eigen::Index>(chosen.size()) < d) return chosen;

  Matrix u = Matrix::Zero(d, d);
  for (Index i : chosen) u.noalias() += x.row(eidx(i)).transpose() * x.row(eidx(i));
  Matrix u_inv = spd_inverse(u);
  Vector lev = leverages(x, u_inv);
  for (Eigen::Index k = 0; k < d && static_cast<Eigen::Index>(chosen.size()) < n; ++k) {
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      if (best < 0 || lev(i) > lev(best)) best = i;
    }
    if (best < 0) break;
    taken[static_cast<std::size_t>(best)] = true;
    chosen.push_back(static_cast<Index>(best));
    // Sherman-Morrison for U + a a^T.
    const Vector v = u_inv * x.row(best).transpose();
    const double denom = 1.0 + lev(best);
    const Vector c = x * v;
    lev -= c.cwiseAbs2() / denom;
    u_inv -= (v * v.transpose()) / denom;
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

// Half-vectorization of x x^T (lower triangle), the feature space in which
// U(lambda) is a linear image of lambda.
inline Matrix outer_product_features(const Matrix& x) {
  const Eigen::Index d = x.cols();
  Matrix f(x.rows(), d * (d + 1) / 2);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index c = 0;
    for (Eigen::Index a = 0; a < d; ++a)
      for (Eigen::Index b = 0; b <= a; ++b) f(i, c++) = x(i, a) * x(i, b);
  }
  return f;
}

}  // namespace detail

//! max over arms of x^T U(lambda)^{-1} x.
inline double g_value(const ArmSet& arms, const std::vector<double>& weights) {
  const Matrix u = information_matrix(arms, weights);
  if (detail::is_numerically_singular(u))
    throw SingularMatrix("g_value: information matrix is singular");
  return detail::leverages(arms.points(), detail::spd_inverse(u)).maxCoeff();
}

inline double g_value(const ArmSet& arms, const DesignWeights& design) {
  return g_value(arms, design.weights);
}

inline double log_det_information(const ArmSet& arms, const std::vector<double>& weights) {
  return detail::log_det_spd(information_matrix(arms, weights));
}

//! Shrinks the support of a design to at most `cap` atoms.
//!
//! Weights below 1e-6/|support| are dropped first. Further atoms are removed
//! by moves that leave U(lambda) unchanged (Caratheodory in the space of
//! symmetric matrices), then by conic moves that keep U up to a factor >= 1;
//! if that is not enough, the atom whose removal costs
//! the least log det is dropped and the remaining weights are re-optimized.
inline PruneResult prune_support(const ArmSet& arms, const DesignWeights& input,
                                 std::size_t cap, double tol = 0.05) {
  const std::size_t d = arms.dim();
  if (cap < d)
    throw InvalidArgument("prune_support: cap " + std::to_string(cap) + " < d " +
                          std::to_string(d));
  if (input.weights.size() != arms.size())
    throw DimensionMismatch("prune_support: weights/arms size");

  PruneResult out;
  out.design = input;

  auto singular = [&](const std::vector<double>& w) {
    return detail::is_numerically_singular(information_matrix(arms, w));
  };

  std::vector<double> w = input.weights;
  const double threshold = 1e-6 / static_cast<double>(std::max<std::size_t>(1, input.support.size()));
  for (double& v : w)
    if (v < threshold) v = 0.0;
  if (singular(w)) {
    out.warning = true;
    out.g = singular(input.weights) ? std::numeric_limits<double>::infinity()
                                    : g_value(arms, input.weights);
    return out;
  }
  out.design = DesignWeights::from_weights(w);

  if (out.design.support.size() > cap) {
    const Matrix features = detail::outer_product_features(arms.points());
    std::vector<double> reduced = detail::reduce_affine_support(features, out.design.weights, cap);
    if (!singular(reduced)) out.design = DesignWeights::from_weights(std::move(reduced));
    if (out.design.support.size() > cap) {
      // Same U with mass s <= 1; renormalizing scales U by 1/s, so g can only drop.
      reduced = detail::reduce_support(features, out.design.weights, cap, false);
      if (!singular(reduced)) out.design = DesignWeights::from_weights(std::move(reduced));
    }
  }

  while (out.design.support.size() > cap) {
    const Matrix u = information_matrix(arms, out.design);
    Index drop = 0;
    double best = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (Index i : out.design.support) {
      const double wi = out.design.weights[i];
      Matrix reduced_u = u;
      reduced_u.selfadjointView<Eigen::Lower>().rankUpdate(arms.arm(i).transpose(), -wi);
      reduced_u.triangularView<Eigen::StrictlyUpper>() = reduced_u.transpose();
      reduced_u /= (1.0 - wi);
      if (detail::is_numerically_singular(reduced_u)) continue;
      const double ld = detail::log_det_spd(reduced_u);
      if (!found || ld > best || (ld == best && wi < out.design.weights[drop])) {
        best = ld;
        drop = i;
        found = true;
      }
    }
    if (!found) {
      out.warning = true;
      break;
    }
    std::vector<double> next = out.design.weights;
    next[drop] = 0.0;
    out.design = DesignWeights::from_weights(std::move(next));

    // Re-optimize on the surviving atoms only.
    const ArmSet sub = arms.subset(out.design.support);
    std::vector<double> sub_w;
    for (Index i : out.design.support) sub_w.push_back(out.design.weights[i]);
    DesignOptions ropt;
    ropt.tol = tol;
    ropt.max_iter = 2000;
    auto fw = detail::frank_wolfe(sub.points(), std::move(sub_w), ropt, nullptr);
    std::vector<double> full(arms.size(), 0.0);
    for (std::size_t k = 0; k < out.design.support.size(); ++k)
      full[out.design.support[k]] = fw.lambda[k];
    out.design = DesignWeights::from_weights(std::move(full));
  }

  out.g = g_value(arms, out.design);
  return out;
}

//! Frank-Wolfe D-optimal design; the result satisfies g <= (1 + tol) d and has
//! at most d(d+1)/2 support points.
inline DesignResult solve_d_optimal(const ArmSet& arms, const DesignOptions& opt = {}) {
  const std::size_t d = arms.dim();
  if (arms.empty() || d == 0) throw InvalidArgument("solve_d_optimal: empty arm set");
  if (!(opt.tol > 0.0)) throw InvalidArgument("solve_d_optimal: tol must be positive");
  if (opt.max_iter < 1) throw InvalidArgument("solve_d_optimal: max_iter must be >= 1");
  const std::size_t rank = detail::numeric_rank(arms.points());
  if (rank < d) throw RankDeficient("solve_d_optimal: arms do not span R^d", rank);

  const Matrix& x = arms.points();
  std::vector<double> lambda(arms.size(), 0.0);
  const IndexSet start = detail::volumetric_starter(x);
  for (Index i : start) lambda[i] = 1.0 / static_cast<double>(start.size());

  DesignResult result;
  const std::size_t cap = d * (d + 1) / 2;
  const double target = (1.0 + opt.tol) * static_cast<double>(d);
  std::size_t budget = opt.max_iter;
  // Pruning can nudge g past the target; resume from the pruned design then.
  for (int round = 0; round < 8; ++round) {
    DesignOptions step = opt;
    step.max_iter = budget;
    auto fw = detail::frank_wolfe(
        x, std::move(lambda), step, opt.record_log_det ? &result.log_det_history : nullptr);
    result.iterations += fw.iterations;
    budget -= std::min(budget, fw.iterations);
    if (!fw.converged) throw DesignNotConverged(fw.g, target);
    if (round == 0) result.g_before_prune = fw.g;

    PruneResult pruned = prune_support(arms, DesignWeights::from_weights(fw.lambda), cap, opt.tol);
    result.design = std::move(pruned.design);
    result.g = pruned.g;
    result.prune_warning = pruned.warning;
    if (result.g <= target || budget == 0) break;
    lambda = result.design.weights;
  }
  return result;
}

//! Orthonormal basis (d x r) of the linear span of the arms.
inline Matrix span_basis(const ArmSet& arms, double rel_tol = 1e-9) {
  Eigen::JacobiSVD<Matrix> svd(arms.points(), Eigen::ComputeThinV);
  const Vector sv = svd.singularValues();
  Eigen::Index r = 0;
  if (sv.size() > 0 && sv(0) > 0.0)
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > rel_tol * sv(0)) ++r;
  return svd.matrixV().leftCols(r);
}

//! D-optimal design that tolerates rank-deficient arm sets by solving inside
//! the arms' linear span. The returned g is measured in span coordinates.
inline DesignResult solve_d_optimal_in_span(const ArmSet& arms, const DesignOptions& opt = {}) {
  const std::size_t rank = detail::numeric_rank(arms.points());
  if (rank == arms.dim()) return solve_d_optimal(arms, opt);
  if (rank == 0) throw RankDeficient("solve_d_optimal_in_span: all arms are zero", 0);
  const Matrix basis = span_basis(arms);
  return solve_d_optimal(ArmSet(arms.points() * basis), opt);
}

}  // namespace linnash
