#pragma once

// Linear Thompson sampling (Gaussian posterior, Agrawal and Goyal style).

#include <cmath>

#include "linnash/common.hpp"
#include "linnash/env.hpp"
#include "linnash/linnash.hpp"
#include "linnash/rng.hpp"
#include "linnash/runlog.hpp"

namespace linnash {

struct ThompsonOptions {
  double v = 0.25;
  double lambda_reg = 1.0;
};

//! B = lambda I + sum x x^T kept as a Cholesky factor; f = sum r x.
class TsState {
 public:
  TsState(std::size_t d, double lambda_reg)
      : llt_(lambda_reg * Matrix::Identity(eidx(d), eidx(d))), f_(Vector::Zero(eidx(d))) {}

  template <class Row>
  void update(const Row& x, double reward) {
    llt_.rankUpdate(x.transpose(), 1.0);
    f_.noalias() += reward * x.transpose();
  }

  Vector mean() const { return llt_.solve(f_); }

  //! theta ~ N(B^{-1} f, v^2 B^{-1}) via B = L L^T.
  Vector sample(double v, RngStream& rng) const {
    Vector z(f_.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = rng.normal();
    Vector noise = llt_.matrixU().solve(z);
    return mean() + v * noise;
  }

  Matrix b() const { return llt_.reconstructedMatrix(); }

 private:
  Eigen::LLT<Matrix> llt_;
  Vector f_;
};

inline RunLog run_thompson(const BanditInstance& inst, std::size_t T, const ThompsonOptions& opt, RngStream& rng,
                           const RewardSource& reward = default_reward) {
  if (!(opt.v > 0.0)) throw InvalidArgument("run_thompson: v must be positive");
  if (!(opt.lambda_reg > 0.0)) throw InvalidArgument("run_thompson: lambda_reg must be positive");
  RunLog log;
  log.header = make_header(inst, "ts", rng.lineage());
  log.entries.reserve(T);
  RngStream posterior_rng = rng.child("posterior");
  RngStream reward_rng = rng.child("rewards");
  const Matrix& x = inst.arms().points();
  TsState state(inst.dim(), opt.lambda_reg);
  Vector scores(x.rows());
  for (std::size_t t = 0; t < T; ++t) {
    const Vector theta = state.sample(opt.v, posterior_rng);
    scores.noalias() = x * theta;
    Eigen::Index best = 0;
    scores.maxCoeff(&best);
    const Index arm = static_cast<Index>(best);
    const double r = reward(inst, arm, reward_rng);
    state.update(x.row(best), r);
    log.entries.push_back({arm, inst.mean(arm), r, 0, PullSource::Thompson});
  }
  return log;
}

}  // namespace linnash
