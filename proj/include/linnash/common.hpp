#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace linnash {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = std::size_t;
using IndexSet = std::vector<Index>;

//! Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

//! Information matrix or covariance is numerically singular.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

//! Point set does not (affinely or linearly) span the ambient space.
class RankDeficient : public Error {
 public:
  RankDeficient(const std::string& what, std::size_t rank)
      : Error(what + " (detected rank " + std::to_string(rank) + ")"),
        rank_(rank) {}
  std::size_t rank() const noexcept { return rank_; }

 private:
  std::size_t rank_;
};

//! A precondition on the inputs failed; carries the offending index if any.
class PreconditionViolated : public Error {
 public:
  explicit PreconditionViolated(const std::string& what,
                                std::ptrdiff_t index = -1)
      : Error(what), index_(index) {}
  std::ptrdiff_t index() const noexcept { return index_; }

 private:
  std::ptrdiff_t index_;
};

//! A finite list of d-dimensional arm vectors, one per row.
class ArmSet {
 public:
  ArmSet() = default;
  explicit ArmSet(Matrix points) : points_(std::move(points)) {}

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(points_.rows());
  }
  std::size_t dim() const noexcept {
    return static_cast<std::size_t>(points_.cols());
  }
  bool empty() const noexcept { return points_.rows() == 0; }

  auto arm(Index i) const { return points_.row(static_cast<Eigen::Index>(i)); }
  const Matrix& points() const noexcept { return points_; }

  //! Rows selected by `indices`, in that order.
  ArmSet subset(const IndexSet& indices) const {
    Matrix sub(static_cast<Eigen::Index>(indices.size()), points_.cols());
    for (std::size_t k = 0; k < indices.size(); ++k)
      sub.row(static_cast<Eigen::Index>(k)) =
          points_.row(static_cast<Eigen::Index>(indices[k]));
    return ArmSet(std::move(sub));
  }

 private:
  Matrix points_;
};

inline Eigen::Index eidx(std::size_t i) { return static_cast<Eigen::Index>(i); }

}  // namespace linnash
