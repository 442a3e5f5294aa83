#pragma once

// Direction-set linear algebra: cosines, projections, Gram-Schmidt, and
// random orthonormal sampling. Direction sets are dense matrices with one
// unit-norm column per direction.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>

#include "ges/errors.hpp"
#include "ges/rng.hpp"

namespace ges {

template <class Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace linalg {

inline constexpr double kOrthogonalityTol = 1e-10;
inline constexpr double kUnitNormTol = 1e-12;
inline constexpr double kDependentDropTol = 1e-10;
inline constexpr int kMaxRedraws = 8;

template <class Scalar>
Scalar dot(const VecX<Scalar>& a, const VecX<Scalar>& b) {
  return a.dot(b);
}

// Cosine of the angle between a and b; zero if either vector is zero.
template <class Scalar>
Scalar cosine(const VecX<Scalar>& a, const VecX<Scalar>& b) {
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0)) return Scalar(0);
  return a.dot(b) / (na * nb);
}

// Orthogonal projection of v onto the span of orthonormal columns.
template <class Scalar>
VecX<Scalar> project_onto_span(const MatX<Scalar>& orthonormal_columns,
                               const VecX<Scalar>& v) {
  if (orthonormal_columns.cols() == 0) return VecX<Scalar>::Zero(v.size());
  return orthonormal_columns * (orthonormal_columns.transpose() * v);
}

namespace detail {

// Subtracts the components of v along each of the first `count` columns of
// basis, twice ("twice is enough" re-orthogonalization).
template <class Scalar>
void orthogonalize_against(const MatX<Scalar>& basis, Eigen::Index count,
                           VecX<Scalar>& v) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index i = 0; i < count; ++i) {
      v.noalias() -= basis.col(i) * basis.col(i).dot(v);
    }
  }
}

}  // namespace detail

// Modified Gram-Schmidt with re-orthogonalization. Columns whose residual
// norm falls below drop_tol (relative to the input column norm, absolute for
// zero input) are dropped; the result has orthonormal columns spanning the
// input span.
template <class Scalar>
MatX<Scalar> gram_schmidt(const MatX<Scalar>& columns,
                          double drop_tol = kDependentDropTol) {
  MatX<Scalar> basis(columns.rows(), columns.cols());
  Eigen::Index kept = 0;
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    VecX<Scalar> v = columns.col(j);
    const Scalar input_norm = v.norm();
    detail::orthogonalize_against<Scalar>(basis, kept, v);
    const Scalar residual = v.norm();
    const Scalar floor =
        static_cast<Scalar>(drop_tol) * std::max<Scalar>(input_norm, Scalar(1));
    if (residual <= floor) continue;
    basis.col(kept) = v / residual;
    ++kept;
  }
  return basis.leftCols(kept);
}

// A set of mutually orthogonal unit columns, validated on construction.
template <class Scalar>
class OrthoSet {
 public:
  OrthoSet() = default;

  explicit OrthoSet(MatX<Scalar> columns) : columns_(std::move(columns)) {
    validate();
  }

  const MatX<Scalar>& columns() const { return columns_; }
  Eigen::Index dim() const { return columns_.rows(); }
  Eigen::Index count() const { return columns_.cols(); }

  void validate() const {
    for (Eigen::Index i = 0; i < columns_.cols(); ++i) {
      const double norm_err =
          std::abs(static_cast<double>(columns_.col(i).norm()) - 1.0);
      if (norm_err > kUnitNormTol) {
        throw NumericError("direction " + std::to_string(i) +
                           " is not unit norm (err " +
                           std::to_string(norm_err) + ")");
      }
      for (Eigen::Index j = 0; j < i; ++j) {
        const double ip =
            std::abs(static_cast<double>(columns_.col(i).dot(columns_.col(j))));
        if (ip > kOrthogonalityTol) {
          throw NumericError("directions " + std::to_string(i) + "," +
                             std::to_string(j) + " not orthogonal (|ip| " +
                             std::to_string(ip) + ")");
        }
      }
    }
  }

 private:
  MatX<Scalar> columns_;
};

namespace detail {

// Draws Gaussian columns one at a time, orthogonalizing each against the
// fixed basis and the columns accepted so far. Degenerate draws are retried.
template <class Scalar>
MatX<Scalar> sample_orthonormal_impl(Eigen::Index n, Eigen::Index p,
                                     const MatX<Scalar>& fixed_basis,
                                     rng::Xoshiro256pp& gen) {
  if (p < 0 || n <= 0) throw NumericError("invalid sampling dimensions");
  if (fixed_basis.cols() + p > n) {
    throw NumericError("requested more orthonormal directions than dimensions");
  }
  MatX<Scalar> out(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
      VecX<Scalar> v(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        v[i] = static_cast<Scalar>(gen.gaussian());
      }
      const Scalar input_norm = v.norm();
      if (fixed_basis.cols() > 0) {
        orthogonalize_against<Scalar>(fixed_basis, fixed_basis.cols(), v);
      }
      orthogonalize_against<Scalar>(out, j, v);
      const Scalar residual = v.norm();
      if (residual <= static_cast<Scalar>(kDependentDropTol) *
                          std::max<Scalar>(input_norm, Scalar(1))) {
        continue;
      }
      out.col(j) = v / residual;
      accepted = true;
      break;
    }
    if (!accepted) {
      throw NumericError("failed to sample an independent direction after " +
                         std::to_string(kMaxRedraws) + " redraws");
    }
  }
  return out;
}

}  // namespace detail

// p random orthonormal directions in R^n, uniform over subspace orientations.
template <class Scalar>
OrthoSet<Scalar> sample_orthonormal(Eigen::Index n, Eigen::Index p,
                                    rng::Xoshiro256pp& gen) {
  MatX<Scalar> empty(n, 0);
  return OrthoSet<Scalar>(detail::sample_orthonormal_impl<Scalar>(n, p, empty, gen));
}

// p random orthonormal directions constrained to the orthogonal complement of
// the given orthonormal basis.
template <class Scalar>
OrthoSet<Scalar> sample_orthogonal_complement(const MatX<Scalar>& basis,
                                              Eigen::Index p,
                                              rng::Xoshiro256pp& gen) {
  return OrthoSet<Scalar>(
      detail::sample_orthonormal_impl<Scalar>(basis.rows(), p, basis, gen));
}

}  // namespace linalg
}  // namespace ges
