#pragma once

#include <algorithm>
#include <complex>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "voltdmd/error.hpp"

namespace voltdmd {

/// How many singular triplets a truncated SVD keeps.
struct RankPolicy {
  enum class Mode { fixed, relative_threshold, energy };

  Mode mode = Mode::relative_threshold;
  double value = 1e-10;

  static RankPolicy fixed(Eigen::Index r) { return {Mode::fixed, static_cast<double>(r)}; }
  static RankPolicy relative(double eps) { return {Mode::relative_threshold, eps}; }
  static RankPolicy energy(double eta) { return {Mode::energy, eta}; }
  /// Keeps every numerically nonzero singular value.
  static RankPolicy all() { return fixed(std::numeric_limits<int>::max()); }

  void validate() const;

  /// "fixed:<r>", "rel:<eps>" or "energy:<eta>".
  std::string to_string() const;
  static RankPolicy parse(std::string_view text);

  friend bool operator==(const RankPolicy&, const RankPolicy&) = default;
};

/// Rank-r factorization M ~= U diag(S) V^T.
template <typename Scalar>
struct SvdFactor {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RealVector = Eigen::Matrix<typename Eigen::NumTraits<Scalar>::Real, Eigen::Dynamic, 1>;

  Matrix U;           // p x r
  RealVector S;       // r, non-increasing, positive
  Matrix V;           // q x r
  RealVector all_S;   // every singular value of the source matrix

  Eigen::Index rank() const { return S.size(); }
  Matrix reconstruct() const { return U * S.asDiagonal() * V.adjoint(); }
};

namespace detail {

/// Largest index count that every policy may keep: values within roundoff of
/// zero are never retained.
template <typename RealVector>
Eigen::Index numerical_rank(const RealVector& s, Eigen::Index p, Eigen::Index q) {
  using Real = typename RealVector::Scalar;
  if (s.size() == 0 || !(s[0] > Real(0))) return 0;
  const Real floor = Real(std::max(p, q)) * std::numeric_limits<Real>::epsilon() * s[0];
  Eigen::Index r = 0;
  while (r < s.size() && s[r] > floor) ++r;
  return r;
}

template <typename RealVector>
Eigen::Index select_rank(const RealVector& s, Eigen::Index numerical, const RankPolicy& policy) {
  using Real = typename RealVector::Scalar;
  switch (policy.mode) {
    case RankPolicy::Mode::fixed:
      return std::min<Eigen::Index>(static_cast<Eigen::Index>(policy.value), numerical);
    case RankPolicy::Mode::relative_threshold: {
      Eigen::Index r = 0;
      while (r < numerical && s[r] >= Real(policy.value) * s[0]) ++r;
      return r;
    }
    case RankPolicy::Mode::energy: {
      const Real total = s.squaredNorm();
      Real acc(0);
      Eigen::Index r = 0;
      while (r < numerical) {
        acc += s[r] * s[r];
        ++r;
        if (acc >= Real(policy.value) * total) break;
      }
      return r;
    }
  }
  return numerical;
}

}  // namespace detail

/// Truncated SVD of M under `policy`.
///
/// Strongly rectangular inputs are first reduced by a Householder QR of the
/// long side so the SVD itself runs on a square matrix of the smaller
/// dimension. Each left singular vector is signed so its largest-magnitude
/// entry is non-negative, which makes the factors reproducible.
template <typename Derived>
SvdFactor<typename Derived::Scalar> truncated_svd(const Eigen::MatrixBase<Derived>& M,
                                                   const RankPolicy& policy = {}) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  policy.validate();
  const Eigen::Index p = M.rows(), q = M.cols();
  if (p < 1 || q < 1) throw DataError("truncated_svd: empty matrix");
  if (!M.allFinite()) throw DataError("truncated_svd: non-finite entries");

  SvdFactor<Scalar> f;
  Matrix Ufull, Vfull;
  constexpr int opts = Eigen::ComputeThinU | Eigen::ComputeThinV;
  if (q > 2 * p) {
    // M^T = Q R, R is p x p; M = R^T Q^T.
    Eigen::HouseholderQR<Matrix> qr(M.adjoint());
    const Matrix R = qr.matrixQR().topRows(p).template triangularView<Eigen::Upper>();
    Eigen::BDCSVD<Matrix> svd(R.adjoint(), opts);
    f.all_S = svd.singularValues();
    Ufull = svd.matrixU();
    Vfull = Matrix::Zero(q, p);
    Vfull.topRows(p) = svd.matrixV();
    Vfull.applyOnTheLeft(qr.householderQ());
  } else if (p > 2 * q) {
    // M = Q R, R is q x q.
    Eigen::HouseholderQR<Matrix> qr(M);
    const Matrix R = qr.matrixQR().topRows(q).template triangularView<Eigen::Upper>();
    Eigen::BDCSVD<Matrix> svd(R, opts);
    f.all_S = svd.singularValues();
    Vfull = svd.matrixV();
    Ufull = Matrix::Zero(p, q);
    Ufull.topRows(q) = svd.matrixU();
    Ufull.applyOnTheLeft(qr.householderQ());
  } else {
    Eigen::BDCSVD<Matrix> svd(M, opts);
    f.all_S = svd.singularValues();
    Ufull = svd.matrixU();
    Vfull = svd.matrixV();
  }

  const Eigen::Index numerical = detail::numerical_rank(f.all_S, p, q);
  if (numerical == 0) throw DataError("truncated_svd: matrix has no retainable rank");
  const Eigen::Index r = std::max<Eigen::Index>(1, detail::select_rank(f.all_S, numerical, policy));

  f.U = Ufull.leftCols(r);
  f.V = Vfull.leftCols(r);
  f.S = f.all_S.head(r);
  for (Eigen::Index k = 0; k < r; ++k) {
    Eigen::Index at = 0;
    f.U.col(k).cwiseAbs().maxCoeff(&at);
    if (std::real(f.U(at, k)) < 0) {
      f.U.col(k) = -f.U.col(k);
      f.V.col(k) = -f.V.col(k);
    }
  }
  return f;
}

/// M2 * pinv(M) through the rank-r factorization of M: M2 V diag(1/S) U^T.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> pinv_apply(
    const SvdFactor<Scalar>& f, const Eigen::MatrixBase<Derived>& M2) {
  if (M2.cols() != f.V.rows())
    throw DataError("pinv_apply: right operand has " + std::to_string(M2.cols()) +
                    " columns, factor expects " + std::to_string(f.V.rows()));
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> tmp = M2 * f.V;
  tmp = tmp * f.S.cwiseInverse().asDiagonal();
  return tmp * f.U.adjoint();
}

}  // namespace voltdmd
