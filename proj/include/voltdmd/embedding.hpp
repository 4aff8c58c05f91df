#pragma once

#include <Eigen/Dense>

#include "voltdmd/error.hpp"
#include "voltdmd/timeseries.hpp"

namespace voltdmd {

/// Time-delay embedding dimensions.
///
/// `m` output delays (rows of X) spaced `tau` samples apart, and `ell`
/// consecutive input samples per input column. Consecutive snapshot columns
/// always advance by one sample.
struct EmbeddingSpec {
  Eigen::Index m = 1;
  Eigen::Index ell = 1;
  Eigen::Index tau = 1;

  /// Samples spanned by one state column minus one: (m - 1) * tau.
  Eigen::Index history() const { return (m - 1) * tau; }

  /// Snapshot columns available from a record of `length` samples.
  Eigen::Index columns(Eigen::Index length) const { return (length - 1) - history(); }

  /// Throws DataError unless 1 <= ell <= m, tau >= 1 and m * tau < length.
  /// Pass length < 0 to check the dimensions only.
  void validate(Eigen::Index length = -1) const;

  friend bool operator==(const EmbeddingSpec&, const EmbeddingSpec&) = default;
};

/// Hankel matrix with entry (i, j) = signal[j + i * tau].
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> build_hankel(
    const Eigen::DenseBase<Derived>& signal, Eigen::Index m, Eigen::Index tau = 1) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index length = signal.size();
  if (m < 1 || tau < 1 || (m - 1) * tau + 1 > length)
    throw DataError("embedding m=" + std::to_string(m) + ", tau=" + std::to_string(tau) +
                    " too large for a signal of length " + std::to_string(length));
  const Eigen::Index n = length - (m - 1) * tau;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> H(m, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i) H(i, j) = signal(j + i * tau);
  return H;
}

/// Snapshot pair (X, X') and optional input snapshots U.
///
/// Column j of X ends at sample t0_index + j + history(); the matching
/// column of U holds the `ell` inputs ending at that same sample, oldest
/// first. Sets can also be assembled by hand from direct state samples, in
/// which case `spec.m` must equal the state dimension.
struct SnapshotSet {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Xp;
  Eigen::MatrixXd U;  // empty for autonomous fits
  EmbeddingSpec spec;
  Eigen::Index t0_index = 0;

  Eigen::Index n() const { return X.cols(); }
  bool has_input() const { return U.size() > 0; }
};

SnapshotSet build_snapshots(const TimeSeries& series, const EmbeddingSpec& spec, bool with_input);

/// Hankel state whose newest entry is sample `at_index`.
Eigen::VectorXd init_state(const TimeSeries& series, const EmbeddingSpec& spec,
                           Eigen::Index at_index);

/// Newest (last) entry of a Hankel state.
template <typename Derived>
typename Derived::Scalar read_voltage(const Eigen::DenseBase<Derived>& state) {
  return state(state.size() - 1);
}

/// `ell` consecutive samples of `signal` ending at `newest`, oldest first.
Eigen::VectorXd input_window(const Eigen::VectorXd& signal, Eigen::Index ell, Eigen::Index newest);

/// Input snapshots for `count` consecutive states, the first ending at
/// sample `first_newest`: column k = input_window(signal, ell, first_newest + k).
Eigen::MatrixXd input_hankel(const Eigen::VectorXd& signal, Eigen::Index ell,
                             Eigen::Index first_newest, Eigen::Index count);

}  // namespace voltdmd
