#include "voltdmd/dmdc.hpp"

#include <string>

namespace voltdmd {

namespace {

void check_inputs(const SnapshotSet& snap) {
  if (!snap.has_input()) throw DataError("DMDc fit needs input snapshots U");
  if (snap.n() < 1) throw DataError("DMDc fit: no snapshot columns");
  if (snap.U.cols() != snap.X.cols())
    throw DataError("DMDc fit: X has " + std::to_string(snap.X.cols()) + " columns but U has " +
                    std::to_string(snap.U.cols()));
  if (snap.Xp.rows() != snap.X.rows() || snap.Xp.cols() != snap.X.cols())
    throw DataError("DMDc fit: X and X' shapes differ");
  if (snap.X.rows() != snap.spec.m) throw DataError("DMDc fit: X rows do not match m");
}

Eigen::MatrixXd stack(const SnapshotSet& snap) {
  Eigen::MatrixXd omega(snap.X.rows() + snap.U.rows(), snap.n());
  omega << snap.X, snap.U;
  if (omega.isZero(0.0)) throw DataError("DMDc fit: stacked data matrix is zero");
  return omega;
}

}  // namespace

Eigen::MatrixXd DmdcModel::full_A() const {
  if (variant == DmdcVariant::full) return A;
  return basis * A * basis.transpose();
}

Eigen::MatrixXd DmdcModel::full_B() const {
  if (variant == DmdcVariant::full) return B;
  return basis * B;
}

DmdcVariant default_variant(Eigen::Index m) {
  return m <= 512 ? DmdcVariant::full : DmdcVariant::reduced;
}

DmdcModel fit_dmdc_full(const SnapshotSet& snap, const RankPolicy& policy) {
  check_inputs(snap);
  const Eigen::Index m = snap.X.rows();
  const auto f = truncated_svd(stack(snap), policy);
  const Eigen::MatrixXd G = pinv_apply(f, snap.Xp);

  DmdcModel model;
  model.variant = DmdcVariant::full;
  model.A = G.leftCols(m);
  model.B = G.rightCols(snap.U.rows());
  model.spec = snap.spec;
  model.rank_omega = f.rank();
  model.fit_residual = (snap.Xp - model.A * snap.X - model.B * snap.U).norm();
  return model;
}

DmdcModel fit_dmdc_reduced(const SnapshotSet& snap, const RankPolicy& policy_omega,
                           const RankPolicy& policy_out) {
  check_inputs(snap);
  const Eigen::Index m = snap.X.rows();
  const Eigen::Index ell = snap.U.rows();
  const auto f = truncated_svd(stack(snap), policy_omega);
  const auto out = truncated_svd(snap.Xp, policy_out);

  DmdcModel model;
  model.variant = DmdcVariant::reduced;
  if (policy_out.mode == RankPolicy::Mode::fixed &&
      static_cast<Eigen::Index>(policy_out.value) > out.rank())
    model.warnings.push_back("output rank r_x=" +
                             std::to_string(static_cast<long long>(policy_out.value)) +
                             " exceeds rank(X')=" + std::to_string(out.rank()) + "; clipped");

  const Eigen::MatrixXd& basis = out.U;
  // basis^T X' V S^-1, shared by both reduced operators
  Eigen::MatrixXd core = basis.transpose() * snap.Xp;
  core = (core * f.V) * f.S.cwiseInverse().asDiagonal();
  const auto Ux = f.U.topRows(m);
  const auto Uu = f.U.bottomRows(ell);
  model.A = core * (Ux.transpose() * basis);
  model.B = core * Uu.transpose();
  model.basis = basis;
  model.spec = snap.spec;
  model.rank_omega = f.rank();
  model.rank_out = out.rank();
  const Eigen::MatrixXd Z = basis.transpose() * snap.X;
  model.fit_residual = (snap.Xp - basis * (model.A * Z + model.B * snap.U)).norm();
  return model;
}

Eigen::MatrixXd simulate_dmdc(const DmdcModel& model, const Eigen::VectorXd& x0,
                              const Eigen::MatrixXd& inputs, Eigen::Index steps) {
  const Eigen::Index m = model.spec.m;
  if (steps < 0) throw DataError("simulate_dmdc: negative step count");
  if (x0.size() != m)
    throw DataError("simulate_dmdc: initial state has length " + std::to_string(x0.size()) +
                    ", model expects " + std::to_string(m));
  if (inputs.rows() != model.B.cols() || inputs.cols() < steps)
    throw DataError("simulate_dmdc: input sequence must be " + std::to_string(model.B.cols()) +
                    " x >= " + std::to_string(steps));
  Eigen::MatrixXd states(m, steps + 1);
  states.col(0) = x0;
  check_state(x0, 0);
  if (model.variant == DmdcVariant::full) {
    for (Eigen::Index k = 0; k < steps; ++k) {
      states.col(k + 1).noalias() = model.A * states.col(k) + model.B * inputs.col(k);
      check_state(states.col(k + 1), k + 1);
    }
  } else {
    Eigen::VectorXd z = model.basis.transpose() * x0;
    for (Eigen::Index k = 0; k < steps; ++k) {
      z = model.A * z + model.B * inputs.col(k);
      states.col(k + 1).noalias() = model.basis * z;
      check_state(states.col(k + 1), k + 1);
    }
  }
  return states;
}

Forecast forecast(const DmdcModel& model, const TimeSeries& series) {
  const Eigen::Index s0 = model.spec.history();
  const Eigen::Index ell = model.B.cols();
  const Eigen::VectorXd x0 = init_state(series, model.spec, s0);
  const Eigen::VectorXd& current = series.current();
  Forecast out;
  out.first_index = s0;
  out.voltage.resize(series.size() - s0);
  out.voltage[0] = read_voltage(x0);

  const bool reduced = model.variant == DmdcVariant::reduced;
  // Reduced rollouts run in z-coordinates; only the newest row of the basis
  // is needed to decode voltage.
  Eigen::VectorXd x = reduced ? Eigen::VectorXd(model.basis.transpose() * x0) : x0;
  const Eigen::RowVectorXd decode = reduced ? Eigen::RowVectorXd(model.basis.bottomRows(1))
                                            : Eigen::RowVectorXd();
  Eigen::VectorXd next(x.size());
  for (Eigen::Index k = 1; k < out.voltage.size(); ++k) {
    const Eigen::Index newest = s0 + k - 1;
    next.noalias() = model.A * x;
    next.noalias() += model.B * current.segment(newest - ell + 1, ell);
    if (reduced) {
      // |x_i| <= ||z||_2 for orthonormal bases
      if (!next.allFinite() || next.norm() > kDivergenceBound)
        check_state(model.basis * next, k);
    } else {
      check_state(next, k);
    }
    x.swap(next);
    out.voltage[k] = reduced ? decode.dot(x) : read_voltage(x);
  }
  return out;
}

}  // namespace voltdmd
