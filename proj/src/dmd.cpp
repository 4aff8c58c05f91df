#include "voltdmd/dmd.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace voltdmd {

DmdModel fit_dmd(const SnapshotSet& snap, const RankPolicy& policy) {
  if (snap.has_input()) throw DataError("fit_dmd: snapshot set carries an input block");
  if (snap.n() < 1) throw DataError("fit_dmd: no snapshot columns");
  if (snap.Xp.rows() != snap.X.rows() || snap.Xp.cols() != snap.X.cols())
    throw DataError("fit_dmd: X and X' shapes differ");
  if (snap.X.rows() != snap.spec.m) throw DataError("fit_dmd: X rows do not match m");
  if (snap.X.isZero(0.0)) throw DataError("fit_dmd: degenerate (all-zero) snapshots");

  const auto f = truncated_svd(snap.X, policy);
  DmdModel model;
  model.A = pinv_apply(f, snap.Xp);
  model.spec = snap.spec;
  model.rank_used = f.rank();
  model.fit_residual = (snap.Xp - model.A * snap.X).norm();
  return model;
}

Spectrum spectrum(const Eigen::MatrixXd& A, Eigen::Index top_modes) {
  if (A.rows() != A.cols()) throw DataError("spectrum: operator is not square");
  const bool vectors = top_modes > 0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, vectors);
  if (es.info() != Eigen::Success) throw DataError("spectrum: eigensolver did not converge");
  const Eigen::VectorXcd lam = es.eigenvalues();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(lam.size()));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double ma = std::abs(lam[a]), mb = std::abs(lam[b]);
    if (ma != mb) return ma > mb;
    if (lam[a].real() != lam[b].real()) return lam[a].real() > lam[b].real();
    return lam[a].imag() > lam[b].imag();
  });
  Spectrum s;
  s.eigenvalues.resize(lam.size());
  for (Eigen::Index k = 0; k < lam.size(); ++k) s.eigenvalues[k] = lam[order[std::size_t(k)]];
  if (vectors) {
    const Eigen::Index k_max = std::min(top_modes, lam.size());
    const Eigen::MatrixXcd vecs = es.eigenvectors();
    s.dominant_modes.resize(A.rows(), k_max);
    for (Eigen::Index k = 0; k < k_max; ++k) s.dominant_modes.col(k) = vecs.col(order[std::size_t(k)]);
  }
  return s;
}

void check_state(const Eigen::VectorXd& x, Eigen::Index step) {
  if (!x.allFinite())
    throw DivergenceError(step, "rollout produced a non-finite state at step " + std::to_string(step));
  if (x.size() > 0 && x.cwiseAbs().maxCoeff() > kDivergenceBound)
    throw DivergenceError(step, "rollout diverged (|x| > 1e6) at step " + std::to_string(step));
}

Eigen::MatrixXd simulate_dmd(const DmdModel& model, const Eigen::VectorXd& x0, Eigen::Index steps) {
  if (steps < 0) throw DataError("simulate_dmd: negative step count");
  if (x0.size() != model.A.rows())
    throw DataError("simulate_dmd: initial state has length " + std::to_string(x0.size()) +
                    ", model expects " + std::to_string(model.A.rows()));
  Eigen::MatrixXd states(x0.size(), steps + 1);
  states.col(0) = x0;
  check_state(x0, 0);
  Eigen::VectorXd x = x0;
  for (Eigen::Index k = 1; k <= steps; ++k) {
    x = model.A * states.col(k - 1);
    check_state(x, k);
    states.col(k) = x;
  }
  return states;
}

Forecast forecast(const DmdModel& model, const TimeSeries& series) {
  const Eigen::Index s0 = model.spec.history();
  Eigen::VectorXd x = init_state(series, model.spec, s0);
  Forecast out;
  out.first_index = s0;
  out.voltage.resize(series.size() - s0);
  out.voltage[0] = read_voltage(x);
  Eigen::VectorXd next(x.size());
  for (Eigen::Index k = 1; k < out.voltage.size(); ++k) {
    next.noalias() = model.A * x;
    check_state(next, k);
    x.swap(next);
    out.voltage[k] = read_voltage(x);
  }
  return out;
}

}  // namespace voltdmd
