#include "voltdmd/embedding.hpp"

#include <string>

namespace voltdmd {

void EmbeddingSpec::validate(Eigen::Index length) const {
  if (m < 1) throw DataError("embedding dimension m must be >= 1");
  if (tau < 1) throw DataError("delay tau must be >= 1");
  if (ell < 1 || ell > m)
    throw DataError("input embedding ell=" + std::to_string(ell) + " must lie in [1, m=" +
                    std::to_string(m) + "]");
  if (length >= 0 && m * tau >= length)
    throw DataError("series too short: m*tau=" + std::to_string(m * tau) +
                    " needs more than " + std::to_string(length) + " samples");
}

SnapshotSet build_snapshots(const TimeSeries& series, const EmbeddingSpec& spec, bool with_input) {
  spec.validate(series.size());
  const Eigen::Index L = series.size();
  const Eigen::Index n = spec.columns(L);
  SnapshotSet snap;
  snap.spec = spec;
  snap.t0_index = 0;
  const auto& v = series.voltage();
  snap.X = build_hankel(v.head(L - 1), spec.m, spec.tau);
  snap.Xp = build_hankel(v.tail(L - 1), spec.m, spec.tau);
  if (with_input) snap.U = input_hankel(series.current(), spec.ell, spec.history(), n);
  return snap;
}

Eigen::VectorXd init_state(const TimeSeries& series, const EmbeddingSpec& spec,
                           Eigen::Index at_index) {
  spec.validate();
  if (at_index < spec.history())
    throw DataError("insufficient history: state ending at sample " + std::to_string(at_index) +
                    " needs " + std::to_string(spec.history()) + " earlier samples");
  if (at_index >= series.size())
    throw DataError("initial-state index " + std::to_string(at_index) + " beyond record end");
  Eigen::VectorXd x(spec.m);
  for (Eigen::Index i = 0; i < spec.m; ++i)
    x[i] = series.voltage()[at_index - (spec.m - 1 - i) * spec.tau];
  return x;
}

Eigen::VectorXd input_window(const Eigen::VectorXd& signal, Eigen::Index ell, Eigen::Index newest) {
  if (newest - ell + 1 < 0 || newest >= signal.size())
    throw DataError("input window ending at sample " + std::to_string(newest) +
                    " falls outside the record");
  return signal.segment(newest - ell + 1, ell);
}

Eigen::MatrixXd input_hankel(const Eigen::VectorXd& signal, Eigen::Index ell,
                             Eigen::Index first_newest, Eigen::Index count) {
  if (first_newest - ell + 1 < 0 || first_newest + count > signal.size())
    throw DataError("input snapshots exceed the record");
  return build_hankel(signal.segment(first_newest - ell + 1, count + ell - 1), ell, 1);
}

}  // namespace voltdmd
