#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "voltdmd/embedding.hpp"
#include "voltdmd/lowrank.hpp"
#include "voltdmd/timeseries.hpp"

namespace voltdmd {

/// Rollouts abort once any state entry exceeds this magnitude.
inline constexpr double kDivergenceBound = 1e6;

/// Autonomous best-fit operator x_{k+1} = A x_k.
struct DmdModel {
  Eigen::MatrixXd A;
  EmbeddingSpec spec;
  double fit_residual = 0.0;  // ||X' - A X||_F
  Eigen::Index rank_used = 0;
};

/// Eigenvalues of A by descending magnitude; conjugate pairs stay adjacent,
/// positive imaginary part first.
struct Spectrum {
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd dominant_modes;  // columns match the leading eigenvalues
};

DmdModel fit_dmd(const SnapshotSet& snap, const RankPolicy& policy = {});

Spectrum spectrum(const Eigen::MatrixXd& A, Eigen::Index top_modes = 0);
inline Spectrum spectrum(const DmdModel& model, Eigen::Index top_modes = 0) {
  return spectrum(model.A, top_modes);
}

/// States [x0, A x0, ..., A^steps x0] as columns.
Eigen::MatrixXd simulate_dmd(const DmdModel& model, const Eigen::VectorXd& x0, Eigen::Index steps);

/// Throws DivergenceError if `x` is non-finite or exceeds kDivergenceBound.
void check_state(const Eigen::VectorXd& x, Eigen::Index step);

/// Open-loop voltage forecast over a record.
///
/// voltage[k] predicts sample first_index + k; voltage[0] is the seed sample
/// itself (the newest entry of the warm-start state).
struct Forecast {
  Eigen::Index first_index = 0;
  Eigen::VectorXd voltage;
};

/// Seeds from the measured history ending at sample spec.history() and rolls
/// to the end of the record.
Forecast forecast(const DmdModel& model, const TimeSeries& series);

}  // namespace voltdmd
