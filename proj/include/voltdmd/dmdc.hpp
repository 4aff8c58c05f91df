#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "voltdmd/dmd.hpp"
#include "voltdmd/embedding.hpp"
#include "voltdmd/lowrank.hpp"
#include "voltdmd/timeseries.hpp"

namespace voltdmd {

enum class DmdcVariant { full, reduced };

/// Controlled operators x_{k+1} = A x_k + B u_k.
///
/// For the reduced variant A and B hold the projected operators (r_x x r_x
/// and r_x x ell) acting on z = basis^T x, and `basis` holds the output
/// projection basis (m x r_x, orthonormal columns).
struct DmdcModel {
  DmdcVariant variant = DmdcVariant::full;
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd basis;  // reduced only
  EmbeddingSpec spec;
  Eigen::Index rank_omega = 0;
  Eigen::Index rank_out = 0;  // reduced only
  double fit_residual = 0.0;
  std::vector<std::string> warnings;

  /// Full-space operator; basis * A * basis^T for the reduced variant.
  Eigen::MatrixXd full_A() const;
  Eigen::MatrixXd full_B() const;
};

/// Default output-basis policy for the reduced variant.
inline RankPolicy default_output_policy() { return RankPolicy::energy(0.9999); }

DmdcModel fit_dmdc_full(const SnapshotSet& snap, const RankPolicy& policy = {});

DmdcModel fit_dmdc_reduced(const SnapshotSet& snap, const RankPolicy& policy_omega = {},
                           const RankPolicy& policy_out = default_output_policy());

/// Full variant up to m = 512, reduced above.
DmdcVariant default_variant(Eigen::Index m);

/// `inputs` column k drives the step from state k to k + 1. Returns
/// [x0, x1, ..., x_steps] as columns.
Eigen::MatrixXd simulate_dmdc(const DmdcModel& model, const Eigen::VectorXd& x0,
                              const Eigen::MatrixXd& inputs, Eigen::Index steps);

/// Open-loop forecast over a record using its measured current as input.
Forecast forecast(const DmdcModel& model, const TimeSeries& series);

}  // namespace voltdmd
