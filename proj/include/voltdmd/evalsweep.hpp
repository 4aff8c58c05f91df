#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "voltdmd/dmd.hpp"
#include "voltdmd/dmdc.hpp"
#include "voltdmd/lowrank.hpp"
#include "voltdmd/timeseries.hpp"

namespace voltdmd {

enum class ModelKind { dmd, dmdc };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

/// Time window in seconds, relative to the first sample of the record.
struct Window {
  double begin_s = 0.0;
  double end_s = 0.0;
};

/// Forecast windows at 1-2.5 h, 5-6.5 h and 10-12.5 h.
std::vector<Window> default_windows();

struct SegmentRss {
  Window window;
  double rss = 0.0;
  Eigen::Index horizon = 0;  // samples inside the window; 0 if the record is shorter
};

/// Residual sum of squares. `nrss` is rss / sum((y - mean y)^2) and is
/// unset when the measured sequence is constant.
struct RssReport {
  double rss = 0.0;
  std::optional<double> nrss;
  Eigen::Index horizon = 0;
  std::vector<SegmentRss> per_segment;
};

RssReport rss(const Eigen::Ref<const Eigen::VectorXd>& measured,
              const Eigen::Ref<const Eigen::VectorXd>& predicted);

/// Scores forecast samples [from_index, end) of `series`, plus optional
/// windows. Samples before the forecast start are excluded.
RssReport score_forecast(const TimeSeries& series, const Forecast& fc, Eigen::Index from_index,
                         const std::vector<Window>& windows = {});

/// Fit and rollout settings shared by the sweeps.
struct EvalOptions {
  SplitSpec split;
  RankPolicy policy;                               // Omega (or X) truncation
  RankPolicy output_policy = default_output_policy();  // reduced DMDc only
  Eigen::Index tau = 1;
  std::optional<DmdcVariant> variant;              // unset: default_variant(m)
  unsigned threads = 1;
  /// Rows whose rss is within this band of the minimum count as ties.
  double tie_abs = 1e-12;
  double tie_rel = 1e-9;
};

/// Fits on the training split, forecasts the full record open-loop from a
/// warm start, and scores the held-out tail (the whole forecast when the
/// split leaves no tail).
RssReport evaluate_holdout(const TimeSeries& series, const EmbeddingSpec& spec, ModelKind kind,
                           const EvalOptions& opts);

struct SweepRow {
  Eigen::Index param = 0;
  double rss = 0.0;
  std::optional<double> nrss;
};

struct SweepSkip {
  Eigen::Index param = 0;
  std::string reason;
};

struct SweepResult {
  ModelKind kind = ModelKind::dmd;
  std::string param_name;        // "m" or "ell"
  std::vector<SweepRow> grid;    // successful points in grid order
  std::vector<SweepSkip> skipped;
  std::optional<Eigen::Index> best;
};

SweepResult sweep_output_embedding(const TimeSeries& series, const std::vector<Eigen::Index>& m_grid,
                                   Eigen::Index ell, ModelKind kind, const EvalOptions& opts);

SweepResult sweep_input_embedding(const TimeSeries& series, Eigen::Index m,
                                  const std::vector<Eigen::Index>& ell_grid,
                                  const EvalOptions& opts);

/// Smallest parameter whose rss ties the grid minimum.
std::optional<Eigen::Index> select_best(const std::vector<SweepRow>& rows, double tie_abs,
                                        double tie_rel);

}  // namespace voltdmd
