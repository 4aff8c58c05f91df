#include "voltdmd/evalsweep.hpp"

#include <algorithm>
#include <future>
#include <limits>
#include <string>

namespace voltdmd {

std::string to_string(ModelKind kind) { return kind == ModelKind::dmd ? "dmd" : "dmdc"; }

ModelKind parse_model_kind(const std::string& text) {
  if (text == "dmd") return ModelKind::dmd;
  if (text == "dmdc") return ModelKind::dmdc;
  throw DataError("unknown model kind '" + text + "' (expected dmd or dmdc)");
}

std::vector<Window> default_windows() {
  return {{3600.0, 9000.0}, {18000.0, 23400.0}, {36000.0, 45000.0}};
}

RssReport rss(const Eigen::Ref<const Eigen::VectorXd>& measured,
              const Eigen::Ref<const Eigen::VectorXd>& predicted) {
  if (measured.size() != predicted.size())
    throw DataError("rss: measured has " + std::to_string(measured.size()) +
                    " samples, predicted has " + std::to_string(predicted.size()));
  if (measured.size() < 1) throw DataError("rss: empty sequences");
  RssReport r;
  r.horizon = measured.size();
  r.rss = (measured - predicted).squaredNorm();
  const double spread = (measured.array() - measured.mean()).square().sum();
  if (spread > 0.0) r.nrss = r.rss / spread;
  return r;
}

RssReport score_forecast(const TimeSeries& series, const Forecast& fc, Eigen::Index from_index,
                         const std::vector<Window>& windows) {
  const Eigen::Index end = fc.first_index + fc.voltage.size();
  if (end != series.size()) throw DataError("forecast does not cover the record");
  const Eigen::Index from = std::max(from_index, fc.first_index);
  if (from >= end) throw DataError("nothing to score: forecast ends before the scored range");
  const Eigen::Index count = end - from;
  RssReport r = rss(series.voltage().segment(from, count),
                    fc.voltage.segment(from - fc.first_index, count));
  const double t0 = series.time()[0];
  for (const auto& w : windows) {
    SegmentRss seg;
    seg.window = w;
    for (Eigen::Index k = fc.first_index + 1; k < end; ++k) {
      const double rel = series.time()[k] - t0;
      if (rel < w.begin_s || rel > w.end_s) continue;
      const double e = series.voltage()[k] - fc.voltage[k - fc.first_index];
      seg.rss += e * e;
      ++seg.horizon;
    }
    r.per_segment.push_back(seg);
  }
  return r;
}

RssReport evaluate_holdout(const TimeSeries& series, const EmbeddingSpec& spec, ModelKind kind,
                           const EvalOptions& opts) {
  const auto [train, holdout] = split(series, opts.split);
  const SnapshotSet snap = build_snapshots(train, spec, kind == ModelKind::dmdc);
  Forecast fc;
  if (kind == ModelKind::dmd) {
    fc = forecast(fit_dmd(snap, opts.policy), series);
  } else {
    const DmdcVariant variant = opts.variant.value_or(default_variant(spec.m));
    fc = forecast(variant == DmdcVariant::full
                      ? fit_dmdc_full(snap, opts.policy)
                      : fit_dmdc_reduced(snap, opts.policy, opts.output_policy),
                  series);
  }
  const Eigen::Index from = holdout.empty() ? fc.first_index + 1 : train.size();
  return score_forecast(series, fc, from);
}

std::optional<Eigen::Index> select_best(const std::vector<SweepRow>& rows, double tie_abs,
                                        double tie_rel) {
  if (rows.empty()) return std::nullopt;
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) lo = std::min(lo, r.rss);
  const double band = lo + tie_abs + tie_rel * lo;
  std::optional<Eigen::Index> best;
  for (const auto& r : rows)
    if (r.rss <= band && (!best || r.param < *best)) best = r.param;
  return best;
}

namespace {

struct PointOutcome {
  std::optional<SweepRow> row;
  std::string failure;
};

template <typename Eval>
SweepResult run_grid(ModelKind kind, std::string param_name, const std::vector<Eigen::Index>& grid,
                     const EvalOptions& opts, Eval eval) {
  if (grid.empty()) throw DataError("sweep grid is empty");
  std::vector<PointOutcome> outcomes(grid.size());
  auto point = [&](std::size_t idx) {
    PointOutcome o;
    try {
      const RssReport r = eval(grid[idx]);
      o.row = SweepRow{grid[idx], r.rss, r.nrss};
    } catch (const std::exception& e) {
      o.failure = e.what();
    }
    return o;
  };
  const std::size_t threads = std::max(1u, opts.threads);
  if (threads == 1) {
    for (std::size_t k = 0; k < grid.size(); ++k) outcomes[k] = point(k);
  } else {
    for (std::size_t start = 0; start < grid.size(); start += threads) {
      std::vector<std::future<PointOutcome>> batch;
      for (std::size_t k = start; k < std::min(grid.size(), start + threads); ++k)
        batch.push_back(std::async(std::launch::async, point, k));
      for (std::size_t k = 0; k < batch.size(); ++k) outcomes[start + k] = batch[k].get();
    }
  }
  SweepResult res;
  res.kind = kind;
  res.param_name = std::move(param_name);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (outcomes[k].row)
      res.grid.push_back(*outcomes[k].row);
    else
      res.skipped.push_back({grid[k], outcomes[k].failure});
  }
  res.best = select_best(res.grid, opts.tie_abs, opts.tie_rel);
  return res;
}

}  // namespace

SweepResult sweep_output_embedding(const TimeSeries& series, const std::vector<Eigen::Index>& m_grid,
                                   Eigen::Index ell, ModelKind kind, const EvalOptions& opts) {
  return run_grid(kind, "m", m_grid, opts, [&](Eigen::Index m) {
    const EmbeddingSpec spec{m, kind == ModelKind::dmdc ? ell : 1, opts.tau};
    return evaluate_holdout(series, spec, kind, opts);
  });
}

SweepResult sweep_input_embedding(const TimeSeries& series, Eigen::Index m,
                                  const std::vector<Eigen::Index>& ell_grid,
                                  const EvalOptions& opts) {
  return run_grid(ModelKind::dmdc, "ell", ell_grid, opts, [&](Eigen::Index ell) {
    return evaluate_holdout(series, EmbeddingSpec{m, ell, opts.tau}, ModelKind::dmdc, opts);
  });
}

}  // namespace voltdmd
