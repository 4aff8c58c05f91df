#pragma once

#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace voltdmd {

/// Checks applied when a record is constructed or loaded.
struct ValidationOptions {
  double v_min = 0.0;
  double v_max = 10.0;
  double dt_rel_tol = 1e-9;

  /// Plausibility window disabled; used for model forecasts.
  static ValidationOptions forecast() {
    return {-std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity(), 1e-9};
  }
};

/// Uniformly sampled (time, current, voltage) record. Current is
/// discharge-positive, in amperes; voltage in volts; time in seconds.
///
/// Records built through from_samples() or load_csv() hold at least two
/// samples. The tail returned by split() is the only way to obtain a shorter
/// record.
class TimeSeries {
 public:
  using Labels = std::map<std::string, std::string>;

  TimeSeries() = default;

  static TimeSeries from_samples(Eigen::VectorXd t, Eigen::VectorXd i,
                                 Eigen::VectorXd v, Labels meta = {},
                                 const ValidationOptions& opts = {});

  Eigen::Index size() const { return t_.size(); }
  bool empty() const { return t_.size() == 0; }
  double dt() const { return dt_; }

  const Eigen::VectorXd& time() const { return t_; }
  const Eigen::VectorXd& current() const { return i_; }
  const Eigen::VectorXd& voltage() const { return v_; }
  const Labels& meta() const { return meta_; }

  /// Contiguous sub-record [first, first + count); keeps absolute time.
  TimeSeries slice(Eigen::Index first, Eigen::Index count) const;

  /// Same samples with extra labels merged in.
  TimeSeries with_meta(Labels extra) const;

 private:
  Eigen::VectorXd t_, i_, v_;
  Labels meta_;
  double dt_ = 0.0;
};

/// Chronological train/evaluation split.
struct SplitSpec {
  double train_fraction = 0.6;

  void validate() const;
  /// Number of leading samples assigned to training for a record of length L.
  Eigen::Index train_length(Eigen::Index length) const;
};

/// Column names for CSV ingestion.
struct CsvSchema {
  std::string time = "time_s";
  std::string current = "current_a";
  std::string voltage = "voltage_v";
};

TimeSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema = {},
                    const ValidationOptions& opts = {});

/// Parses CSV text; `source` only labels error messages.
TimeSeries parse_csv(const std::string& text, const CsvSchema& schema = {},
                     const ValidationOptions& opts = {},
                     const std::string& source = "<memory>");

/// Header `time_s,current_a,voltage_v`, 9 significant digits, LF endings.
std::string format_csv(const TimeSeries& series);
void save_csv(const TimeSeries& series, const std::filesystem::path& path);

/// Returns (train, evaluation). The evaluation part may be empty.
std::pair<TimeSeries, TimeSeries> split(const TimeSeries& series, const SplitSpec& spec);

}  // namespace voltdmd
