#include "voltdmd/timeseries.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <vector>

#include "io_util.hpp"
#include "voltdmd/error.hpp"

namespace voltdmd {

namespace {

void check_sampling(const Eigen::VectorXd& t, double dt, double rel_tol) {
  for (Eigen::Index k = 0; k + 1 < t.size(); ++k) {
    const double step = t[k + 1] - t[k];
    // rows are reported 1-based, counting data rows only
    if (!(step > 0.0))
      throw DataError("non-monotone time at row " + std::to_string(k + 2));
    if (std::abs(step - dt) > rel_tol * dt)
      throw DataError("non-uniform sampling at row " + std::to_string(k + 2));
  }
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r'))
      f.remove_suffix(1);
  }
  return out;
}

}  // namespace

TimeSeries TimeSeries::from_samples(Eigen::VectorXd t, Eigen::VectorXd i, Eigen::VectorXd v,
                                    Labels meta, const ValidationOptions& opts) {
  if (t.size() != i.size() || t.size() != v.size())
    throw DataError("time, current and voltage lengths differ");
  if (t.size() < 2) throw DataError("a record needs at least 2 samples");
  if (!t.allFinite() || !i.allFinite() || !v.allFinite())
    throw DataError("record contains non-finite values");
  const double dt = t[1] - t[0];
  if (!(dt > 0.0)) throw DataError("non-monotone time at row 2");
  check_sampling(t, dt, opts.dt_rel_tol);
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (v[k] < opts.v_min || v[k] > opts.v_max)
      throw DataError("voltage " + std::to_string(v[k]) + " outside plausibility window at row " +
                      std::to_string(k + 1));
  }
  TimeSeries s;
  s.t_ = std::move(t);
  s.i_ = std::move(i);
  s.v_ = std::move(v);
  s.meta_ = std::move(meta);
  s.dt_ = dt;
  return s;
}

TimeSeries TimeSeries::slice(Eigen::Index first, Eigen::Index count) const {
  if (first < 0 || count < 0 || first + count > size())
    throw std::out_of_range("TimeSeries::slice out of range");
  TimeSeries s;
  s.t_ = t_.segment(first, count);
  s.i_ = i_.segment(first, count);
  s.v_ = v_.segment(first, count);
  s.meta_ = meta_;
  s.dt_ = dt_;
  return s;
}

TimeSeries TimeSeries::with_meta(Labels extra) const {
  TimeSeries s = *this;
  for (auto& [k, val] : extra) s.meta_[k] = std::move(val);
  return s;
}

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw DataError("train fraction must lie in (0, 1]");
}

Eigen::Index SplitSpec::train_length(Eigen::Index length) const {
  validate();
  return static_cast<Eigen::Index>(std::floor(train_fraction * static_cast<double>(length)));
}

std::pair<TimeSeries, TimeSeries> split(const TimeSeries& series, const SplitSpec& spec) {
  const Eigen::Index n_train = spec.train_length(series.size());
  if (n_train < 2)
    throw DataError("split leaves the training part with " + std::to_string(n_train) +
                    " samples (need 2)");
  return {series.slice(0, n_train), series.slice(n_train, series.size() - n_train)};
}

TimeSeries parse_csv(const std::string& text, const CsvSchema& schema,
                     const ValidationOptions& opts, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_fields(line);
  auto column = [&](const std::string& name) {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return c;
    throw DataError(source + ": missing column '" + name + "'");
  };
  const std::size_t ct = column(schema.time), ci = column(schema.current),
                    cv = column(schema.voltage);
  const std::size_t needed = std::max({ct, ci, cv}) + 1;

  std::vector<double> t, i, v;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const auto fields = split_fields(line);
    if (fields.size() < needed)
      throw DataError(source + ": too few fields at row " + std::to_string(row));
    auto number = [&](std::size_t c, const std::string& name) {
      double x = 0.0;
      const auto f = fields[c];
      const auto res = std::from_chars(f.data(), f.data() + f.size(), x);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size())
        throw DataError(source + ": unparseable value '" + std::string(f) + "' in column '" +
                        name + "' at row " + std::to_string(row));
      return x;
    };
    t.push_back(number(ct, schema.time));
    i.push_back(number(ci, schema.current));
    v.push_back(number(cv, schema.voltage));
  }
  auto to_vec = [](const std::vector<double>& x) {
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(x.data(), Eigen::Index(x.size())));
  };
  try {
    return TimeSeries::from_samples(to_vec(t), to_vec(i), to_vec(v), {{"source", source}}, opts);
  } catch (const DataError& e) {
    throw DataError(source + ": " + e.what());
  }
}

TimeSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema,
                    const ValidationOptions& opts) {
  return parse_csv(detail::read_file(path), schema, opts, path.string());
}

std::string format_csv(const TimeSeries& series) {
  if (series.size() < 2) throw DataError("cannot save a record with fewer than 2 samples");
  std::string out = "time_s,current_a,voltage_v\n";
  out.reserve(out.size() + static_cast<std::size_t>(series.size()) * 36);
  for (Eigen::Index k = 0; k < series.size(); ++k) {
    out += detail::format_g(series.time()[k], 9);
    out += ',';
    out += detail::format_g(series.current()[k], 9);
    out += ',';
    out += detail::format_g(series.voltage()[k], 9);
    out += '\n';
  }
  return out;
}

void save_csv(const TimeSeries& series, const std::filesystem::path& path) {
  detail::write_file_atomic(path, format_csv(series));
}

}  // namespace voltdmd
