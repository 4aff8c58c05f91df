#include "voltdmd/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <charconv>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <utility>

#include "io_util.hpp"
#include "voltdmd/dmd.hpp"
#include "voltdmd/dmdc.hpp"
#include "voltdmd/embedding.hpp"
#include "voltdmd/error.hpp"
#include "voltdmd/evalsweep.hpp"
#include "voltdmd/hppc.hpp"
#include "voltdmd/model_io.hpp"
#include "voltdmd/timeseries.hpp"
#include "voltdmd/transfer.hpp"

namespace voltdmd {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kReportSchema = 1;

enum class Kind { integer, real, text, list };

struct OptionDef {
  const char* name;
  Kind kind;
  const char* help;
};

const std::vector<OptionDef> kShared = {
    {"config", Kind::text, "JSON config file; flags override its values"},
    {"out", Kind::text, "output directory"},
    {"seed", Kind::integer, "random seed"},
    {"kind", Kind::text, "model kind: dmd or dmdc"},
    {"m", Kind::integer, "output embedding dimension"},
    {"ell", Kind::integer, "input embedding dimension"},
    {"tau", Kind::integer, "delay stride in samples"},
    {"train-fraction", Kind::real, "leading fraction of samples used for fitting"},
    {"rank-policy", Kind::text, "truncation for X or Omega: fixed:<r>, rel:<eps>, energy:<eta>"},
};

const std::map<std::string, std::vector<OptionDef>> kCommandOptions = {
    {"synth",
     {{"cycles", Kind::text, "comma list of aged cycle counts"},
      {"repetitions", Kind::integer, "pulse blocks per HPPC record"},
      {"dt", Kind::real, "sample interval in seconds"},
      {"noise", Kind::real, "voltage noise sigma in volts"},
      {"initial-soc", Kind::real, "state of charge before the charge phase"}}},
    {"fit",
     {{"input", Kind::text, "record CSV"},
      {"output-rank-policy", Kind::text, "reduced DMDc output basis truncation"},
      {"variant", Kind::text, "DMDc pipeline: auto, full or reduced"},
      {"poles", Kind::integer, "number of leading poles to report"}}},
    {"simulate",
     {{"model", Kind::text, "model JSON"}, {"input", Kind::text, "record CSV"}}},
    {"sweep",
     {{"input", Kind::text, "record CSV"},
      {"m-grid", Kind::text, "m values: a:b:step or comma list"},
      {"ell-grid", Kind::text, "ell values: a:b:step or comma list"},
      {"output-rank-policy", Kind::text, "reduced DMDc output basis truncation"},
      {"variant", Kind::text, "DMDc pipeline: auto, full or reduced"},
      {"threads", Kind::integer, "concurrent grid points"}}},
    {"transfer",
     {{"model", Kind::list, "model JSON (repeatable)"},
      {"aged", Kind::list, "aged record CSV as cycle=path or path (repeatable)"}}},
};

json defaults_for(const std::string& cmd) {
  json d = {{"out", "."},
            {"seed", 0},
            {"tau", 1},
            {"train-fraction", 0.6},
            {"rank-policy", RankPolicy{}.to_string()}};
  if (cmd == "synth") {
    d["repetitions"] = 10;
    d["dt"] = 1.0;
    d["noise"] = 0.0;
    d["initial-soc"] = 0.9;
    d["cycles"] = "";
  } else if (cmd == "fit") {
    d["output-rank-policy"] = default_output_policy().to_string();
    d["variant"] = "auto";
    d["poles"] = 0;
  } else if (cmd == "sweep") {
    d["output-rank-policy"] = default_output_policy().to_string();
    d["variant"] = "auto";
    d["threads"] = 1;
    d["ell"] = 1;
  }
  return d;
}

// ---- typed access to the effective configuration ----

long long parse_integer(const std::string& key, const std::string& s) {
  long long x = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw UsageError("--" + key + " expects an integer, got '" + s + "'");
  return x;
}

double parse_real(const std::string& key, const std::string& s) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw UsageError("--" + key + " expects a number, got '" + s + "'");
  return x;
}

class Config {
 public:
  explicit Config(json j) : j_(std::move(j)) {}

  bool has(const std::string& key) const { return j_.contains(key) && !j_[key].is_null(); }

  void require(const std::string& key, const std::string& why = "") const {
    if (!has(key)) throw UsageError("missing --" + key + (why.empty() ? "" : " (" + why + ")"));
  }

  long long integer(const std::string& key) const {
    require(key);
    const auto& v = j_[key];
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_string()) return parse_integer(key, v.get<std::string>());
    throw UsageError("config key '" + key + "' must be an integer");
  }

  double real(const std::string& key) const {
    require(key);
    const auto& v = j_[key];
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return parse_real(key, v.get<std::string>());
    throw UsageError("config key '" + key + "' must be a number");
  }

  std::string text(const std::string& key) const {
    require(key);
    const auto& v = j_[key];
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
      std::string joined;
      for (const auto& e : v) {
        if (!joined.empty()) joined += ',';
        joined += e.is_string() ? e.get<std::string>() : e.dump();
      }
      return joined;
    }
    if (v.is_number()) return v.dump();
    throw UsageError("config key '" + key + "' must be a string");
  }

  std::vector<std::string> list(const std::string& key) const {
    require(key);
    const auto& v = j_[key];
    std::vector<std::string> out;
    if (v.is_array()) {
      for (const auto& e : v) out.push_back(e.is_string() ? e.get<std::string>() : e.dump());
    } else {
      out.push_back(text(key));
    }
    return out;
  }

  /// Everything except output locations; hashed into model provenance.
  std::string digest() const {
    json copy = j_;
    copy.erase("out");
    copy.erase("config");
    return detail::sha256_hex(copy.dump());
  }

 private:
  json j_;
};

EmbeddingSpec embedding_from(const Config& cfg, bool need_ell) {
  EmbeddingSpec spec;
  spec.m = cfg.integer("m");
  spec.tau = cfg.integer("tau");
  if (need_ell) {
    cfg.require("ell", "required for dmdc");
    spec.ell = cfg.integer("ell");
  }
  try {
    spec.validate();
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  return spec;
}

RankPolicy policy_from(const Config& cfg, const std::string& key) {
  try {
    return RankPolicy::parse(cfg.text(key));
  } catch (const DataError& e) {
    throw UsageError("--" + key + ": " + e.what());
  }
}

ModelKind kind_from(const Config& cfg) {
  cfg.require("kind");
  try {
    return parse_model_kind(cfg.text("kind"));
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
}

SplitSpec split_from(const Config& cfg) {
  SplitSpec s{cfg.real("train-fraction")};
  try {
    s.validate();
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  return s;
}

std::optional<DmdcVariant> variant_from(const Config& cfg) {
  const auto v = cfg.text("variant");
  if (v == "auto") return std::nullopt;
  if (v == "full") return DmdcVariant::full;
  if (v == "reduced") return DmdcVariant::reduced;
  throw UsageError("--variant must be auto, full or reduced");
}

// ---- report helpers ----

json nullable(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

json report_json(const RssReport& r) {
  json j = {{"rss", r.rss}, {"nrss", nullable(r.nrss)}, {"horizon", r.horizon}};
  if (!r.per_segment.empty()) {
    json segs = json::array();
    for (const auto& s : r.per_segment)
      segs.push_back({{"begin_s", s.window.begin_s},
                      {"end_s", s.window.end_s},
                      {"rss", s.rss},
                      {"horizon", s.horizon}});
    j["segments"] = std::move(segs);
  }
  return j;
}

std::string csv_number(double x) { return detail::format_g(x, 10); }

std::string csv_number(const std::optional<double>& x) { return x ? csv_number(*x) : ""; }

/// Files are buffered and written only after all compute succeeded.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, std::string content) {
    files_.emplace_back(name, std::move(content));
  }

  void commit() const {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_))
      throw DataError("cannot create output directory " + dir_.string());
    for (const auto& [name, content] : files_) detail::write_file_atomic(dir_ / name, content);
  }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::vector<long long> parse_int_list(const std::string& key, const std::string& text) {
  std::vector<long long> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find(',', start);
    auto item = text.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (!item.empty()) out.push_back(parse_integer(key, item));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

// ---- commands ----

int cmd_synth(const Config& cfg, std::ostream& out) {
  const auto reps = cfg.integer("repetitions");
  const double dt = cfg.real("dt");
  const double noise = cfg.real("noise");
  const double soc0 = cfg.real("initial-soc");
  const auto seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  if (reps < 1) throw UsageError("--repetitions must be >= 1");
  if (!(dt > 0.0)) throw UsageError("--dt must be positive");
  if (!(noise >= 0.0)) throw UsageError("--noise must be >= 0");
  if (!(soc0 >= 0.0 && soc0 <= 1.0)) throw UsageError("--initial-soc must lie in [0, 1]");
  std::vector<long long> cycles{0};
  for (long long c : parse_int_list("cycles", cfg.text("cycles"))) {
    if (c < 0) throw UsageError("--cycles entries must be >= 0");
    if (std::find(cycles.begin(), cycles.end(), c) == cycles.end()) cycles.push_back(c);
  }

  const CellSpec cell;
  const ProtocolScript script = hppc_protocol(cell, static_cast<int>(reps));
  Outputs files(cfg.text("out"));
  json manifest = {{"schema_version", kReportSchema},
                   {"seed", seed},
                   {"dt", dt},
                   {"repetitions", reps},
                   {"noise_sigma", noise},
                   {"initial_soc", soc0},
                   {"protocol", "protocol.json"},
                   {"files", json::array()}};
  for (std::size_t k = 0; k < cycles.size(); ++k) {
    AgingSpec aging;
    aging.cycles = static_cast<int>(cycles[k]);
    SimulationOptions sim{dt, soc0, noise, seed + k};
    const TimeSeries series = simulate_cell(cell, aging, script, sim);
    const std::string name = cycles[k] == 0 ? "healthy.csv" : "cycle_" + std::to_string(cycles[k]) + ".csv";
    std::string csv = format_csv(series);
    manifest["files"].push_back({{"path", name},
                                 {"cycle", cycles[k]},
                                 {"samples", series.size()},
                                 {"sha256", detail::sha256_hex(csv)},
                                 {"cell", cell_to_json(age_cell(cell, aging))}});
    files.add(name, std::move(csv));
  }
  AgingSpec rates;
  manifest["aging_rates"] = {{"capacity_fade_per_cycle", rates.capacity_fade_per_cycle},
                             {"resistance_growth_per_cycle", rates.resistance_growth_per_cycle}};
  files.add("protocol.json", dump(protocol_to_json(script)));
  files.add("manifest.json", dump(manifest));
  files.commit();
  out << dump(manifest);
  return 0;
}

/// Full-record open-loop report, or the divergence step.
template <typename Model>
json open_loop_json(const Model& model, const TimeSeries& series, Eigen::Index train_len,
                    std::optional<RssReport>* holdout = nullptr) {
  try {
    const Forecast fc = forecast(model, series);
    json j = report_json(score_forecast(series, fc, fc.first_index + 1, default_windows()));
    if (holdout && train_len < series.size())
      *holdout = score_forecast(series, fc, std::max(train_len, fc.first_index + 1));
    return j;
  } catch (const DivergenceError& e) {
    return {{"diverged_at_step", e.step()}, {"message", e.what()}};
  }
}

int cmd_fit(const Config& cfg, std::ostream& out, std::ostream& err) {
  const ModelKind kind = kind_from(cfg);
  const EmbeddingSpec spec = embedding_from(cfg, kind == ModelKind::dmdc);
  const SplitSpec split_spec = split_from(cfg);
  const RankPolicy policy = policy_from(cfg, "rank-policy");
  const RankPolicy out_policy = policy_from(cfg, "output-rank-policy");
  const auto variant_choice = variant_from(cfg);
  const auto poles = cfg.integer("poles");
  cfg.require("input");
  const fs::path input = cfg.text("input");

  const std::string raw = detail::read_file(input);
  const TimeSeries series = parse_csv(raw, {}, {}, input.filename().string());
  const auto [train, holdout_part] = split(series, split_spec);
  const auto started = std::chrono::steady_clock::now();
  const SnapshotSet snap = build_snapshots(train, spec, kind == ModelKind::dmdc);

  ModelFile file;
  file.train_fraction = split_spec.train_fraction;
  file.policy = policy;
  file.output_policy = out_policy;
  file.input_sha256 = detail::sha256_hex(raw);
  file.config_sha256 = cfg.digest();

  json report = {{"schema_version", kReportSchema},
                 {"kind", to_string(kind)},
                 {"embedding", {{"m", spec.m}, {"ell", spec.ell}, {"tau", spec.tau}}},
                 {"train_samples", train.size()},
                 {"columns", snap.n()}};
  std::optional<RssReport> holdout;
  Eigen::MatrixXd A_full;
  double residual = 0.0;
  std::vector<std::string> warnings;
  if (kind == ModelKind::dmd) {
    DmdModel model = fit_dmd(snap, policy);
    residual = model.fit_residual;
    report["variant"] = "autonomous";
    report["ranks"] = {{"r", model.rank_used}};
    report["open_loop"] = open_loop_json(model, series, train.size(), &holdout);
    A_full = model.A;
    file.model = std::move(model);
  } else {
    const DmdcVariant variant = variant_choice.value_or(default_variant(spec.m));
    DmdcModel model = variant == DmdcVariant::full ? fit_dmdc_full(snap, policy)
                                                   : fit_dmdc_reduced(snap, policy, out_policy);
    residual = model.fit_residual;
    warnings = model.warnings;
    report["variant"] = variant == DmdcVariant::full ? "full" : "reduced";
    report["ranks"] = {{"r", model.rank_omega}, {"r_x", model.rank_out}};
    report["open_loop"] = open_loop_json(model, series, train.size(), &holdout);
    // reduced models report the poles of the projected operator
    A_full = model.A;
    file.model = std::move(model);
  }
  report["fit_residual"] = residual;
  const double xp_norm = snap.Xp.norm();
  report["relative_residual"] = xp_norm > 0.0 ? json(residual / xp_norm) : json(nullptr);
  report["holdout"] = holdout ? report_json(*holdout) : json(nullptr);
  report["warnings"] = warnings;
  if (poles > 0) {
    const Spectrum s = spectrum(A_full);
    json list = json::array();
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(poles, s.eigenvalues.size()); ++k)
      list.push_back({s.eigenvalues[k].real(), s.eigenvalues[k].imag()});
    report["poles"] = std::move(list);
  }
  const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started);
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  err << "fit: " << to_string(kind) << " m=" << spec.m << " in " << elapsed.count() << " ms\n";

  Outputs files(cfg.text("out"));
  files.add("model.json", dump_model(file));
  files.add("fit_report.json", dump(report));
  files.commit();
  out << dump(report);
  return 0;
}

struct LoadedModel {
  ModelFile file;
  std::string digest;
};

LoadedModel load_model_with_digest(const fs::path& path) {
  const std::string raw = detail::read_file(path);
  json j;
  try {
    j = json::parse(raw);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  LoadedModel m{model_from_json(j), j.value("digest", "")};
  return m;
}

template <typename Fn>
decltype(auto) with_model(const ModelFile& file, Fn&& fn) {
  return std::visit(std::forward<Fn>(fn), file.model);
}

int cmd_simulate(const Config& cfg, std::ostream& out) {
  cfg.require("model");
  cfg.require("input");
  const LoadedModel loaded = load_model_with_digest(cfg.text("model"));
  const EmbeddingSpec& spec = loaded.file.spec();
  for (const char* key : {"m", "ell", "tau"}) {
    if (!cfg.has(key)) continue;
    const long long want = cfg.integer(key);
    const long long have = key[0] == 'm' ? spec.m : key[0] == 'e' ? spec.ell : spec.tau;
    if (want != have)
      throw DataError(std::string("embedding mismatch: --") + key + "=" + std::to_string(want) +
                      " but the model has " + std::to_string(have));
  }
  const fs::path input = cfg.text("input");
  const TimeSeries series = load_csv(input);
  if (series.size() < spec.history() + 3)
    throw DataError("insufficient history: model with m=" + std::to_string(spec.m) + " needs at least " +
                    std::to_string(spec.history() + 3) + " samples, record has " +
                    std::to_string(series.size()));

  const Eigen::Index train_len = SplitSpec{loaded.file.train_fraction}.train_length(series.size());
  const Forecast fc = with_model(loaded.file, [&](const auto& m) { return forecast(m, series); });
  const RssReport full = score_forecast(series, fc, fc.first_index + 1, default_windows());
  json report = {{"schema_version", kReportSchema},
                 {"kind", to_string(loaded.file.kind())},
                 {"model_digest", loaded.digest},
                 {"first_forecast_index", fc.first_index},
                 {"full", report_json(full)}};
  report["holdout"] = train_len < series.size()
                          ? report_json(score_forecast(series, fc, std::max(train_len, fc.first_index + 1)))
                          : json(nullptr);
  const Eigen::Index count = fc.voltage.size();
  const TimeSeries predicted =
      TimeSeries::from_samples(series.time().tail(count), series.current().tail(count), fc.voltage,
                               {}, ValidationOptions::forecast());
  Outputs files(cfg.text("out"));
  files.add("forecast.csv", format_csv(predicted));
  files.add("rss_report.json", dump(report));
  files.commit();
  out << dump(report);
  return 0;
}

json sweep_json(const SweepResult& r, const json& fixed) {
  json rows = json::array(), skipped = json::array(), xs = json::array(), ys = json::array();
  for (const auto& row : r.grid) {
    rows.push_back({{"param", row.param}, {"rss", row.rss}, {"nrss", nullable(row.nrss)}});
    xs.push_back(row.param);
    ys.push_back(row.rss);
  }
  for (const auto& s : r.skipped) skipped.push_back({{"param", s.param}, {"reason", s.reason}});
  return {{"param", r.param_name},
          {"kind", to_string(r.kind)},
          {"fixed", fixed},
          {"rows", rows},
          {"skipped", skipped},
          {"best", r.best ? json(*r.best) : json(nullptr)},
          {"curve", {{"x", xs}, {"y", ys}, {"x_label", r.param_name}, {"y_label", "rss"}}}};
}

std::string sweep_csv(const SweepResult& r) {
  std::string s = "param,rss,nrss\n";
  for (const auto& row : r.grid)
    s += std::to_string(row.param) + "," + csv_number(row.rss) + "," + csv_number(row.nrss) + "\n";
  return s;
}

void require_nonempty(const SweepResult& r, std::ostream& err) {
  if (!r.grid.empty()) return;
  for (const auto& s : r.skipped) err << r.param_name << "=" << s.param << ": " << s.reason << "\n";
  throw DataError("every " + r.param_name + " grid point failed");
}

std::vector<Eigen::Index> grid_from(const Config& cfg, const std::string& key) {
  try {
    return parse_grid(cfg.text(key));
  } catch (const DataError& e) {
    throw UsageError("--" + key + ": " + e.what());
  }
}

int cmd_sweep(const Config& cfg, std::ostream& out, std::ostream& err) {
  const ModelKind kind = kind_from(cfg);
  cfg.require("input");
  const bool m_stage = cfg.has("m-grid");
  const bool ell_stage = cfg.has("ell-grid");
  if (!m_stage && !ell_stage) throw UsageError("sweep needs --m-grid and/or --ell-grid");
  if (ell_stage && kind != ModelKind::dmdc) throw UsageError("--ell-grid requires --kind dmdc");
  if (ell_stage && !m_stage) cfg.require("m", "the ell sweep needs a fixed m");

  EvalOptions opts;
  opts.split = split_from(cfg);
  opts.policy = policy_from(cfg, "rank-policy");
  opts.output_policy = policy_from(cfg, "output-rank-policy");
  opts.variant = variant_from(cfg);
  opts.tau = cfg.integer("tau");
  const auto threads = cfg.integer("threads");
  if (threads < 1) throw UsageError("--threads must be >= 1");
  opts.threads = static_cast<unsigned>(threads);
  if (opts.tau < 1) throw UsageError("--tau must be >= 1");
  const auto ell = cfg.integer("ell");
  if (ell < 1) throw UsageError("--ell must be >= 1");
  const auto m_grid = m_stage ? grid_from(cfg, "m-grid") : std::vector<Eigen::Index>{};
  const auto ell_grid = ell_stage ? grid_from(cfg, "ell-grid") : std::vector<Eigen::Index>{};

  const TimeSeries series = load_csv(cfg.text("input"));
  Outputs files(cfg.text("out"));
  json doc = {{"schema_version", kReportSchema}, {"kind", to_string(kind)}, {"stages", json::array()}};

  Eigen::Index m = cfg.has("m") ? cfg.integer("m") : 0;
  if (m_stage) {
    const SweepResult r = sweep_output_embedding(series, m_grid, ell, kind, opts);
    for (const auto& s : r.skipped) err << "warning: m=" << s.param << " skipped: " << s.reason << "\n";
    require_nonempty(r, err);
    doc["stages"].push_back(sweep_json(r, kind == ModelKind::dmdc ? json{{"ell", ell}} : json::object()));
    files.add("sweep_m.csv", sweep_csv(r));
    m = *r.best;
  }
  if (ell_stage) {
    const SweepResult r = sweep_input_embedding(series, m, ell_grid, opts);
    for (const auto& s : r.skipped) err << "warning: ell=" << s.param << " skipped: " << s.reason << "\n";
    require_nonempty(r, err);
    doc["stages"].push_back(sweep_json(r, {{"m", m}}));
    files.add("sweep_ell.csv", sweep_csv(r));
  }
  files.add("sweep.json", dump(doc));
  files.commit();
  out << dump(doc);
  return 0;
}

std::pair<long long, fs::path> parse_aged(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq != std::string::npos) return {parse_integer("aged", arg.substr(0, eq)), arg.substr(eq + 1)};
  const fs::path p = arg;
  const std::string stem = p.stem().string();
  if (stem == "healthy") return {0, p};
  std::size_t k = stem.size();
  while (k > 0 && std::isdigit(static_cast<unsigned char>(stem[k - 1]))) --k;
  if (k == stem.size())
    throw UsageError("cannot infer a cycle number from '" + arg + "'; use cycle=path");
  return {parse_integer("aged", stem.substr(k)), p};
}

int cmd_transfer(const Config& cfg, std::ostream& out) {
  const auto model_paths = cfg.list("model");
  const auto aged_args = cfg.list("aged");
  std::vector<std::pair<long long, fs::path>> aged;
  for (const auto& a : aged_args) aged.push_back(parse_aged(a));
  std::vector<LoadedModel> models;
  for (const auto& p : model_paths) models.push_back(load_model_with_digest(p));

  std::string table = "cycle,kind,rss,nrss\n";
  json rows = json::array();
  for (const auto& [cycle, path] : aged) {
    const TimeSeries series = load_csv(path);
    for (const auto& lm : models) {
      const std::string kind = to_string(lm.file.kind());
      json row = {{"cycle", cycle}, {"kind", kind}, {"file", path.filename().string()}};
      try {
        const TransferResult r =
            with_model(lm.file, [&](const auto& m) { return transfer(m, series, default_windows()); });
        row["report"] = report_json(r.report);
        table += std::to_string(cycle) + "," + kind + "," + csv_number(r.report.rss) + "," +
                 csv_number(r.report.nrss) + "\n";
      } catch (const DivergenceError& e) {
        row["diverged_at_step"] = e.step();
        table += std::to_string(cycle) + "," + kind + ",,\n";
      }
      rows.push_back(std::move(row));
    }
  }
  const json doc = {{"schema_version", kReportSchema}, {"rows", rows}};
  Outputs files(cfg.text("out"));
  files.add("transfer.csv", table);
  files.add("transfer.json", dump(doc));
  files.commit();
  out << table;
  return 0;
}

}  // namespace

std::vector<Eigen::Index> parse_grid(const std::string& text) {
  std::vector<Eigen::Index> out;
  auto num = [&](const std::string& s) {
    long long x = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw DataError("bad grid value '" + s + "'");
    return static_cast<Eigen::Index>(x);
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      const auto pos = text.find(':', start);
      parts.push_back(text.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (parts.size() < 2 || parts.size() > 3) throw DataError("grid range must be a:b or a:b:step");
    const Eigen::Index a = num(parts[0]), b = num(parts[1]);
    const Eigen::Index step = parts.size() == 3 ? num(parts[2]) : 1;
    if (step < 1 || b < a) throw DataError("grid range must be increasing with a positive step");
    for (Eigen::Index x = a; x <= b; x += step) out.push_back(x);
  } else {
    for (long long x : parse_int_list("grid", text)) out.push_back(static_cast<Eigen::Index>(x));
  }
  if (out.empty()) throw DataError("grid is empty");
  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hankel-embedded DMD / DMDc identification of battery voltage records", "voltdmd"};
  app.require_subcommand(1);
  std::map<std::string, std::map<std::string, std::string>> scalars;
  std::map<std::string, std::map<std::string, std::vector<std::string>>> lists;
  std::map<std::string, std::map<std::string, CLI::Option*>> handles;
  std::map<std::string, CLI::App*> subs;
  static const std::map<std::string, std::string> blurbs = {
      {"synth", "generate healthy and aged synthetic HPPC records"},
      {"fit", "fit a DMD or DMDc model on the training split of a record"},
      {"simulate", "open-loop forecast of a record with a saved model"},
      {"sweep", "RSS sweep over output (m) and/or input (ell) embedding dimension"},
      {"transfer", "apply saved models unchanged to aged records"}};
  for (const auto& [cmd, extra] : kCommandOptions) {
    CLI::App* sub = app.add_subcommand(cmd, blurbs.at(cmd));
    subs[cmd] = sub;
    auto add = [&](const OptionDef& def) {
      const std::string flag = std::string("--") + def.name;
      if (def.kind == Kind::list)
        handles[cmd][def.name] = sub->add_option(flag, lists[cmd][def.name], def.help);
      else
        handles[cmd][def.name] = sub->add_option(flag, scalars[cmd][def.name], def.help);
    };
    for (const auto& def : kShared) add(def);
    for (const auto& def : extra) add(def);
  }

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      throw UsageError(e.what());
    }

    std::string cmd;
    for (const auto& [name, sub] : subs)
      if (sub->parsed()) cmd = name;

    json effective = defaults_for(cmd);
    if (handles[cmd]["config"]->count() > 0) {
      const std::string path = scalars[cmd]["config"];
      json file_cfg;
      try {
        file_cfg = json::parse(detail::read_file(path));
      } catch (const json::exception& e) {
        throw UsageError("config " + path + ": " + e.what());
      } catch (const DataError& e) {
        throw UsageError(e.what());
      }
      if (!file_cfg.is_object()) throw UsageError("config file must hold a JSON object");
      std::set<std::string> known;
      for (const auto& def : kShared) known.insert(def.name);
      for (const auto& def : kCommandOptions.at(cmd)) known.insert(def.name);
      for (const auto& [key, value] : file_cfg.items()) {
        if (!known.count(key)) throw UsageError("unknown config key '" + key + "' for " + cmd);
        effective[key] = value;
      }
      effective["config"] = path;
    }
    for (const auto& [name, opt] : handles[cmd]) {
      if (opt->count() == 0 || name == "config") continue;
      if (lists[cmd].count(name))
        effective[name] = lists[cmd][name];
      else
        effective[name] = scalars[cmd][name];
    }
    const Config cfg(effective);

    if (cmd == "synth") return cmd_synth(cfg, out);
    if (cmd == "fit") return cmd_fit(cfg, out, err);
    if (cmd == "simulate") return cmd_simulate(cfg, out);
    if (cmd == "sweep") return cmd_sweep(cfg, out, err);
    if (cmd == "transfer") return cmd_transfer(cfg, out);
    throw UsageError("unknown command");
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace voltdmd
