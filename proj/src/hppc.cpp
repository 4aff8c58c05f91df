#include "voltdmd/hppc.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "voltdmd/error.hpp"

namespace voltdmd {

OcvCurve::OcvCurve(std::vector<std::pair<double, double>> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 2) throw DataError("OCV curve needs at least two knots");
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    if (!(knots_[k].first > knots_[k - 1].first))
      throw DataError("OCV knots must have strictly increasing soc");
    if (knots_[k].second < knots_[k - 1].second) throw DataError("OCV curve must be monotone");
  }
}

OcvCurve OcvCurve::default_curve() {
  return OcvCurve({{0.0, 2.5}, {0.1, 3.2}, {0.5, 3.7}, {0.9, 4.05}, {1.0, 4.2}});
}

double OcvCurve::operator()(double soc) const {
  if (soc <= knots_.front().first) return knots_.front().second;
  if (soc >= knots_.back().first) return knots_.back().second;
  const auto hi = std::upper_bound(knots_.begin(), knots_.end(), soc,
                                   [](double s, const auto& k) { return s < k.first; });
  const auto lo = hi - 1;
  const double w = (soc - lo->first) / (hi->first - lo->first);
  return lo->second + w * (hi->second - lo->second);
}

void CellSpec::validate() const {
  if (!(capacity_ah > 0.0)) throw DataError("cell capacity must be positive");
  for (double x : {r0, r1, c1, r2, c2})
    if (!(x > 0.0)) throw DataError("cell resistances and capacitances must be positive");
  if (!(v_min < v_max)) throw DataError("cell needs v_min < v_max");
  if (ocv(0.0) < v_min || ocv(1.0) > v_max)
    throw DataError("OCV curve leaves [v_min, v_max] on soc in [0, 1]");
}

void AgingSpec::validate() const {
  if (cycles < 0) throw DataError("cycle count must be >= 0");
  if (capacity_fade_per_cycle < 0.0 || resistance_growth_per_cycle < 0.0)
    throw DataError("aging rates must be >= 0");
  if (!(1.0 - capacity_fade_per_cycle * cycles > 0.0))
    throw DataError("aging drives capacity to zero at cycle " + std::to_string(cycles));
}

CellSpec age_cell(const CellSpec& spec, const AgingSpec& aging) {
  spec.validate();
  aging.validate();
  CellSpec out = spec;
  const double grow = 1.0 + aging.resistance_growth_per_cycle * aging.cycles;
  out.capacity_ah = spec.capacity_ah * (1.0 - aging.capacity_fade_per_cycle * aging.cycles);
  out.r0 = spec.r0 * grow;
  out.r1 = spec.r1 * grow;
  out.r2 = spec.r2 * grow;
  return out;
}

double ProtocolScript::duration() const {
  double total = 0.0;
  for (const auto& s : steps) total += s.seconds;
  return total;
}

void ProtocolScript::validate(const CellSpec& spec) const {
  for (const auto& s : steps) {
    if (!(s.seconds > 0.0)) throw DataError("protocol step durations must be positive");
    if ((s.mode == StepMode::cc_charge || s.mode == StepMode::cc_discharge) && s.magnitude < 0.0)
      throw DataError("CC magnitudes must be non-negative");
    if (s.mode == StepMode::cv_charge && (s.magnitude < spec.v_min || s.magnitude > spec.v_max))
      throw DataError("CV target outside the cell voltage range");
    if (s.cutoff && (*s.cutoff < spec.v_min || *s.cutoff > spec.v_max))
      throw DataError("cutoff voltage outside the cell voltage range");
  }
}

double hppc_block_seconds() { return 3600.0 + 10.0 + 180.0 + 20.0 + 120.0 + 1080.0 + 3600.0; }

ProtocolScript hppc_protocol(const CellSpec& spec, int repetitions, const ChargePhase& charge) {
  if (repetitions < 1) throw DataError("HPPC needs at least one repetition");
  ProtocolScript p;
  p.steps.push_back({StepMode::cc_charge, charge.cc_amps, charge.cc_max_seconds, spec.v_max});
  p.steps.push_back({StepMode::cv_charge, spec.v_max, charge.cv_seconds, std::nullopt});
  for (int b = 0; b < repetitions; ++b) {
    p.steps.push_back({StepMode::rest, 0.0, 3600.0, std::nullopt});
    p.steps.push_back({StepMode::cc_discharge, 10.0, 10.0, spec.v_min});
    p.steps.push_back({StepMode::rest, 0.0, 180.0, std::nullopt});
    p.steps.push_back({StepMode::cc_charge, 5.0, 20.0, std::nullopt});
    p.steps.push_back({StepMode::rest, 0.0, 120.0, std::nullopt});
    p.steps.push_back({StepMode::cc_discharge, 10.0, 1080.0, b == 0 ? 3.95 : spec.v_min});
    p.steps.push_back({StepMode::rest, 0.0, 3600.0, std::nullopt});
  }
  p.validate(spec);
  return p;
}

namespace {

/// Integrated state: RC voltages and state of charge.
struct CellState {
  double v1 = 0.0;
  double v2 = 0.0;
  double soc = 1.0;
};

struct Cell {
  CellSpec p;

  double terminal(const CellState& x, double amps) const {
    return p.ocv(x.soc) - amps * p.r0 - x.v1 - x.v2;
  }

  /// Current that holds the terminal voltage at `volts`.
  double cv_current(const CellState& x, double volts) const {
    return (p.ocv(x.soc) - x.v1 - x.v2 - volts) / p.r0;
  }

  CellState derivative(const CellState& x, double amps) const {
    return {-x.v1 / (p.r1 * p.c1) + amps / p.c1, -x.v2 / (p.r2 * p.c2) + amps / p.c2,
            -amps / (3600.0 * p.capacity_ah)};
  }
};

CellState axpy(const CellState& x, double h, const CellState& d) {
  return {x.v1 + h * d.v1, x.v2 + h * d.v2, x.soc + h * d.soc};
}

}  // namespace

CellTrace simulate_cell_trace(const CellSpec& spec, const AgingSpec& aging,
                              const ProtocolScript& script, const SimulationOptions& opts) {
  if (!(opts.dt > 0.0)) throw DataError("simulation step dt must be positive");
  if (!(opts.noise_sigma >= 0.0)) throw DataError("noise sigma must be >= 0");
  const Cell cell{age_cell(spec, aging)};
  script.validate(cell.p);

  std::vector<double> is, vs, socs;
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> noise(0.0, opts.noise_sigma > 0.0 ? opts.noise_sigma : 1.0);
  const double h = opts.dt;
  const double lo = cell.p.v_min - 0.1, hi = cell.p.v_max + 0.1;
  // CV steps couple the RC states through 1/r0; split long samples so RK4
  // stays inside its real-axis stability interval
  const double stiff = 1.0 / (cell.p.r1 * cell.p.c1) + 1.0 / (cell.p.r2 * cell.p.c2) +
                       1.0 / (cell.p.r0 * cell.p.c1) + 1.0 / (cell.p.r0 * cell.p.c2);
  const int substeps = std::max(1, static_cast<int>(std::ceil(h * stiff / 2.0)));
  const double hs = h / substeps;

  CellState x{0.0, 0.0, opts.initial_soc};
  for (const auto& step : script.steps) {
    const long long samples = std::llround(step.seconds / h);
    if (samples < 1) throw DataError("protocol step shorter than the sample interval");
    // current as a function of state for this step
    auto amps_at = [&](const CellState& s) {
      switch (step.mode) {
        case StepMode::cc_charge: return -step.magnitude;
        case StepMode::cc_discharge: return step.magnitude;
        case StepMode::rest: return 0.0;
        case StepMode::cv_charge: return cell.cv_current(s, step.magnitude);
      }
      return 0.0;
    };
    for (long long k = 0; k < samples; ++k) {
      const double amps = amps_at(x);
      if (!std::isfinite(amps)) throw DataError("CV current solve failed");
      const double v = cell.terminal(x, amps);
      if (step.cutoff) {
        if (step.mode == StepMode::cc_discharge && v <= *step.cutoff) break;
        if (step.mode == StepMode::cc_charge && v >= *step.cutoff) break;
      }
      if (v < lo || v > hi)
        throw DataError("terminal voltage " + std::to_string(v) + " V left the safe range at t=" +
                        std::to_string(static_cast<double>(vs.size()) * h) + " s");
      is.push_back(amps);
      vs.push_back(v);
      socs.push_back(x.soc);

      for (int j = 0; j < substeps; ++j) {
        const CellState k1 = cell.derivative(x, amps_at(x));
        const CellState x2 = axpy(x, 0.5 * hs, k1);
        const CellState k2 = cell.derivative(x2, amps_at(x2));
        const CellState x3 = axpy(x, 0.5 * hs, k2);
        const CellState k3 = cell.derivative(x3, amps_at(x3));
        const CellState x4 = axpy(x, hs, k3);
        const CellState k4 = cell.derivative(x4, amps_at(x4));
        x = {x.v1 + hs / 6.0 * (k1.v1 + 2 * k2.v1 + 2 * k3.v1 + k4.v1),
             x.v2 + hs / 6.0 * (k1.v2 + 2 * k2.v2 + 2 * k3.v2 + k4.v2),
             x.soc + hs / 6.0 * (k1.soc + 2 * k2.soc + 2 * k3.soc + k4.soc)};
      }
    }
  }
  socs.push_back(x.soc);

  const auto n = static_cast<Eigen::Index>(vs.size());
  if (n < 2) throw DataError("protocol produced fewer than two samples");
  Eigen::VectorXd t(n), i(n), v(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    t[k] = static_cast<double>(k) * h;
    i[k] = is[std::size_t(k)];
    v[k] = vs[std::size_t(k)];
    if (opts.noise_sigma > 0.0) v[k] += noise(rng);
  }
  CellTrace trace;
  trace.series = TimeSeries::from_samples(
      std::move(t), std::move(i), std::move(v),
      {{"cycle", std::to_string(aging.cycles)}, {"source", "hppc-synth"}});
  trace.soc = Eigen::Map<const Eigen::VectorXd>(socs.data(), Eigen::Index(socs.size()));
  return trace;
}

TimeSeries simulate_cell(const CellSpec& spec, const AgingSpec& aging, const ProtocolScript& script,
                         const SimulationOptions& opts) {
  return simulate_cell_trace(spec, aging, script, opts).series;
}

std::string to_string(StepMode mode) {
  switch (mode) {
    case StepMode::cc_charge: return "cc_charge";
    case StepMode::cv_charge: return "cv_charge";
    case StepMode::rest: return "rest";
    case StepMode::cc_discharge: return "cc_discharge";
  }
  return {};
}

StepMode parse_step_mode(const std::string& text) {
  for (auto m : {StepMode::cc_charge, StepMode::cv_charge, StepMode::rest, StepMode::cc_discharge})
    if (to_string(m) == text) return m;
  throw DataError("unknown protocol step mode '" + text + "'");
}

nlohmann::json protocol_to_json(const ProtocolScript& script) {
  auto out = nlohmann::json::array();
  for (const auto& s : script.steps) {
    nlohmann::json j;
    j["mode"] = to_string(s.mode);
    if (s.mode == StepMode::cv_charge)
      j["volts"] = s.magnitude;
    else if (s.mode != StepMode::rest)
      j["amps"] = s.magnitude;
    j["seconds"] = s.seconds;
    if (s.cutoff) j["cutoff_v"] = *s.cutoff;
    out.push_back(std::move(j));
  }
  return out;
}

ProtocolScript protocol_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw DataError("protocol JSON must be an array of steps");
  ProtocolScript p;
  for (const auto& e : j) {
    ProtocolStep s;
    s.mode = parse_step_mode(e.at("mode").get<std::string>());
    if (s.mode == StepMode::cv_charge)
      s.magnitude = e.at("volts").get<double>();
    else if (s.mode != StepMode::rest)
      s.magnitude = e.at("amps").get<double>();
    s.seconds = e.at("seconds").get<double>();
    if (e.contains("cutoff_v")) s.cutoff = e.at("cutoff_v").get<double>();
    p.steps.push_back(s);
  }
  return p;
}

nlohmann::json cell_to_json(const CellSpec& spec) {
  nlohmann::json knots = nlohmann::json::array();
  for (const auto& [s, v] : spec.ocv.knots()) knots.push_back({s, v});
  return {{"capacity_ah", spec.capacity_ah}, {"r0", spec.r0},       {"r1", spec.r1},
          {"c1", spec.c1},                   {"r2", spec.r2},       {"c2", spec.c2},
          {"ocv_knots", knots},              {"v_min", spec.v_min}, {"v_max", spec.v_max}};
}

}  // namespace voltdmd
