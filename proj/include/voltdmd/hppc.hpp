#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "voltdmd/timeseries.hpp"

namespace voltdmd {

/// Piecewise-linear open-circuit voltage over state of charge, flat outside
/// the first and last knots.
class OcvCurve {
 public:
  /// Knots as (soc, volts) with strictly increasing soc.
  explicit OcvCurve(std::vector<std::pair<double, double>> knots);

  /// (0, 2.5), (0.1, 3.2), (0.5, 3.7), (0.9, 4.05), (1, 4.2).
  static OcvCurve default_curve();

  double operator()(double soc) const;
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

 private:
  std::vector<std::pair<double, double>> knots_;
};

/// Two-RC Thevenin cell.
struct CellSpec {
  double capacity_ah = 30.0;
  double r0 = 2e-3;
  double r1 = 1e-3;
  double c1 = 1e4;
  double r2 = 5e-4;
  double c2 = 1e5;
  OcvCurve ocv = OcvCurve::default_curve();
  double v_min = 2.5;
  double v_max = 4.2;

  void validate() const;
};

/// Linear capacity fade and resistance growth per cycle.
struct AgingSpec {
  int cycles = 0;
  double capacity_fade_per_cycle = 2e-4;
  double resistance_growth_per_cycle = 3e-4;

  void validate() const;
};

CellSpec age_cell(const CellSpec& spec, const AgingSpec& aging);

enum class StepMode { cc_charge, cv_charge, rest, cc_discharge };

/// One scripted step. `magnitude` is amperes for CC steps (non-negative,
/// direction given by the mode), volts for CV steps and unused for rests.
/// A cutoff ends a CC step early: discharge once v <= cutoff, charge once
/// v >= cutoff.
struct ProtocolStep {
  StepMode mode = StepMode::rest;
  double magnitude = 0.0;
  double seconds = 0.0;
  std::optional<double> cutoff;
};

struct ProtocolScript {
  std::vector<ProtocolStep> steps;

  double duration() const;
  void validate(const CellSpec& spec) const;
};

/// Charge phase settings ahead of the pulse blocks.
struct ChargePhase {
  double cc_amps = 15.0;
  double cc_max_seconds = 7200.0;
  double cv_seconds = 1800.0;
};

/// CC-CV charge followed by `repetitions` pulse blocks:
/// rest 3600 s, discharge 10 A 10 s, rest 180 s, charge 5 A 20 s, rest 120 s,
/// discharge 10 A 1080 s, rest 3600 s. The long discharge of the first block
/// stops at 3.95 V; later blocks stop at the cell's v_min.
ProtocolScript hppc_protocol(const CellSpec& spec, int repetitions, const ChargePhase& charge = {});

/// Scalar durations (seconds) of one pulse block and of the charge phase.
double hppc_block_seconds();

struct SimulationOptions {
  double dt = 1.0;
  double initial_soc = 0.9;
  double noise_sigma = 0.0;  // volts, added to recorded voltage only
  std::uint64_t seed = 0;
};

/// Record plus the state of charge at each recorded sample and after the
/// last integration step.
struct CellTrace {
  TimeSeries series;
  Eigen::VectorXd soc;  // length series.size() + 1
};

CellTrace simulate_cell_trace(const CellSpec& spec, const AgingSpec& aging,
                              const ProtocolScript& script, const SimulationOptions& opts = {});

TimeSeries simulate_cell(const CellSpec& spec, const AgingSpec& aging, const ProtocolScript& script,
                         const SimulationOptions& opts = {});

std::string to_string(StepMode mode);
StepMode parse_step_mode(const std::string& text);

/// [{"mode":"cc_discharge","amps":10,"seconds":10}, ...]; CV steps carry
/// "volts", cutoffs "cutoff_v".
nlohmann::json protocol_to_json(const ProtocolScript& script);
ProtocolScript protocol_from_json(const nlohmann::json& j);

nlohmann::json cell_to_json(const CellSpec& spec);

}  // namespace voltdmd
