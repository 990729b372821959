#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qtherm/estimator.hpp"
#include "qtherm/measurement_sim.hpp"
#include "qtherm/qubit_model.hpp"

namespace qtherm {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LadderSource {
  /// Measured transition frequencies; used unless from_device is set.
  std::vector<double> transitions_ghz{4.97, 4.70, 4.46};
  bool from_device = false;
  std::size_t n_levels = 4;
};

struct SweepSpec {
  std::vector<double> temperatures_mk{15, 20, 25, 30, 35, 40, 45, 50, 60, 70, 80, 90, 100, 110, 120, 130, 140, 150};
  /// Per set point, or a single value for all; empty means the default
  /// schedule (A = 5000; C = 3000 up to 30 mK, 1500 to 45 mK, 750 above).
  std::vector<int> averages_per_point;
  std::vector<int> cycles;
  /// Non-equilibrium floor on P_e; 0 disables it.
  double residual_pe = 0.001;
};

struct CalibrationSpec {
  double temperature_mk = 15.0;
  double residual_pe = 0.00067;
  std::vector<double> k_values;  // defaults to 0.2% .. 5.0% in 0.2% steps
  int cycles = 20000;
  CalibrationMode mode = CalibrationMode::free_slope;
};

struct QpSpec {
  double pe = 0.001;
  std::optional<double> measured_t1_us;  // defaults to device T1
  std::optional<double> rn_kohm;         // override the derived value
  std::optional<double> capacitance_ff;  // override the derived value
};

struct TraceSpec {
  double temperature_mk = 150.0;
};

struct ExperimentConfig {
  std::optional<std::uint64_t> seed;
  double ej_ghz = 14.07;
  double ec_ghz = 0.24;
  double gap_uev = 170.0;
  double t1_us = 80.0;
  LadderSource ladder;
  ProtocolConfig protocol;
  ReadoutModel readout;
  /// When set, readout.sigma_t_v is derived per set point from this target
  /// two-point spread (fraction of population).
  std::optional<double> target_sigma_c;
  SweepSpec sweep;
  CalibrationSpec calibration;
  QpSpec qp;
  TraceSpec trace;
  std::filesystem::path out_dir = "out";
  int jobs = 1;
  /// Free-form hardware metadata (thermalization wait, stability criteria),
  /// kept as (key, JSON text) pairs and echoed into summaries.
  std::vector<std::pair<std::string, std::string>> metadata;

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;
};

/// Defaults matching the reference transmon device and protocol.
ExperimentConfig default_config();

/// Parses a JSON document; keys absent from the document keep their default
/// values. Unknown keys are rejected.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Default (A, C) schedule for a bath temperature.
std::pair<int, int> default_counts(double temperature_mk);

std::vector<double> default_calibration_k();

}  // namespace qtherm
