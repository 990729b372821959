#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qtherm/config.hpp"
#include "qtherm/estimator.hpp"
#include "qtherm/measurement_sim.hpp"
#include "qtherm/quasiparticle.hpp"
#include "qtherm/qubit_model.hpp"

namespace qtherm {

LevelLadder build_ladder(const ExperimentConfig& config);
DeviceParams build_device(const ExperimentConfig& config);

/// Equilibrium populations with a non-equilibrium floor on P_e: when the
/// Boltzmann P_e is below residual_pe it is raised to residual_pe and P_g
/// absorbs the difference.
PopulationDistribution floored_populations(const LevelLadder& ladder, double temperature_mk, double residual_pe);

/// Effective temperature with asymmetric bounds from a +/- stderr band.
struct TeffEstimate {
  std::optional<double> teff_mk;
  std::optional<double> minus_mk;  // teff - T(pe - stderr)
  std::optional<double> plus_mk;   // T(pe + stderr) - teff
};
TeffEstimate estimate_teff(const LevelLadder& ladder, double pe, double stderr_pe);

struct SweepRow {
  double bath_mk = 0.0;
  TeffEstimate teff;
  int averages = 0;           // A
  int cycles = 0;             // C
  long long total_averages = 0;  // N = C * A
  SampleStats stats;
  double true_pe = 0.0;         // injected population (after the floor)
  double target_pexp = 0.0;     // what the estimator converges to for true_pe
  double boltzmann_pe = 0.0;    // equilibrium P_e
  double boltzmann_pexp = 0.0;  // equilibrium P_e^exp (theory curve)
  double sigma_t_v = 0.0;
  bool truncation_warning = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by bath temperature
  std::vector<std::vector<CycleRecord>> cycles;  // parallel to rows
};

/// One independent job per set point, run on config.jobs threads. Job i
/// draws from stream derive_stream_seed(seed, i) of the set point's index in
/// the configured list, so results do not depend on the thread count.
SweepResult run_temperature_sweep(const ExperimentConfig& config);

struct CalibrationRow {
  double k = 0.0;
  double pe_measured = 0.0;
  double stderr_pe = 0.0;
  int cycles = 0;
  double pe_pumped = 0.0;    // injected P_e^p
  double target_pexp = 0.0;  // estimator target for the pumped state
};

struct CalibrationResult {
  std::vector<CalibrationRow> rows;  // in configured k order
  CalibrationFit fit;
  double injected_pe = 0.0;
  double expected_slope = 0.0;  // 1 - 2 P_e for an ideal exchange
  /// Excited population left after one repetition period when starting from
  /// the largest pumped state.
  double residual_contamination = 0.0;
  double worst_case_k = 0.0;
};

CalibrationResult run_calibration(const ExperimentConfig& config);

struct QpReport {
  double pe = 0.0;
  double density_ratio = 0.0;
  double density_ratio_rounded = 0.0;  // two significant figures
  double gap_uev = 0.0;
  double ege_ghz = 0.0;
  double rn_kohm = 0.0;
  double capacitance_ff = 0.0;
  QpRelaxation relaxation;
  QpRelaxation relaxation_rounded;
  double measured_t1_us = 0.0;
  std::optional<double> t1_ratio;  // T1_qp / measured T1
};

QpReport run_qp_analysis(const ExperimentConfig& config);

struct TraceResult {
  double temperature_mk = 0.0;
  PopulationDistribution populations{std::vector<double>{1.0}};
  RabiTrace reference;
  RabiTrace signal;
  SinusoidFit reference_fit;
  SinusoidFit signal_fit;  // shared frequency and phase
  double pe_full_trace = 0.0;
  double pe_two_point = 0.0;  // noiseless two-point value for the same populations
  double target_pexp = 0.0;
};

TraceResult run_trace(const ExperimentConfig& config);

/// Read-out voltage threshold below which |A_sig + A_ref| flags a cycle invalid.
double invalid_denominator_threshold(const ReadoutModel& readout);

/// The per-cycle estimates of a record list.
std::vector<PeSample> cycle_estimates(const std::vector<CycleRecord>& cycles, const ReadoutModel& readout);

}  // namespace qtherm
