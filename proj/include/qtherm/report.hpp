#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "qtherm/runner.hpp"

namespace qtherm {

/// sweep.csv: a '# units:' comment line, one header row, one row per set
/// point. Populations are fractions, temperatures mK. Empty fields mark
/// quantities that do not exist (e.g. T_eff of a negative mean).
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

/// Raw per-cycle voltages and P_e^(i) for one set point.
void write_samples_csv(std::ostream& out, const std::vector<CycleRecord>& cycles, const ReadoutModel& readout);

/// Fixed-width table of the sweep statistics with populations in percent.
void write_summary(std::ostream& out, const SweepResult& sweep, const ExperimentConfig& config);

void write_calibration_csv(std::ostream& out, const CalibrationResult& cal);
void write_qp_report(std::ostream& out, const QpReport& report);
void write_trace_csv(std::ostream& out, const TraceResult& trace);

/// File name for a set point's samples, e.g. samples_15mK.csv.
std::string samples_file_name(double temperature_mk);

/// Writes sweep.csv, samples_<T>mK.csv and summary.txt under dir.
/// Throws std::runtime_error when a file cannot be written.
void write_sweep_outputs(const std::filesystem::path& dir, const SweepResult& sweep, const ExperimentConfig& config);
void write_calibration_outputs(const std::filesystem::path& dir, const CalibrationResult& cal);
void write_qp_outputs(const std::filesystem::path& dir, const QpReport& report);
void write_trace_outputs(const std::filesystem::path& dir, const TraceResult& trace);

}  // namespace qtherm
