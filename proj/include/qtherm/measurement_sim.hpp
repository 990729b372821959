#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "qtherm/qubit_model.hpp"

namespace qtherm {

using Rng = std::mt19937_64;

/// Independent 64-bit stream seed for (seed, stream_id), via splitmix64.
std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream_id);

enum class AcquisitionOrder {
  interleaved,  // R1-R2-S1-S2 within every cycle
  blocked,      // all R1, then all R2, then all S1, then all S2
};

struct ProtocolConfig {
  double rabi_freq_mhz = 4.5;
  /// e-f Rabi envelope decay; infinity disables the envelope.
  double rabi_decay_us = 150.0;
  double trace_duration_us = 1.0;
  int trace_points = 35;
  int averages_per_point = 5000;  // A
  int cycles = 3000;              // C
  double repetition_period_us = 500.0;
  double t1_us = 80.0;
  AcquisitionOrder order = AcquisitionOrder::interleaved;

  /// Drive duration of the oscillation maximum (S1, R1).
  double t_max_us() const { return 0.0; }
  /// Drive duration of the oscillation minimum (S2, R2).
  double t_min_us() const { return 1.0 / (2.0 * rabi_freq_mhz); }
  /// Wall-clock time spent on one averaged point, seconds.
  double point_duration_s() const;

  /// Throws std::invalid_argument on non-physical settings. When
  /// full_trace is set the trace must also contain at least 4 Rabi periods.
  void validate(bool full_trace = false) const;
};

enum class DriftKind { none, ornstein_uhlenbeck, linear };

struct DriftSpec {
  DriftKind kind = DriftKind::none;
  double amplitude_v = 0.0;          // stationary standard deviation (OU)
  double correlation_time_s = 10.0;  // OU
  double slope_v_per_s = 0.0;        // linear
};

struct ReadoutModel {
  double a0_v = 1e-3;
  double baseline_v = 5e-3;
  double sigma_t_v = 0.0;  // per-trial white noise
  /// +1: |e> is a bright peak (voltage grows with P_e); -1: a dip.
  int polarity = +1;
  DriftSpec drift;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Slow additive readout drift. Owns its clock (seconds since construction).
class DriftProcess {
 public:
  /// An Ornstein-Uhlenbeck process starts in its stationary distribution,
  /// drawing one normal deviate from rng.
  DriftProcess(const DriftSpec& spec, Rng& rng);

  void advance(double dt_s, Rng& rng);
  double value() const { return value_; }
  double clock_s() const { return clock_s_; }

 private:
  DriftSpec spec_;
  double value_ = 0.0;
  double clock_s_ = 0.0;
};

struct RabiTrace {
  std::vector<double> times_us;
  std::vector<double> voltages_v;
  bool with_swap = false;
  ProtocolConfig config;
};

struct CycleRecord {
  double r1 = 0.0;
  double r2 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  std::size_t cycle_index = 0;

  double signal_amplitude() const { return s2 - s1; }
  double reference_amplitude() const { return r2 - r1; }
};

/// Partial g<->e rotation as a population exchange: a fraction k of P_g
/// moves to e and the same fraction of P_e moves to g. k = 1 is a pi pulse.
PopulationDistribution pump_fraction(const PopulationDistribution& pop, double k);

/// Free decay for `wait_us`: levels above e are folded into e, then e decays
/// to g with exp(-wait/T1). wait == 0 returns the input unchanged.
PopulationDistribution relax(const PopulationDistribution& pop, double wait_us, double t1_us);

/// Noiseless readout voltage after an e-f drive of duration t_us:
///   baseline + polarity * a0 * [P_f + (P_e - P_f)(1 + cos(2 pi f_R t) exp(-t/T_R))/2]
double ef_rabi_voltage(const PopulationDistribution& pop, double t_us, const ProtocolConfig& config,
                       const ReadoutModel& readout);

/// Per-trial white-noise level that gives a two-point sample spread of
/// sigma_c (as a fraction of population) at A averages per point:
///   sigma_t = sigma_c * a0 * kappa * sqrt(A) / sqrt(2),
/// with kappa = (1 + exp(-t_min/T_R)) / 2 the envelope at the minimum point.
/// Valid when P_f is negligible and the drift is small.
double sigma_t_for_target(double sigma_c, const ProtocolConfig& config, const ReadoutModel& readout);

/// Full e-f Rabi trace of config.trace_points points over trace_duration_us.
/// Each point is the mean of A trials: white noise sigma_t/sqrt(A) plus the
/// drift value at the middle of the point.
RabiTrace acquire_trace(const PopulationDistribution& pop, bool with_swap, const ProtocolConfig& config,
                        const ReadoutModel& readout, Rng& rng, DriftProcess& drift);

/// One R1-R2-S1-S2 cycle. R points are taken after a pi pulse; S points
/// without it. The drift clock advances A * repetition_period per point.
CycleRecord acquire_cycle(const PopulationDistribution& pop, const ProtocolConfig& config,
                          const ReadoutModel& readout, Rng& rng, DriftProcess& drift,
                          std::size_t cycle_index = 0);

/// config.cycles cycles on a single RNG stream seeded by readout.rng_seed,
/// acquired in config.order.
std::vector<CycleRecord> run_experiment(const PopulationDistribution& true_pop,
                                        const ProtocolConfig& config, const ReadoutModel& readout);

}  // namespace qtherm
