#include "qtherm/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <iostream>
#include <mutex>
#include <numeric>
#include <thread>

#include <fmt/format.h>

namespace qtherm {

namespace {

constexpr std::uint64_t kCalibrationStreamBase = 1ULL << 20;
constexpr std::uint64_t kTraceStream = 1ULL << 21;
constexpr double kInvalidDenominatorFraction = 1e-6;

// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first failure.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(jobs, static_cast<int>(n))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

int pick(const std::vector<int>& list, std::size_t i, int fallback) {
  if (list.empty()) return fallback;
  return list.size() == 1 ? list[0] : list[i];
}

std::optional<double> try_teff(const LevelLadder& ladder, double pe) {
  try {
    return effective_temperature(ladder, pe);
  } catch (const std::domain_error&) {
    return std::nullopt;
  }
}

ReadoutModel readout_for(const ExperimentConfig& config, const ProtocolConfig& protocol, std::uint64_t seed) {
  ReadoutModel readout = config.readout;
  if (config.target_sigma_c) {
    readout.sigma_t_v = sigma_t_for_target(*config.target_sigma_c, protocol, readout);
  }
  readout.rng_seed = seed;
  return readout;
}

double round_sig(double x, int digits) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  const double mag = std::pow(10.0, digits - 1 - static_cast<int>(std::floor(std::log10(std::abs(x)))));
  return std::round(x * mag) / mag;
}

}  // namespace

LevelLadder build_ladder(const ExperimentConfig& config) {
  if (config.ladder.from_device) {
    return transmon_ladder(config.ej_ghz, config.ec_ghz, config.ladder.n_levels);
  }
  return ladder_from_transitions(config.ladder.transitions_ghz);
}

DeviceParams build_device(const ExperimentConfig& config) {
  return derive_device_params(config.ej_ghz, config.ec_ghz, config.gap_uev, config.t1_us);
}

PopulationDistribution floored_populations(const LevelLadder& ladder, double temperature_mk, double residual_pe) {
  const PopulationDistribution eq = boltzmann_populations(ladder, temperature_mk);
  if (!(eq.excited() < residual_pe)) {
    return eq;
  }
  std::vector<double> p(eq.probs().begin(), eq.probs().end());
  const double higher = std::accumulate(p.begin() + 2, p.end(), 0.0);
  p[1] = residual_pe;
  p[0] = 1.0 - residual_pe - higher;
  return PopulationDistribution(std::move(p));
}

TeffEstimate estimate_teff(const LevelLadder& ladder, double pe, double stderr_pe) {
  TeffEstimate out;
  out.teff_mk = try_teff(ladder, pe);
  if (!out.teff_mk) return out;
  if (const auto lo = try_teff(ladder, pe - stderr_pe)) out.minus_mk = *out.teff_mk - *lo;
  if (const auto hi = try_teff(ladder, pe + stderr_pe)) out.plus_mk = *hi - *out.teff_mk;
  return out;
}

double invalid_denominator_threshold(const ReadoutModel& readout) {
  return kInvalidDenominatorFraction * readout.a0_v;
}

std::vector<PeSample> cycle_estimates(const std::vector<CycleRecord>& cycles, const ReadoutModel& readout) {
  const double threshold = invalid_denominator_threshold(readout);
  std::vector<PeSample> out;
  out.reserve(cycles.size());
  for (const auto& c : cycles) out.push_back(two_point_pe(c, threshold));
  return out;
}

SweepResult run_temperature_sweep(const ExperimentConfig& config) {
  config.validate();
  const LevelLadder ladder = build_ladder(config);
  const std::size_t n = config.sweep.temperatures_mk.size();

  SweepResult result;
  result.rows.resize(n);
  result.cycles.resize(n);

  parallel_for(n, config.jobs, [&](std::size_t i) {
    const double t = config.sweep.temperatures_mk[i];
    const auto [default_a, default_c] = default_counts(t);
    ProtocolConfig protocol = config.protocol;
    protocol.averages_per_point = pick(config.sweep.averages_per_point, i, default_a);
    protocol.cycles = pick(config.sweep.cycles, i, default_c);
    const ReadoutModel readout = readout_for(config, protocol, derive_stream_seed(*config.seed, i));

    const PopulationDistribution eq = boltzmann_populations(ladder, t);
    const PopulationDistribution truth = floored_populations(ladder, t, config.sweep.residual_pe);
    std::vector<CycleRecord> cycles = run_experiment(truth, protocol, readout);

    SweepRow row;
    row.bath_mk = t;
    row.averages = protocol.averages_per_point;
    row.cycles = protocol.cycles;
    row.total_averages = static_cast<long long>(protocol.cycles) * protocol.averages_per_point;
    row.stats = aggregate(cycle_estimates(cycles, readout));
    row.teff = estimate_teff(ladder, row.stats.mean, row.stats.stderr_mean);
    row.true_pe = truth.excited();
    row.target_pexp = pexp_ratio(truth);
    row.boltzmann_pe = eq.excited();
    row.boltzmann_pexp = pexp_ratio(eq);
    row.sigma_t_v = readout.sigma_t_v;
    row.truncation_warning = truncation_suspect(eq);

    result.rows[i] = std::move(row);
    result.cycles[i] = std::move(cycles);
  });

  for (const auto& row : result.rows) {
    if (row.truncation_warning) {
      std::cerr << fmt::format("warning: top ladder level holds more than 1e-3 of the population at {} mK\n",
                               row.bath_mk);
    }
    if (row.stats.invalid_count > 0) {
      std::cerr << fmt::format("note: {} invalid cycles excluded at {} mK\n", row.stats.invalid_count, row.bath_mk);
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return result.rows[a].bath_mk < result.rows[b].bath_mk;
  });
  SweepResult sorted;
  for (std::size_t i : order) {
    sorted.rows.push_back(std::move(result.rows[i]));
    sorted.cycles.push_back(std::move(result.cycles[i]));
  }
  return sorted;
}

CalibrationResult run_calibration(const ExperimentConfig& config) {
  config.validate();
  const LevelLadder ladder = build_ladder(config);
  const CalibrationSpec& spec = config.calibration;
  const PopulationDistribution base = floored_populations(ladder, spec.temperature_mk, spec.residual_pe);

  CalibrationResult result;
  result.injected_pe = base.excited();
  result.expected_slope = base.ground() - base.excited();
  result.rows.resize(spec.k_values.size());

  ProtocolConfig protocol = config.protocol;
  protocol.cycles = spec.cycles;

  parallel_for(spec.k_values.size(), config.jobs, [&](std::size_t i) {
    const double k = spec.k_values[i];
    const PopulationDistribution pumped = pump_fraction(base, k);
    const ReadoutModel readout = readout_for(config, protocol, derive_stream_seed(*config.seed, kCalibrationStreamBase + i));
    const SampleStats stats = aggregate(cycle_estimates(run_experiment(pumped, protocol, readout), readout),
                                        AggregateOptions{.fit_gaussian = false});
    CalibrationRow row;
    row.k = k;
    row.pe_measured = stats.mean;
    row.stderr_pe = stats.stderr_mean;
    row.cycles = protocol.cycles;
    row.pe_pumped = pumped.excited();
    row.target_pexp = pexp_ratio(pumped);
    result.rows[i] = row;
  });

  std::vector<CalibrationPoint> points;
  points.reserve(result.rows.size());
  for (const auto& r : result.rows) points.push_back({r.k, r.pe_measured});
  result.fit = calibration_fit(points, spec.mode);

  result.worst_case_k = *std::max_element(spec.k_values.begin(), spec.k_values.end());
  result.residual_contamination =
      relax(pump_fraction(base, result.worst_case_k), protocol.repetition_period_us, protocol.t1_us).excited();
  return result;
}

QpReport run_qp_analysis(const ExperimentConfig& config) {
  DeviceParams device = build_device(config);
  if (config.qp.rn_kohm) device.rn_kohm = *config.qp.rn_kohm;
  if (config.qp.capacitance_ff) device.capacitance_ff = *config.qp.capacitance_ff;
  const LevelLadder ladder = build_ladder(config);

  QpReport r;
  r.pe = config.qp.pe;
  r.gap_uev = device.gap_uev;
  r.ege_ghz = ladder.transition(0);
  r.rn_kohm = device.rn_kohm;
  r.capacitance_ff = device.capacitance_ff;
  const QpState state = qp_from_pe(r.pe, r.gap_uev, r.ege_ghz);
  r.density_ratio = state.density_ratio;
  r.density_ratio_rounded = round_sig(state.density_ratio, 2);
  r.relaxation = gamma_qp(device, r.ege_ghz, state);
  r.relaxation_rounded = gamma_qp(device, r.ege_ghz, QpState{r.density_ratio_rounded});
  r.measured_t1_us = config.qp.measured_t1_us.value_or(config.t1_us);
  if (r.relaxation.t1_us) r.t1_ratio = *r.relaxation.t1_us / r.measured_t1_us;
  return r;
}

TraceResult run_trace(const ExperimentConfig& config) {
  config.validate();
  config.protocol.validate(true);
  const LevelLadder ladder = build_ladder(config);
  TraceResult out;
  out.temperature_mk = config.trace.temperature_mk;
  out.populations = floored_populations(ladder, out.temperature_mk, config.sweep.residual_pe);
  out.target_pexp = pexp_ratio(out.populations);

  const ReadoutModel readout = readout_for(config, config.protocol, derive_stream_seed(*config.seed, kTraceStream));
  Rng rng(readout.rng_seed);
  DriftProcess drift(readout.drift, rng);
  out.reference = acquire_trace(out.populations, true, config.protocol, readout, rng, drift);
  out.signal = acquire_trace(out.populations, false, config.protocol, readout, rng, drift);
  out.reference_fit = fit_sinusoid(out.reference);
  out.signal_fit =
      fit_sinusoid(out.signal, SharedOscillation{out.reference_fit.frequency_mhz, out.reference_fit.phase_rad});
  out.pe_full_trace = full_trace_pe(out.signal_fit, out.reference_fit);

  ReadoutModel clean = readout;
  clean.sigma_t_v = 0.0;
  clean.drift = DriftSpec{};
  Rng unused(0);
  DriftProcess no_drift(clean.drift, unused);
  out.pe_two_point = two_point_pe(acquire_cycle(out.populations, config.protocol, clean, unused, no_drift)).value_or(0.0);
  return out;
}

}  // namespace qtherm
