#include "qtherm/measurement_sim.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "qtherm/constants.hpp"

namespace qtherm {

namespace {

double gauss(Rng& rng) {
  // A fresh distribution per draw keeps the stream independent of caching.
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

PopulationDistribution prepare(const PopulationDistribution& pop, bool with_swap) {
  return with_swap ? pump_fraction(pop, 1.0) : pop;
}

double envelope(double t_us, const ProtocolConfig& config) {
  return std::isinf(config.rabi_decay_us) ? 1.0 : std::exp(-t_us / config.rabi_decay_us);
}

// One averaged point: drift sampled at the middle of the acquisition window.
double acquire_point(double noiseless_v, const ProtocolConfig& config, const ReadoutModel& readout,
                     Rng& rng, DriftProcess& drift) {
  const double half = 0.5 * config.point_duration_s();
  drift.advance(half, rng);
  const double drift_v = drift.value();
  const double white = readout.sigma_t_v > 0.0
                           ? readout.sigma_t_v / std::sqrt(double(config.averages_per_point)) * gauss(rng)
                           : 0.0;
  drift.advance(half, rng);
  return noiseless_v + drift_v + white;
}

enum Point { kR1 = 0, kR2 = 1, kS1 = 2, kS2 = 3 };

std::array<double, 4> noiseless_cycle(const PopulationDistribution& pop, const ProtocolConfig& config,
                                      const ReadoutModel& readout) {
  const PopulationDistribution ref = prepare(pop, true);
  return {ef_rabi_voltage(ref, config.t_max_us(), config, readout),
          ef_rabi_voltage(ref, config.t_min_us(), config, readout),
          ef_rabi_voltage(pop, config.t_max_us(), config, readout),
          ef_rabi_voltage(pop, config.t_min_us(), config, readout)};
}

void store(CycleRecord& rec, int point, double v) {
  switch (point) {
    case kR1: rec.r1 = v; break;
    case kR2: rec.r2 = v; break;
    case kS1: rec.s1 = v; break;
    case kS2: rec.s2 = v; break;
    default: break;
  }
}

}  // namespace

std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream_id) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  };
  return splitmix(splitmix(seed) ^ (stream_id * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL));
}

double ProtocolConfig::point_duration_s() const {
  return averages_per_point * repetition_period_us * constants::microsecond;
}

void ProtocolConfig::validate(bool full_trace) const {
  if (!(rabi_freq_mhz > 0.0)) throw std::invalid_argument("protocol: rabi_freq_mhz must be positive");
  if (!(rabi_decay_us > 0.0)) throw std::invalid_argument("protocol: rabi_decay_us must be positive");
  if (averages_per_point < 1) throw std::invalid_argument("protocol: averages_per_point must be >= 1");
  if (cycles < 1) throw std::invalid_argument("protocol: cycles must be >= 1");
  if (!(repetition_period_us > 0.0)) throw std::invalid_argument("protocol: repetition_period_us must be positive");
  if (!(t1_us > 0.0)) throw std::invalid_argument("protocol: t1_us must be positive");
  if (full_trace) {
    if (trace_points < 8) throw std::invalid_argument("protocol: trace_points must be >= 8");
    if (!(trace_duration_us > 0.0)) throw std::invalid_argument("protocol: trace_duration_us must be positive");
    if (trace_duration_us * rabi_freq_mhz < 4.0) {
      throw std::invalid_argument("protocol: a full trace must span at least 4 Rabi periods");
    }
  }
}

void ReadoutModel::validate() const {
  if (!(a0_v > 0.0)) throw std::invalid_argument("readout: a0_v must be positive");
  if (!(sigma_t_v >= 0.0)) throw std::invalid_argument("readout: sigma_t_v must be non-negative");
  if (polarity != 1 && polarity != -1) throw std::invalid_argument("readout: polarity must be +1 or -1");
  if (drift.kind == DriftKind::ornstein_uhlenbeck &&
      (!(drift.amplitude_v >= 0.0) || !(drift.correlation_time_s > 0.0))) {
    throw std::invalid_argument("readout: OU drift needs amplitude >= 0 and correlation time > 0");
  }
}

DriftProcess::DriftProcess(const DriftSpec& spec, Rng& rng) : spec_(spec) {
  if (spec_.kind == DriftKind::ornstein_uhlenbeck) {
    value_ = spec_.amplitude_v * gauss(rng);
  }
}

void DriftProcess::advance(double dt_s, Rng& rng) {
  clock_s_ += dt_s;
  switch (spec_.kind) {
    case DriftKind::none:
      break;
    case DriftKind::linear:
      value_ = spec_.slope_v_per_s * clock_s_;
      break;
    case DriftKind::ornstein_uhlenbeck: {
      const double decay = std::exp(-dt_s / spec_.correlation_time_s);
      value_ = value_ * decay + spec_.amplitude_v * std::sqrt(1.0 - decay * decay) * gauss(rng);
      break;
    }
  }
}

PopulationDistribution pump_fraction(const PopulationDistribution& pop, double k) {
  if (!(k >= 0.0 && k <= 1.0)) {
    throw std::invalid_argument("pump_fraction: k must lie in [0, 1]");
  }
  if (pop.size() < 2) {
    throw std::invalid_argument("pump_fraction: need at least two levels");
  }
  std::vector<double> p(pop.probs().begin(), pop.probs().end());
  const double pg = p[0];
  const double pe = p[1];
  p[1] = k * pg + (1.0 - k) * pe;
  p[0] = k * pe + (1.0 - k) * pg;
  return PopulationDistribution(std::move(p));
}

PopulationDistribution relax(const PopulationDistribution& pop, double wait_us, double t1_us) {
  if (!(wait_us >= 0.0)) throw std::invalid_argument("relax: wait must be non-negative");
  if (!(t1_us > 0.0)) throw std::invalid_argument("relax: T1 must be positive");
  if (wait_us == 0.0 || pop.size() < 2) {
    return pop;
  }
  std::vector<double> p(pop.size(), 0.0);
  double excited = 0.0;
  for (std::size_t i = 1; i < pop.size(); ++i) excited += pop[i];
  const double remaining = excited * std::exp(-wait_us / t1_us);
  p[1] = remaining;
  p[0] = 1.0 - remaining;
  return PopulationDistribution(std::move(p));
}

double ef_rabi_voltage(const PopulationDistribution& pop, double t_us, const ProtocolConfig& config,
                       const ReadoutModel& readout) {
  if (!(t_us >= 0.0)) throw std::invalid_argument("ef_rabi_voltage: t must be non-negative");
  const double hi = pop.excited();
  const double lo = pop.second_excited();
  const double osc = std::cos(2.0 * constants::pi * config.rabi_freq_mhz * t_us) * envelope(t_us, config);
  const double e_population = lo + (hi - lo) * 0.5 * (1.0 + osc);
  return readout.baseline_v + readout.polarity * readout.a0_v * e_population;
}

double sigma_t_for_target(double sigma_c, const ProtocolConfig& config, const ReadoutModel& readout) {
  if (!(sigma_c >= 0.0)) throw std::invalid_argument("sigma_t_for_target: sigma_c must be non-negative");
  const double kappa = 0.5 * (1.0 + envelope(config.t_min_us(), config));
  return sigma_c * readout.a0_v * kappa * std::sqrt(double(config.averages_per_point)) / std::sqrt(2.0);
}

RabiTrace acquire_trace(const PopulationDistribution& pop, bool with_swap, const ProtocolConfig& config,
                        const ReadoutModel& readout, Rng& rng, DriftProcess& drift) {
  config.validate(true);
  const PopulationDistribution driven = prepare(pop, with_swap);
  RabiTrace trace;
  trace.with_swap = with_swap;
  trace.config = config;
  const auto n = static_cast<std::size_t>(config.trace_points);
  trace.times_us.reserve(n);
  trace.voltages_v.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = config.trace_duration_us * double(i) / double(n - 1);
    trace.times_us.push_back(t);
    trace.voltages_v.push_back(
        acquire_point(ef_rabi_voltage(driven, t, config, readout), config, readout, rng, drift));
  }
  return trace;
}

CycleRecord acquire_cycle(const PopulationDistribution& pop, const ProtocolConfig& config,
                          const ReadoutModel& readout, Rng& rng, DriftProcess& drift,
                          std::size_t cycle_index) {
  const auto clean = noiseless_cycle(pop, config, readout);
  CycleRecord rec;
  rec.cycle_index = cycle_index;
  for (int point : {kR1, kR2, kS1, kS2}) {
    store(rec, point, acquire_point(clean[point], config, readout, rng, drift));
  }
  return rec;
}

std::vector<CycleRecord> run_experiment(const PopulationDistribution& true_pop,
                                        const ProtocolConfig& config, const ReadoutModel& readout) {
  config.validate();
  readout.validate();
  Rng rng(readout.rng_seed);
  DriftProcess drift(readout.drift, rng);
  const auto cycles = static_cast<std::size_t>(config.cycles);
  std::vector<CycleRecord> records(cycles);

  if (config.order == AcquisitionOrder::interleaved) {
    for (std::size_t c = 0; c < cycles; ++c) {
      records[c] = acquire_cycle(true_pop, config, readout, rng, drift, c);
    }
    return records;
  }

  const auto clean = noiseless_cycle(true_pop, config, readout);
  for (std::size_t c = 0; c < cycles; ++c) records[c].cycle_index = c;
  for (int point : {kR1, kR2, kS1, kS2}) {
    for (std::size_t c = 0; c < cycles; ++c) {
      store(records[c], point, acquire_point(clean[point], config, readout, rng, drift));
    }
  }
  return records;
}

}  // namespace qtherm
