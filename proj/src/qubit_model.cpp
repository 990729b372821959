#include "qtherm/qubit_model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "qtherm/constants.hpp"

namespace qtherm {

namespace {

constexpr double kTopLevelWarnThreshold = 1e-3;
constexpr double kBisectionLoMk = 1.0;
constexpr double kBisectionHiMk = 1000.0;
constexpr double kBisectionTolMk = 1e-5;

double excited_population(const LevelLadder& ladder, double temperature_mk) {
  return boltzmann_populations(ladder, temperature_mk).excited();
}

}  // namespace

LevelLadder::LevelLadder(std::vector<double> energies_ghz) : energies_(std::move(energies_ghz)) {
  if (energies_.size() < 2) {
    throw std::invalid_argument("LevelLadder: need at least two levels");
  }
  if (energies_[0] != 0.0) {
    throw std::invalid_argument("LevelLadder: ground-state energy must be exactly 0");
  }
  for (std::size_t i = 1; i < energies_.size(); ++i) {
    if (!std::isfinite(energies_[i]) || !(energies_[i] > energies_[i - 1])) {
      throw std::invalid_argument("LevelLadder: energies must be finite and strictly increasing");
    }
  }
}

PopulationDistribution::PopulationDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) {
    throw std::invalid_argument("PopulationDistribution: empty");
  }
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("PopulationDistribution: probability outside [0, 1]: " +
                                  std::to_string(p));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kNormTolerance) {
    throw std::invalid_argument("PopulationDistribution: probabilities sum to " +
                                std::to_string(sum));
  }
}

PopulationDistribution PopulationDistribution::normalized(std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("PopulationDistribution::normalized: negative or non-finite weight");
    }
    sum += w;
  }
  if (!(sum > 0.0)) {
    throw std::invalid_argument("PopulationDistribution::normalized: weights sum to zero");
  }
  for (double& w : weights) w /= sum;
  return PopulationDistribution(std::move(weights));
}

DeviceParams derive_device_params(double ej_ghz, double ec_ghz, double gap_uev, double t1_us) {
  if (!(ej_ghz > 0.0) || !(ec_ghz > 0.0) || !(gap_uev > 0.0) || !(t1_us > 0.0)) {
    throw std::invalid_argument("DeviceParams: E_J, E_C, gap and T1 must be positive");
  }
  if (!(ej_ghz / ec_ghz > 1.0)) {
    throw std::invalid_argument("DeviceParams: E_J/E_C must exceed 1 (transmon regime)");
  }
  DeviceParams p;
  p.ej_ghz = ej_ghz;
  p.ec_ghz = ec_ghz;
  p.gap_uev = gap_uev;
  p.t1_us = t1_us;
  p.capacitance_ff = capacitance_from_charging_energy(ec_ghz);
  p.rn_kohm = normal_resistance(gap_uev, ej_ghz);
  return p;
}

LevelLadder transmon_ladder(double ej_ghz, double ec_ghz, std::size_t n_levels) {
  if (!(ej_ghz > 0.0) || !(ec_ghz > 0.0)) {
    throw std::invalid_argument("transmon_ladder: E_J and E_C must be positive");
  }
  if (n_levels < 2) {
    throw std::invalid_argument("transmon_ladder: n_levels must be at least 2");
  }
  const double plasma = std::sqrt(8.0 * ej_ghz * ec_ghz);
  auto level = [&](double n) {
    return -ej_ghz + plasma * (n + 0.5) - ec_ghz / 12.0 * (6.0 * n * n + 6.0 * n + 3.0);
  };
  const double e0 = level(0.0);
  std::vector<double> energies(n_levels);
  energies[0] = 0.0;
  for (std::size_t n = 1; n < n_levels; ++n) {
    energies[n] = level(static_cast<double>(n)) - e0;
  }
  // Throws if the asymptotic spectrum stops increasing (E_C too large for n_levels).
  return LevelLadder(std::move(energies));
}

LevelLadder ladder_from_transitions(std::span<const double> transitions_ghz) {
  if (transitions_ghz.empty()) {
    throw std::invalid_argument("ladder_from_transitions: no transitions given");
  }
  std::vector<double> energies{0.0};
  energies.reserve(transitions_ghz.size() + 1);
  for (double f : transitions_ghz) {
    if (!(f > 0.0)) {
      throw std::invalid_argument("ladder_from_transitions: transitions must be positive");
    }
    energies.push_back(energies.back() + f);
  }
  return LevelLadder(std::move(energies));
}

PopulationDistribution boltzmann_populations(const LevelLadder& ladder, double temperature_mk) {
  if (!(temperature_mk > 0.0)) {
    throw std::invalid_argument("boltzmann_populations: temperature must be positive");
  }
  std::vector<double> weights;
  weights.reserve(ladder.size());
  for (double e : ladder.energies()) {
    weights.push_back(std::exp(-e * constants::mk_per_ghz / temperature_mk));
  }
  return PopulationDistribution::normalized(std::move(weights));
}

bool truncation_suspect(const PopulationDistribution& pop) {
  return pop.size() > 1 && pop[pop.size() - 1] > kTopLevelWarnThreshold;
}

double pexp_ratio(const PopulationDistribution& pop) {
  const double sig = pop.excited() - pop.second_excited();
  const double ref = pop.ground() - pop.second_excited();
  return sig / (sig + ref);
}

double predicted_pexp(const LevelLadder& ladder, double temperature_mk) {
  return pexp_ratio(boltzmann_populations(ladder, temperature_mk));
}

TemperatureBracket monotone_bracket(const LevelLadder& ladder) {
  // Golden-section search for the maximum of P_e(T); P_e is unimodal in T.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = kBisectionLoMk;
  double b = kBisectionHiMk;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = excited_population(ladder, c);
  double fd = excited_population(ladder, d);
  while (b - a > 1e-4) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = excited_population(ladder, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = excited_population(ladder, d);
    }
  }
  const double peak = 0.5 * (a + b);
  const double hi = excited_population(ladder, kBisectionHiMk) >= excited_population(ladder, peak)
                        ? kBisectionHiMk
                        : peak;
  return {kBisectionLoMk, hi};
}

double effective_temperature(const LevelLadder& ladder, double pe) {
  const auto [lo0, hi0] = monotone_bracket(ladder);
  const double pe_lo = excited_population(ladder, lo0);
  const double pe_hi = excited_population(ladder, hi0);
  if (!(pe > pe_lo && pe < pe_hi)) {
    throw std::domain_error("effective_temperature: P_e = " + std::to_string(pe) +
                            " outside the attainable range (" + std::to_string(pe_lo) + ", " +
                            std::to_string(pe_hi) + ")");
  }
  double lo = lo0;
  double hi = hi0;
  while (hi - lo > kBisectionTolMk) {
    const double mid = 0.5 * (lo + hi);
    if (excited_population(ladder, mid) < pe) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double capacitance_from_charging_energy(double ec_ghz) {
  if (!(ec_ghz > 0.0)) {
    throw std::invalid_argument("capacitance_from_charging_energy: E_C must be positive");
  }
  const double e = constants::elementary_charge;
  return e * e / (2.0 * constants::planck * ec_ghz * constants::ghz) / constants::femtofarad;
}

double critical_current_na(double ej_ghz) {
  return 2.0 * constants::pi * constants::planck * ej_ghz * constants::ghz /
         constants::flux_quantum * 1e9;
}

double normal_resistance(double gap_uev, double ej_ghz) {
  if (!(gap_uev > 0.0) || !(ej_ghz > 0.0)) {
    throw std::invalid_argument("normal_resistance: gap and E_J must be positive");
  }
  const double ic = critical_current_na(ej_ghz) * 1e-9;
  const double gap_j = gap_uev * constants::microelectronvolt;
  return constants::pi * gap_j / (2.0 * constants::elementary_charge * ic) / constants::kiloohm;
}

}  // namespace qtherm
