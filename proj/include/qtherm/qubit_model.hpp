#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qtherm {

/// Energies of the lowest qubit levels relative to the ground state, in GHz
/// (E/h). Index 0 is the ground state and is always exactly 0.
class LevelLadder {
 public:
  /// Throws std::invalid_argument unless energies[0] == 0, the sequence is
  /// strictly increasing and holds at least two levels.
  explicit LevelLadder(std::vector<double> energies_ghz);

  std::span<const double> energies() const { return energies_; }
  std::size_t size() const { return energies_.size(); }
  double energy(std::size_t level) const { return energies_.at(level); }
  /// Transition frequency between level n and n+1, GHz.
  double transition(std::size_t n) const { return energies_.at(n + 1) - energies_.at(n); }

 private:
  std::vector<double> energies_;
};

/// Normalized occupation probabilities over a ladder.
class PopulationDistribution {
 public:
  static constexpr double kNormTolerance = 1e-12;

  /// Throws std::invalid_argument if any entry is outside [0, 1] or the sum
  /// differs from 1 by more than kNormTolerance.
  explicit PopulationDistribution(std::vector<double> probs);

  /// Rescales non-negative weights to unit sum.
  static PopulationDistribution normalized(std::vector<double> weights);

  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_.at(i); }

  double ground() const { return probs_[0]; }
  double excited() const { return probs_.size() > 1 ? probs_[1] : 0.0; }
  double second_excited() const { return probs_.size() > 2 ? probs_[2] : 0.0; }

 private:
  std::vector<double> probs_;
};

struct DeviceParams {
  double ej_ghz = 14.07;
  double ec_ghz = 0.24;
  double gap_uev = 170.0;  // superconducting gap Delta (not 2 Delta)
  double t1_us = 80.0;
  double capacitance_ff = 0.0;  // derived
  double rn_kohm = 0.0;         // derived
};

/// Fills capacitance_ff and rn_kohm from E_C, E_J and the gap.
/// Throws std::invalid_argument for non-positive inputs or E_J/E_C <= 1.
DeviceParams derive_device_params(double ej_ghz, double ec_ghz, double gap_uev, double t1_us);

/// Asymptotic transmon spectrum
///   E_n = -E_J + sqrt(8 E_J E_C)(n + 1/2) - (E_C/12)(6n^2 + 6n + 3),
/// shifted so that E_0 = 0.
LevelLadder transmon_ladder(double ej_ghz, double ec_ghz, std::size_t n_levels = 4);

/// Cumulative sums of the given transition frequencies, prefixed with 0.
LevelLadder ladder_from_transitions(std::span<const double> transitions_ghz);

/// Maxwell-Boltzmann occupation with unit degeneracies. T in mK.
PopulationDistribution boltzmann_populations(const LevelLadder& ladder, double temperature_mk);

/// True when the highest ladder level holds more than 1e-3 of the population,
/// i.e. the truncation is probably too coarse for this temperature.
bool truncation_suspect(const PopulationDistribution& pop);

/// (P_e - P_f) / ((P_e - P_f) + (P_g - P_f)): what the e-f Rabi amplitude ratio
/// measures for a given population.
double pexp_ratio(const PopulationDistribution& pop);

/// pexp_ratio evaluated on equilibrium populations at temperature T (mK).
double predicted_pexp(const LevelLadder& ladder, double temperature_mk);

/// Temperature (mK) at which the equilibrium excited population equals pe.
///
/// Solved by bisection (well below 0.01 mK) on [1 mK, T_peak], where T_peak is the
/// lower of 1000 mK and the temperature maximizing P_e for this ladder. For
/// ladders with more than two levels P_e(T) overshoots 1/N and turns over at
/// high temperature, so the bracket is clipped to the monotone branch.
/// Throws std::domain_error when pe is not attainable on that branch.
double effective_temperature(const LevelLadder& ladder, double pe);

/// Bracket [lo, hi] in mK used by effective_temperature.
struct TemperatureBracket {
  double lo_mk;
  double hi_mk;
};
TemperatureBracket monotone_bracket(const LevelLadder& ladder);

/// C = e^2 / (2 h E_C), in fF.
double capacitance_from_charging_energy(double ec_ghz);

/// Ambegaokar-Baratoff: I_c = 2 pi h E_J / Phi_0, R_N = pi Delta / (2 e I_c). kOhm.
double normal_resistance(double gap_uev, double ej_ghz);

/// Junction critical current in nA for a Josephson energy in GHz.
double critical_current_na(double ej_ghz);

}  // namespace qtherm
