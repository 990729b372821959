#pragma once

#include <numbers>

// CODATA 2018 exact SI values. Every module converts units through this table.
namespace qtherm::constants {

inline constexpr double planck = 6.62607015e-34;          // J s
inline constexpr double boltzmann = 1.380649e-23;         // J / K
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double flux_quantum = planck / (2.0 * elementary_charge);  // Wb

inline constexpr double ghz = 1e9;
inline constexpr double mhz = 1e6;
inline constexpr double millikelvin = 1e-3;
inline constexpr double microsecond = 1e-6;
inline constexpr double microelectronvolt = 1e-6 * elementary_charge;  // J
inline constexpr double femtofarad = 1e-15;
inline constexpr double kiloohm = 1e3;
inline constexpr double kilohertz = 1e3;

/// h * (1 GHz) / k_B, in mK: the temperature scale of a 1 GHz level spacing.
inline constexpr double mk_per_ghz = planck * ghz / boltzmann / millikelvin;

/// Energy in microelectronvolts expressed as a frequency in GHz (E/h).
constexpr double uev_to_ghz(double uev) { return uev * microelectronvolt / planck / ghz; }

inline constexpr double pi = std::numbers::pi;

}  // namespace qtherm::constants
