#pragma once

#include <optional>

#include "qtherm/qubit_model.hpp"

namespace qtherm {

/// Non-equilibrium quasiparticle density per Cooper pair, n_qp / n_cp.
struct QpState {
  double density_ratio = 0.0;
};

/// Hot-quasiparticle model constants (Wenner et al.; Catelani et al.).
namespace qp_model {
inline constexpr double kPopulationPrefactor = 2.17;
inline constexpr double kPopulationExponent = 3.65;
inline constexpr double kRatePrefactor = 1.4142135623730951;  // sqrt(2)
inline constexpr double kRateExponent = 1.5;
}  // namespace qp_model

/// Delta / E_ge with Delta in micro-eV and E_ge in GHz. Throws
/// std::domain_error unless Delta exceeds E_ge.
double gap_to_splitting_ratio(double gap_uev, double ege_ghz);

/// P_e = 2.17 (n_qp/n_cp) (Delta/E_ge)^3.65.
double pe_from_qp(QpState state, double gap_uev, double ege_ghz);

/// Inverse of pe_from_qp.
QpState qp_from_pe(double pe, double gap_uev, double ege_ghz);

struct QpRelaxation {
  double gamma_khz = 0.0;
  /// 1 / Gamma in microseconds; empty when Gamma == 0 (no quasiparticle decay).
  std::optional<double> t1_us;
};

/// Gamma_qp = sqrt(2)/(R_N C) (Delta/E_ge)^{3/2} (n_qp/n_cp), using
/// params.rn_kohm, params.capacitance_ff and params.gap_uev.
QpRelaxation gamma_qp(const DeviceParams& params, double ege_ghz, QpState state);

}  // namespace qtherm
