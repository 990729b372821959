#include "qtherm/quasiparticle.hpp"

#include <cmath>
#include <stdexcept>

#include "qtherm/constants.hpp"

namespace qtherm {

namespace {

void check_density(double density_ratio) {
  if (!(density_ratio >= 0.0) || !std::isfinite(density_ratio)) {
    throw std::invalid_argument("quasiparticle density ratio must be finite and non-negative");
  }
}

}  // namespace

double gap_to_splitting_ratio(double gap_uev, double ege_ghz) {
  if (!(ege_ghz > 0.0)) {
    throw std::invalid_argument("qubit splitting must be positive");
  }
  const double ratio = constants::uev_to_ghz(gap_uev) / ege_ghz;
  if (!(ratio > 1.0)) {
    throw std::domain_error("superconducting gap must exceed the qubit splitting");
  }
  return ratio;
}

double pe_from_qp(QpState state, double gap_uev, double ege_ghz) {
  check_density(state.density_ratio);
  const double r = gap_to_splitting_ratio(gap_uev, ege_ghz);
  return qp_model::kPopulationPrefactor * state.density_ratio *
         std::pow(r, qp_model::kPopulationExponent);
}

QpState qp_from_pe(double pe, double gap_uev, double ege_ghz) {
  if (!(pe >= 0.0) || !std::isfinite(pe)) {
    throw std::invalid_argument("qp_from_pe: population must be finite and non-negative");
  }
  const double r = gap_to_splitting_ratio(gap_uev, ege_ghz);
  return QpState{pe / (qp_model::kPopulationPrefactor * std::pow(r, qp_model::kPopulationExponent))};
}

QpRelaxation gamma_qp(const DeviceParams& params, double ege_ghz, QpState state) {
  if (!(params.rn_kohm > 0.0) || !(params.capacitance_ff > 0.0) || !(params.gap_uev > 0.0)) {
    throw std::invalid_argument("gamma_qp: R_N, C and gap must be positive");
  }
  check_density(state.density_ratio);
  const double r = gap_to_splitting_ratio(params.gap_uev, ege_ghz);
  const double rc_s = params.rn_kohm * constants::kiloohm * params.capacitance_ff * constants::femtofarad;
  const double gamma_hz =
      qp_model::kRatePrefactor / rc_s * std::pow(r, qp_model::kRateExponent) * state.density_ratio;

  QpRelaxation out;
  out.gamma_khz = gamma_hz / constants::kilohertz;
  if (gamma_hz > 0.0) {
    out.t1_us = 1.0 / gamma_hz / constants::microsecond;
  }
  return out;
}

}  // namespace qtherm
