#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "qtherm/quasiparticle.hpp"

using namespace qtherm;

namespace {

DeviceParams rounded_device() {
  DeviceParams d;
  d.rn_kohm = 9.5;
  d.capacitance_ff = 80.0;
  return d;
}

}  // namespace

TEST(Quasiparticle, GapRatio) {
  EXPECT_NEAR(gap_to_splitting_ratio(170.0, 4.97), 8.27078815200, 1e-9);
  EXPECT_THROW(gap_to_splitting_ratio(10.0, 4.97), std::domain_error);
  EXPECT_THROW(gap_to_splitting_ratio(170.0, 0.0), std::invalid_argument);
}

TEST(Quasiparticle, PopulationFromDensity) {
  EXPECT_NEAR(pe_from_qp(QpState{2.2e-7}, 170.0, 4.97), 0.00106642075419, 1e-14);
  EXPECT_NEAR(pe_from_qp(QpState{1e-7}, 170.0, 4.97), 4.8473670645e-4, 1e-14);
  // independent evaluation of the power law
  const double r = 170.0 * 1e-6 * 1.602176634e-19 / 6.62607015e-34 / 4.97e9;
  EXPECT_NEAR(pe_from_qp(QpState{3e-7}, 170.0, 4.97), 2.17 * 3e-7 * std::pow(r, 3.65), 1e-15);
  EXPECT_THROW(pe_from_qp(QpState{-1.0}, 170.0, 4.97), std::invalid_argument);
}

TEST(Quasiparticle, InverseAndLinearity) {
  EXPECT_NEAR(qp_from_pe(0.001, 170.0, 4.97).density_ratio, 2.06297560447e-7, 1e-16);
  for (double x : {1e-8, 2.2e-7, 5e-6}) {
    EXPECT_NEAR(qp_from_pe(pe_from_qp(QpState{x}, 170.0, 4.97), 170.0, 4.97).density_ratio, x, 1e-12 * x);
  }
  EXPECT_NEAR(qp_from_pe(0.002, 170.0, 4.97).density_ratio, 2.0 * qp_from_pe(0.001, 170.0, 4.97).density_ratio,
              1e-18);
  EXPECT_THROW(qp_from_pe(-0.1, 170.0, 4.97), std::invalid_argument);
}

TEST(Quasiparticle, RelaxationRate) {
  const auto rel = gamma_qp(rounded_device(), 4.97, QpState{2.2e-7});
  EXPECT_NEAR(rel.gamma_khz, 9.73743186409, 1e-8);
  ASSERT_TRUE(rel.t1_us.has_value());
  EXPECT_NEAR(*rel.t1_us, 102.696482, 1e-5);
  const auto unrounded = gamma_qp(rounded_device(), 4.97, qp_from_pe(0.001, 170.0, 4.97));
  EXPECT_NEAR(unrounded.gamma_khz, 9.13094744809, 1e-8);
  EXPECT_NEAR(*unrounded.t1_us, 109.517660, 1e-5);
}

TEST(Quasiparticle, RateFollowsClosedForm) {
  DeviceParams d = rounded_device();
  const double ratio = gap_to_splitting_ratio(d.gap_uev, 4.97);
  const double expected_hz = std::sqrt(2.0) / (9.5e3 * 80e-15) * std::pow(ratio, 1.5) * 1e-7;
  EXPECT_NEAR(gamma_qp(d, 4.97, QpState{1e-7}).gamma_khz, expected_hz / 1e3, 1e-9);
}

TEST(Quasiparticle, ZeroDensityHasNoRelaxation) {
  const auto rel = gamma_qp(rounded_device(), 4.97, QpState{0.0});
  EXPECT_EQ(rel.gamma_khz, 0.0);
  EXPECT_FALSE(rel.t1_us.has_value());
}

TEST(Quasiparticle, RejectsNonPhysicalDevice) {
  DeviceParams d = rounded_device();
  d.rn_kohm = 0.0;
  EXPECT_THROW(gamma_qp(d, 4.97, QpState{1e-7}), std::invalid_argument);
}
