#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "qtherm/estimator.hpp"
#include "qtherm/measurement_sim.hpp"

using namespace qtherm;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> normal_samples(std::size_t n, double mean, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(mean, sd);
  std::vector<double> out(n);
  for (auto& x : out) x = g(rng);
  return out;
}

PopulationDistribution hot() {
  return PopulationDistribution({0.793588532312, 0.161808882425, 0.0359688422636, 0.00863374299909});
}

}  // namespace

TEST(TwoPoint, ScaleOffsetAndSignInvariance) {
  const CycleRecord c{1.3e-3, 0.2e-3, 0.41e-3, 0.37e-3, 0};
  const double base = *two_point_pe(c);
  EXPECT_NEAR(base, (0.37e-3 - 0.41e-3) / ((0.37e-3 - 0.41e-3) + (0.2e-3 - 1.3e-3)), 1e-15);
  for (double scale : {1e-3, 0.5, 7.0, -1.0, -250.0}) {
    for (double offset : {0.0, -2.0, 3e-3, 10.0}) {
      const CycleRecord t{scale * c.r1 + offset, scale * c.r2 + offset, scale * c.s1 + offset,
                          scale * c.s2 + offset, 0};
      EXPECT_NEAR(*two_point_pe(t), base, 1e-9) << scale << " " << offset;
    }
  }
}

TEST(TwoPoint, NegativeValuesKept) {
  const CycleRecord c{1.0, 0.0, 0.50, 0.52, 0};
  EXPECT_LT(*two_point_pe(c), 0.0);
}

TEST(TwoPoint, DegenerateDenominatorIsInvalid) {
  const CycleRecord zero{1.0, 0.0, 0.0, 1.0, 0};
  EXPECT_FALSE(two_point_pe(zero).has_value());
  const CycleRecord small{1.0, 0.0, 0.0, 0.9999, 0};
  EXPECT_TRUE(two_point_pe(small).has_value());
  EXPECT_FALSE(two_point_pe(small, 1e-3).has_value());
}

TEST(Sinusoid, RecoversNoiselessParameters) {
  std::vector<double> t, v;
  for (int i = 0; i < 35; ++i) {
    t.push_back(i / 34.0);
    v.push_back(0.3 + 0.8 / 2 * std::cos(2 * kPi * 4.5 * t.back() + 0.7));
  }
  const auto fit = fit_sinusoid(t, v);
  EXPECT_NEAR(fit.amplitude, 0.8, 1e-9);
  EXPECT_NEAR(fit.frequency_mhz, 4.5, 1e-9);
  EXPECT_NEAR(fit.phase_rad, 0.7, 1e-9);
  EXPECT_NEAR(fit.offset, 0.3, 1e-9);
  EXPECT_LT(fit.residual_rms, 1e-10);
}

TEST(Sinusoid, NoisyFitWithinUncertainty) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<double> t, v;
  for (int i = 0; i < 60; ++i) {
    t.push_back(1.2 * i / 59.0);
    v.push_back(1.0 * std::cos(2 * kPi * 3.7 * t.back() - 1.1) + noise(rng));
  }
  const auto fit = fit_sinusoid(t, v);
  EXPECT_NEAR(fit.amplitude, 2.0, 5 * fit.amplitude_stderr);
  EXPECT_GT(fit.amplitude_stderr, 0.0);
  EXPECT_NEAR(fit.frequency_mhz, 3.7, 0.02);
  EXPECT_NEAR(fit.phase_rad, -1.1, 0.05);
}

TEST(Sinusoid, SharedModeSignsAmplitude) {
  std::vector<double> t, v;
  for (int i = 0; i < 35; ++i) {
    t.push_back(i / 34.0);
    v.push_back(-0.1 * std::cos(2 * kPi * 4.5 * t.back() + 0.2));
  }
  const auto fit = fit_sinusoid(t, v, SharedOscillation{4.5, 0.2});
  EXPECT_NEAR(fit.amplitude, 0.2, 1e-12);
  EXPECT_NEAR(fit.signed_amplitude(0.2), -0.2, 1e-12);
}

TEST(Sinusoid, ErrorPaths) {
  std::vector<double> t{0, 1, 2, 3, 4, 5, 6};
  std::vector<double> v(7, 1.0);
  EXPECT_THROW(fit_sinusoid(t, v), FitError);
  std::vector<double> t2, v2;
  for (int i = 0; i < 20; ++i) {
    t2.push_back(i * 0.01);
    v2.push_back(std::cos(2 * kPi * 4.5 * t2.back()));
  }
  EXPECT_THROW(fit_sinusoid(t2, v2, SharedOscillation{4.5, 0.0}), FitError);
}

TEST(FullTrace, AgreesWithTwoPointWhenNoiseless) {
  ProtocolConfig cfg;
  cfg.rabi_decay_us = 100.0;
  ReadoutModel ro;
  for (int polarity : {+1, -1}) {
    ro.polarity = polarity;
    Rng rng(1);
    DriftProcess drift(ro.drift, rng);
    const auto ref = fit_sinusoid(acquire_trace(hot(), true, cfg, ro, rng, drift));
    const auto sig = fit_sinusoid(acquire_trace(hot(), false, cfg, ro, rng, drift),
                                  SharedOscillation{ref.frequency_mhz, ref.phase_rad});
    const double full = full_trace_pe(sig, ref);
    const double two = *two_point_pe(acquire_cycle(hot(), cfg, ro, rng, drift));
    EXPECT_LT(std::abs(full - two) / two, 0.005);
  }
}

TEST(Aggregate, StandardErrorAndCounts) {
  const auto x = normal_samples(3000, 0.00055, 0.0215, 1);
  const auto s = aggregate(x);
  EXPECT_EQ(s.count(), 3000u);
  EXPECT_NEAR(s.stderr_mean, s.sigma_c / std::sqrt(3000.0), 1e-12 * s.stderr_mean);
  const std::vector<double> wide = normal_samples(3000, 0.0, 0.0215, 4);
  const auto w = aggregate(wide);
  EXPECT_NEAR(w.stderr_mean, 0.00039, 0.00002);
}

TEST(Aggregate, PopulationVersusSampleNormalization) {
  const std::vector<double> x{1.0, 2.0, 4.0, 7.0};
  const auto pop = aggregate(x);
  const auto smp = aggregate(x, AggregateOptions{.normalization = Normalization::sample});
  EXPECT_DOUBLE_EQ(pop.mean, 3.5);
  EXPECT_NEAR(pop.sigma_c, std::sqrt(21.0 / 4.0), 1e-14);
  EXPECT_NEAR(smp.sigma_c, std::sqrt(21.0 / 3.0), 1e-14);
}

TEST(Aggregate, SkewnessOracle) {
  const std::vector<double> x{0.0, 0.0, 0.0, 1.0};
  EXPECT_NEAR(aggregate(x).skewness, 2.0 / std::sqrt(3.0), 1e-13);
  std::vector<double> sym;
  for (double v : normal_samples(500, 0.3, 1.0, 2)) {
    sym.push_back(0.3 + (v - 0.3));
    sym.push_back(0.3 - (v - 0.3));
  }
  EXPECT_NEAR(aggregate(sym).skewness, 0.0, 1e-12);
}

TEST(Aggregate, ConstantSamples) {
  const std::vector<double> x(10, 0.25);
  const auto s = aggregate(x);
  EXPECT_EQ(s.sigma_c, 0.0);
  EXPECT_EQ(s.skewness, 0.0);
  EXPECT_FALSE(s.skewness_defined);
  EXPECT_FALSE(s.gaussian.has_value());
}

TEST(Aggregate, InvalidSamplesExcluded) {
  std::vector<PeSample> x{0.1, std::nullopt, 0.3, std::nullopt};
  const auto s = aggregate(x);
  EXPECT_EQ(s.count(), 2u);
  EXPECT_EQ(s.invalid_count, 2u);
  EXPECT_DOUBLE_EQ(s.mean, 0.2);
  std::vector<PeSample> none{std::nullopt, std::nullopt};
  EXPECT_THROW(aggregate(none), std::invalid_argument);
  const std::vector<double> one{0.1};
  EXPECT_THROW(aggregate(one), std::invalid_argument);
}

TEST(Aggregate, SkewnessOfGaussianSamplesIsSmall) {
  int within = 0;
  const int replicates = 300;
  for (int r = 0; r < replicates; ++r) {
    const auto x = normal_samples(3000, 0.001, 0.021, 1000 + r);
    if (std::abs(aggregate(x, AggregateOptions{.fit_gaussian = false}).skewness) < 0.15) ++within;
  }
  EXPECT_GE(within, int(0.99 * replicates));
}

TEST(Histogram, BinsOnFixedGrid) {
  const std::vector<double> x{-0.0123, 0.0, 0.0049, 0.0051, 0.031};
  const auto h = make_histogram(x, 0.005);
  const double k = h.first_edge / h.bin_width;
  EXPECT_NEAR(k, std::round(k), 1e-9);
  EXPECT_EQ(h.total(), x.size());
  EXPECT_THROW(make_histogram(x, 0.0), std::invalid_argument);
}

TEST(GaussianFit, MatchesGeneratingDistribution) {
  const auto x = normal_samples(3000, 0.00055, 0.0215, 77);
  const auto g = histogram_gaussian_fit(x);
  EXPECT_NEAR(g.mean, 0.00055, 3 * 0.0215 / std::sqrt(3000.0));
  EXPECT_NEAR(g.stdev, 0.0215, 0.1 * 0.0215);
}

TEST(GaussianFit, SymmetricInputCentersOnBoundary) {
  std::vector<double> x;
  const std::vector<std::pair<double, int>> shape{{0.0025, 40}, {0.0075, 25}, {0.0125, 8}};
  for (const auto& [offset, n] : shape) {
    for (int i = 0; i < n; ++i) {
      x.push_back(0.010 + offset);
      x.push_back(0.010 - offset);
    }
  }
  const auto g = histogram_gaussian_fit(x);
  EXPECT_NEAR(g.mean, 0.010, 1e-9);
}

TEST(GaussianFit, ErrorPaths) {
  EXPECT_THROW(histogram_gaussian_fit(normal_samples(49, 0.0, 0.02, 3)), std::invalid_argument);
  std::vector<double> narrow;
  for (int i = 0; i < 100; ++i) narrow.push_back(i % 2 ? 0.001 : 0.006);
  EXPECT_THROW(histogram_gaussian_fit(narrow), FitError);
}

TEST(Calibration, TwoPointsExactLine) {
  const std::vector<CalibrationPoint> p{{0.01, 0.0002 + 0.998 * 0.01}, {0.05, 0.0002 + 0.998 * 0.05}};
  const auto f = calibration_fit(p);
  EXPECT_NEAR(f.slope, 0.998, 1e-12);
  EXPECT_NEAR(f.intercept, 0.0002, 1e-14);
  EXPECT_EQ(f.dof, 0u);
  EXPECT_TRUE(std::isinf(f.ci95.first) && std::isinf(f.ci95.second));
}

TEST(Calibration, OlsOracle) {
  const std::vector<CalibrationPoint> p{{1, 2}, {2, 3}, {3, 5}};
  const auto f = calibration_fit(p);
  EXPECT_NEAR(f.slope, 1.5, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(f.slope_stderr, std::sqrt(1.0 / 12.0), 1e-12);
  EXPECT_NEAR(f.intercept_stderr, std::sqrt(7.0 / 18.0), 1e-12);
  EXPECT_NEAR(f.ci95.first, 1.0 / 3.0 - 1.96 * std::sqrt(7.0 / 18.0), 1e-12);
  EXPECT_EQ(f.dof, 1u);
}

TEST(Calibration, UnitSlopeMode) {
  const std::vector<CalibrationPoint> p{{0.01, 0.0108}, {0.02, 0.0205}, {0.03, 0.0307}};
  const auto f = calibration_fit(p, CalibrationMode::unit_slope);
  EXPECT_EQ(f.slope, 1.0);
  EXPECT_NEAR(f.intercept, (0.0008 + 0.0005 + 0.0007) / 3.0, 1e-15);
  EXPECT_EQ(f.dof, 2u);
}

TEST(Calibration, RankDeficientThrows) {
  const std::vector<CalibrationPoint> same{{0.01, 0.01}, {0.01, 0.02}};
  EXPECT_THROW(calibration_fit(same), std::invalid_argument);
  const std::vector<CalibrationPoint> one{{0.01, 0.01}};
  EXPECT_THROW(calibration_fit(one), std::invalid_argument);
}
