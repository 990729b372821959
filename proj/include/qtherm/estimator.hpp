#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qtherm/measurement_sim.hpp"

namespace qtherm {

/// Raised when a fit cannot produce a trustworthy result.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// offset + (amplitude/2) cos(2 pi f t + phase), amplitude peak-to-peak.
struct SinusoidFit {
  double amplitude = 0.0;  // >= 0
  double frequency_mhz = 0.0;
  double phase_rad = 0.0;  // in (-pi, pi]
  double offset = 0.0;
  double residual_rms = 0.0;
  double amplitude_stderr = 0.0;
  int iterations = 0;

  /// Amplitude signed by its alignment with a reference phase.
  double signed_amplitude(double reference_phase_rad) const;
};

struct SharedOscillation {
  double frequency_mhz;
  double phase_rad;
};

/// Least-squares sinusoid fit. Without `shared`, a coarse frequency grid
/// between 1.5 periods per trace and Nyquist is scanned, then refined by
/// Levenberg-Marquardt over (offset, quadratures, frequency). With `shared`,
/// frequency and phase are held and the fit is linear in (offset, amplitude).
/// Throws FitError on fewer than 8 points, a span under 1.5 periods or
/// non-convergence.
SinusoidFit fit_sinusoid(const RabiTrace& trace, std::optional<SharedOscillation> shared = std::nullopt);
SinusoidFit fit_sinusoid(std::span<const double> times_us, std::span<const double> values,
                         std::optional<SharedOscillation> shared = std::nullopt);

/// A_sig / (A_sig + A_ref) from fitted traces, with the signal amplitude
/// signed relative to the reference phase.
double full_trace_pe(const SinusoidFit& signal, const SinusoidFit& reference);

/// Per-cycle estimate; empty marks an invalid sample.
using PeSample = std::optional<double>;

/// (S2 - S1) / ((S2 - S1) + (R2 - R1)). Returns empty when the denominator
/// magnitude is at or below `min_denominator_v`, or within machine epsilon of
/// zero relative to the voltages involved. Negative results are kept.
PeSample two_point_pe(const CycleRecord& cycle, double min_denominator_v = 0.0);

enum class Normalization {
  population,  // 1/C
  sample,      // 1/(C-1)
};

struct Histogram {
  double bin_width = 0.0;
  double first_edge = 0.0;  // left edge of bin 0; edges are integer multiples of bin_width
  std::vector<std::size_t> counts;

  double center(std::size_t bin) const { return first_edge + (double(bin) + 0.5) * bin_width; }
  std::size_t total() const;
  std::size_t non_empty() const;
};

/// Bins on a fixed grid of multiples of bin_width.
Histogram make_histogram(std::span<const double> samples, double bin_width);

struct GaussianFit {
  double height = 0.0;
  double mean = 0.0;
  double stdev = 0.0;
};

struct SampleStats {
  std::vector<double> samples;  // valid P_e^(i) in acquisition order
  std::size_t invalid_count = 0;
  double mean = 0.0;
  double sigma_c = 0.0;
  double stderr_mean = 0.0;  // sigma_c / sqrt(C)
  double skewness = 0.0;
  bool skewness_defined = true;  // false when sigma_c == 0 (skewness reported as 0)
  Normalization normalization = Normalization::population;
  Histogram histogram;
  std::optional<GaussianFit> gaussian;

  std::size_t count() const { return samples.size(); }
};

struct AggregateOptions {
  Normalization normalization = Normalization::population;
  double bin_width = 0.005;
  /// Attempt the histogram Gaussian fit (needs C >= 50 and 5 non-empty bins).
  bool fit_gaussian = true;
};

/// Mean, sigma_C, standard error and moment skewness mu3 / mu2^{3/2} of the
/// valid samples. Throws std::invalid_argument with fewer than two valid samples.
SampleStats aggregate(std::span<const PeSample> samples, const AggregateOptions& opts = {});
SampleStats aggregate(std::span<const double> samples, const AggregateOptions& opts = {});

/// Three-parameter Gaussian least-squares fit to the counts of a fixed-width
/// histogram. Throws std::invalid_argument for fewer than 50 samples and
/// FitError for fewer than 5 non-empty bins or a failed fit.
GaussianFit histogram_gaussian_fit(std::span<const double> samples, double bin_width = 0.005);

enum class CalibrationMode {
  free_slope,  // y = a x + b
  unit_slope,  // y = x + b
};

struct CalibrationPoint {
  double k;
  double pe_measured;
};

struct CalibrationFit {
  CalibrationMode mode = CalibrationMode::free_slope;
  double slope = 1.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
  double intercept_stderr = 0.0;
  std::pair<double, double> ci95{0.0, 0.0};
  std::size_t dof = 0;  // residual degrees of freedom; CI is unbounded at 0
};

/// Normal quantile used for the 95% intercept interval.
inline constexpr double kZ95 = 1.96;

/// Ordinary least squares of measured P_e^p on k. Requires at least two
/// distinct k (three for a finite interval in free-slope mode); throws
/// std::invalid_argument on a rank-deficient design.
CalibrationFit calibration_fit(std::span<const CalibrationPoint> points,
                               CalibrationMode mode = CalibrationMode::free_slope);

}  // namespace qtherm
