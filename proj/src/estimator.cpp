#include "qtherm/estimator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "detail/levenberg_marquardt.hpp"
#include "qtherm/constants.hpp"

namespace qtherm {

namespace {

constexpr double kTwoPi = 2.0 * constants::pi;
constexpr std::size_t kMinTracePoints = 8;
constexpr double kMinPeriods = 1.5;
constexpr int kGridOversampling = 8;
constexpr std::size_t kMinGaussianSamples = 50;
constexpr std::size_t kMinGaussianBins = 5;
constexpr int kGaussianReweightPasses = 2;

double wrap_phase(double phi) {
  phi = std::remainder(phi, kTwoPi);
  return phi <= -constants::pi ? phi + kTwoPi : phi;
}

struct LinearSolution {
  Eigen::Vector3d coef;  // offset, cos quadrature, sin quadrature
  double rss;
};

LinearSolution quadrature_fit(const Eigen::VectorXd& t, const Eigen::VectorXd& y, double f) {
  const Eigen::Index n = t.size();
  Eigen::MatrixXd X(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double arg = kTwoPi * f * t[i];
    X(i, 0) = 1.0;
    X(i, 1) = std::cos(arg);
    X(i, 2) = std::sin(arg);
  }
  const Eigen::Vector3d coef = X.colPivHouseholderQr().solve(y);
  return {coef, (y - X * coef).squaredNorm()};
}

void check_trace_shape(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size()) {
    throw FitError("fit_sinusoid: times and values differ in length");
  }
  if (t.size() < kMinTracePoints) {
    throw FitError(fmt::format("fit_sinusoid: {} points, need at least {}", t.size(), kMinTracePoints));
  }
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) throw FitError("fit_sinusoid: times must be strictly increasing");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw FitError("fit_sinusoid: non-finite sample");
  }
}

SinusoidFit fit_shared(const Eigen::VectorXd& t, const Eigen::VectorXd& y, SharedOscillation shared) {
  const Eigen::Index n = t.size();
  const double span = t[n - 1] - t[0];
  if (span * shared.frequency_mhz < kMinPeriods) {
    throw FitError("fit_sinusoid: trace spans fewer than 1.5 periods of the shared frequency");
  }
  Eigen::MatrixXd X(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = std::cos(kTwoPi * shared.frequency_mhz * t[i] + shared.phase_rad);
  }
  const Eigen::Vector2d beta = X.colPivHouseholderQr().solve(y);
  const double rss = (y - X * beta).squaredNorm();
  const double sigma2 = rss / double(n - 2);
  const Eigen::Matrix2d cov = sigma2 * (X.transpose() * X).inverse();

  SinusoidFit fit;
  fit.offset = beta[0];
  fit.amplitude = 2.0 * std::abs(beta[1]);
  fit.amplitude_stderr = 2.0 * std::sqrt(std::max(cov(1, 1), 0.0));
  fit.frequency_mhz = shared.frequency_mhz;
  fit.phase_rad = wrap_phase(beta[1] >= 0.0 ? shared.phase_rad : shared.phase_rad + constants::pi);
  fit.residual_rms = std::sqrt(rss / double(n));
  return fit;
}

SinusoidFit fit_free(const Eigen::VectorXd& t, const Eigen::VectorXd& y) {
  const Eigen::Index n = t.size();
  const double span = t[n - 1] - t[0];
  const double f_lo = kMinPeriods / span;
  const double f_hi = double(n - 1) / (2.0 * span);
  if (!(f_hi > f_lo)) {
    throw FitError("fit_sinusoid: too few points to resolve 1.5 periods below Nyquist");
  }

  // Coarse grid at 1/8 of the Rayleigh resolution.
  const double step = 1.0 / (kGridOversampling * span);
  double best_f = f_lo;
  LinearSolution best = quadrature_fit(t, y, f_lo);
  for (double f = f_lo + step; f <= f_hi + 0.5 * step; f += step) {
    const double fc = std::min(f, f_hi);
    LinearSolution s = quadrature_fit(t, y, fc);
    if (s.rss < best.rss) {
      best = s;
      best_f = fc;
    }
  }

  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double arg = kTwoPi * p[3] * t[i];
      r[i] = p[0] + p[1] * std::cos(arg) + p[2] * std::sin(arg) - y[i];
    }
    return r;
  };
  auto jacobian = [&](const Eigen::VectorXd& p) {
    Eigen::MatrixXd J(n, 4);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double arg = kTwoPi * p[3] * t[i];
      const double c = std::cos(arg);
      const double s = std::sin(arg);
      J(i, 0) = 1.0;
      J(i, 1) = c;
      J(i, 2) = s;
      J(i, 3) = kTwoPi * t[i] * (-p[1] * s + p[2] * c);
    }
    return J;
  };

  Eigen::VectorXd x0(4);
  x0 << best.coef[0], best.coef[1], best.coef[2], best_f;
  const detail::LmResult lm = detail::levenberg_marquardt(residuals, jacobian, x0);
  if (!lm.converged || !lm.params.allFinite()) {
    throw FitError(fmt::format(
        "fit_sinusoid: no convergence after {} iterations (rss {:.3e}, f {:.6g} MHz, grid start {:.6g} MHz)",
        lm.iterations, lm.cost, lm.params[3], best_f));
  }
  const Eigen::VectorXd& p = lm.params;
  if (p[3] * span < kMinPeriods * (1.0 - 1e-9)) {
    throw FitError(fmt::format("fit_sinusoid: fitted frequency {:.6g} MHz spans fewer than 1.5 periods",
                               p[3]));
  }

  SinusoidFit fit;
  const double half_amp = std::hypot(p[1], p[2]);
  fit.offset = p[0];
  fit.amplitude = 2.0 * half_amp;
  fit.frequency_mhz = p[3];
  fit.phase_rad = wrap_phase(std::atan2(-p[2], p[1]));
  fit.residual_rms = std::sqrt(lm.cost / double(n));
  fit.iterations = lm.iterations;

  const double sigma2 = lm.cost / double(n - 4);
  const Eigen::MatrixXd JtJ = lm.jacobian.transpose() * lm.jacobian;
  const Eigen::MatrixXd cov = sigma2 * JtJ.completeOrthogonalDecomposition().pseudoInverse();
  double var_half;
  if (half_amp > 0.0) {
    const double gc = p[1] / half_amp;
    const double gs = p[2] / half_amp;
    var_half = gc * gc * cov(1, 1) + 2.0 * gc * gs * cov(1, 2) + gs * gs * cov(2, 2);
  } else {
    var_half = 0.5 * (cov(1, 1) + cov(2, 2));
  }
  fit.amplitude_stderr = 2.0 * std::sqrt(std::max(var_half, 0.0));
  return fit;
}

double moment_sum(std::span<const double> x, double mean, int power) {
  double acc = 0.0;
  for (double v : x) acc += std::pow(v - mean, power);
  return acc;
}

}  // namespace

double SinusoidFit::signed_amplitude(double reference_phase_rad) const {
  return amplitude * std::cos(phase_rad - reference_phase_rad);
}

SinusoidFit fit_sinusoid(std::span<const double> times_us, std::span<const double> values,
                         std::optional<SharedOscillation> shared) {
  check_trace_shape(times_us, values);
  const auto n = static_cast<Eigen::Index>(times_us.size());
  const Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(times_us.data(), n);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(values.data(), n);
  return shared ? fit_shared(t, y, *shared) : fit_free(t, y);
}

SinusoidFit fit_sinusoid(const RabiTrace& trace, std::optional<SharedOscillation> shared) {
  return fit_sinusoid(trace.times_us, trace.voltages_v, shared);
}

double full_trace_pe(const SinusoidFit& signal, const SinusoidFit& reference) {
  const double sig = signal.signed_amplitude(reference.phase_rad);
  return sig / (sig + reference.amplitude);
}

PeSample two_point_pe(const CycleRecord& cycle, double min_denominator_v) {
  const double sig = cycle.signal_amplitude();
  const double ref = cycle.reference_amplitude();
  const double den = sig + ref;
  const double scale = std::max({std::abs(cycle.r1), std::abs(cycle.r2), std::abs(cycle.s1),
                                 std::abs(cycle.s2)});
  if (!std::isfinite(den) || std::abs(den) <= min_denominator_v ||
      std::abs(den) <= 4.0 * std::numeric_limits<double>::epsilon() * scale) {
    return std::nullopt;
  }
  return sig / den;
}

std::size_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

std::size_t Histogram::non_empty() const {
  return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
}

Histogram make_histogram(std::span<const double> samples, double bin_width) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("make_histogram: bin width must be positive");
  Histogram h;
  h.bin_width = bin_width;
  if (samples.empty()) return h;
  auto index = [&](double x) { return static_cast<long long>(std::floor(x / bin_width)); };
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const long long lo = index(*lo_it);
  const long long hi = index(*hi_it);
  h.first_edge = double(lo) * bin_width;
  h.counts.assign(static_cast<std::size_t>(hi - lo + 1), 0);
  for (double x : samples) ++h.counts[static_cast<std::size_t>(index(x) - lo)];
  return h;
}

GaussianFit histogram_gaussian_fit(std::span<const double> samples, double bin_width) {
  if (samples.size() < kMinGaussianSamples) {
    throw std::invalid_argument(fmt::format("histogram_gaussian_fit: {} samples, need at least {}",
                                            samples.size(), kMinGaussianSamples));
  }
  const Histogram h = make_histogram(samples, bin_width);
  if (h.non_empty() < kMinGaussianBins) {
    throw FitError(fmt::format("histogram_gaussian_fit: {} non-empty bins, need at least {}", h.non_empty(),
                               kMinGaussianBins));
  }

  const auto nb = static_cast<Eigen::Index>(h.counts.size());
  Eigen::VectorXd x(nb);
  Eigen::VectorXd y(nb);
  for (Eigen::Index i = 0; i < nb; ++i) {
    x[i] = h.center(static_cast<std::size_t>(i));
    y[i] = double(h.counts[static_cast<std::size_t>(i)]);
  }

  const double n = double(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  const double sd = std::max(std::sqrt(moment_sum(samples, mean, 2) / n), 0.5 * bin_width);

  // Counts are Poisson: after an unweighted pass, reweight by the fitted
  // model (Pearson weights) so sparse tail bins do not dominate.
  Eigen::VectorXd w = Eigen::VectorXd::Ones(nb);
  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(nb);
    for (Eigen::Index i = 0; i < nb; ++i) {
      const double z = (x[i] - p[1]) / p[2];
      r[i] = w[i] * (p[0] * std::exp(-0.5 * z * z) - y[i]);
    }
    return r;
  };
  auto jacobian = [&](const Eigen::VectorXd& p) {
    Eigen::MatrixXd J(nb, 3);
    for (Eigen::Index i = 0; i < nb; ++i) {
      const double z = (x[i] - p[1]) / p[2];
      const double g = std::exp(-0.5 * z * z);
      J(i, 0) = w[i] * g;
      J(i, 1) = w[i] * p[0] * g * z / p[2];
      J(i, 2) = w[i] * p[0] * g * z * z / p[2];
    }
    return J;
  };

  Eigen::VectorXd p0(3);
  p0 << n * bin_width / (sd * std::sqrt(2.0 * constants::pi)), mean, sd;
  detail::LmResult lm = detail::levenberg_marquardt(residuals, jacobian, p0);
  for (int pass = 0; pass < kGaussianReweightPasses && lm.converged && lm.params.allFinite(); ++pass) {
    for (Eigen::Index i = 0; i < nb; ++i) {
      const double z = (x[i] - lm.params[1]) / lm.params[2];
      w[i] = 1.0 / std::sqrt(std::max(lm.params[0] * std::exp(-0.5 * z * z), 1.0));
    }
    lm = detail::levenberg_marquardt(residuals, jacobian, lm.params);
  }
  if (!lm.converged || !lm.params.allFinite() || lm.params[2] == 0.0) {
    throw FitError(fmt::format("histogram_gaussian_fit: no convergence after {} iterations", lm.iterations));
  }
  return GaussianFit{lm.params[0], lm.params[1], std::abs(lm.params[2])};
}

SampleStats aggregate(std::span<const PeSample> samples, const AggregateOptions& opts) {
  std::vector<double> valid;
  valid.reserve(samples.size());
  for (const PeSample& s : samples) {
    if (s) valid.push_back(*s);
  }
  const std::size_t invalid = samples.size() - valid.size();
  if (valid.empty()) {
    throw std::invalid_argument("aggregate: all samples are invalid");
  }
  SampleStats stats = aggregate(std::span<const double>(valid), opts);
  stats.invalid_count = invalid;
  return stats;
}

SampleStats aggregate(std::span<const double> samples, const AggregateOptions& opts) {
  if (samples.size() < 2) {
    throw std::invalid_argument("aggregate: need at least two valid samples");
  }
  SampleStats st;
  st.samples.assign(samples.begin(), samples.end());
  st.normalization = opts.normalization;
  const double c = double(samples.size());
  st.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / c;

  const bool constant = std::all_of(samples.begin(), samples.end(), [&](double v) { return v == samples[0]; });
  const double mu2 = constant ? 0.0 : moment_sum(samples, st.mean, 2) / c;
  const double mu3 = constant ? 0.0 : moment_sum(samples, st.mean, 3) / c;

  st.sigma_c = opts.normalization == Normalization::population ? std::sqrt(mu2) : std::sqrt(mu2 * c / (c - 1.0));
  st.stderr_mean = st.sigma_c / std::sqrt(c);
  if (mu2 > 0.0) {
    st.skewness = mu3 / std::pow(mu2, 1.5);
  } else {
    st.skewness = 0.0;
    st.skewness_defined = false;
  }

  st.histogram = make_histogram(samples, opts.bin_width);
  if (opts.fit_gaussian && samples.size() >= kMinGaussianSamples && st.histogram.non_empty() >= kMinGaussianBins) {
    try {
      st.gaussian = histogram_gaussian_fit(samples, opts.bin_width);
    } catch (const FitError&) {
      st.gaussian.reset();
    }
  }
  return st;
}

CalibrationFit calibration_fit(std::span<const CalibrationPoint> points, CalibrationMode mode) {
  const std::size_t n = points.size();
  if (n < 2) {
    throw std::invalid_argument("calibration_fit: need at least two points");
  }
  const double nd = double(n);
  double kbar = 0.0;
  double ybar = 0.0;
  for (const auto& p : points) {
    if (!std::isfinite(p.k) || !std::isfinite(p.pe_measured)) {
      throw std::invalid_argument("calibration_fit: non-finite point");
    }
    kbar += p.k;
    ybar += p.pe_measured;
  }
  kbar /= nd;
  ybar /= nd;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& p : points) {
    sxx += (p.k - kbar) * (p.k - kbar);
    sxy += (p.k - kbar) * (p.pe_measured - ybar);
  }
  if (!(sxx > 0.0)) {
    throw std::invalid_argument("calibration_fit: rank-deficient design (all k identical)");
  }

  CalibrationFit fit;
  fit.mode = mode;
  double rss = 0.0;
  if (mode == CalibrationMode::free_slope) {
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * kbar;
    for (const auto& p : points) {
      const double r = p.pe_measured - (fit.intercept + fit.slope * p.k);
      rss += r * r;
    }
    fit.dof = n - 2;
  } else {
    fit.slope = 1.0;
    fit.intercept = ybar - kbar;
    for (const auto& p : points) {
      const double r = p.pe_measured - p.k - fit.intercept;
      rss += r * r;
    }
    fit.dof = n - 1;
  }

  if (fit.dof == 0) {
    const double inf = std::numeric_limits<double>::infinity();
    fit.intercept_stderr = inf;
    fit.slope_stderr = inf;
    fit.ci95 = {-inf, inf};
    return fit;
  }
  const double s = std::sqrt(rss / double(fit.dof));
  if (mode == CalibrationMode::free_slope) {
    fit.intercept_stderr = s * std::sqrt(1.0 / nd + kbar * kbar / sxx);
    fit.slope_stderr = s / std::sqrt(sxx);
  } else {
    fit.intercept_stderr = s / std::sqrt(nd);
    fit.slope_stderr = 0.0;
  }
  fit.ci95 = {fit.intercept - kZ95 * fit.intercept_stderr, fit.intercept + kZ95 * fit.intercept_stderr};
  return fit;
}

}  // namespace qtherm
