#include "qtherm/report.hpp"

#include <fstream>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace qtherm {

namespace {

std::string num(double v) { return fmt::format("{:.10g}", v); }

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::string pct(double v, int decimals = 3) { return fmt::format("{:.{}f}", 100.0 * v, decimals); }

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  }
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error(fmt::format("error while writing '{}'", path.string()));
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
}

}  // namespace

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "# units: mK,mK,mK,mK,count,count,count,fraction,fraction,fraction,1,fraction,fraction,"
         "fraction,fraction,fraction,fraction,count,V\n";
  out << "bath_mk,teff_mk,teff_minus_mk,teff_plus_mk,A,C,N,sigma_c,pe,stderr_pe,skewness,"
         "gauss_stdev,gauss_mean,true_pe,target_pexp,boltzmann_pe,boltzmann_pexp,invalid_cycles,sigma_t_v\n";
  for (const SweepRow& r : sweep.rows) {
    const auto& g = r.stats.gaussian;
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", num(r.bath_mk),
                       num(r.teff.teff_mk), num(r.teff.minus_mk), num(r.teff.plus_mk), r.averages, r.cycles,
                       r.total_averages, num(r.stats.sigma_c), num(r.stats.mean), num(r.stats.stderr_mean),
                       num(r.stats.skewness), g ? num(g->stdev) : "", g ? num(g->mean) : "", num(r.true_pe),
                       num(r.target_pexp), num(r.boltzmann_pe), num(r.boltzmann_pexp), r.stats.invalid_count,
                       num(r.sigma_t_v));
  }
}

void write_samples_csv(std::ostream& out, const std::vector<CycleRecord>& cycles, const ReadoutModel& readout) {
  out << "# units: count,V,V,V,V,fraction,bool\n";
  out << "cycle,r1_v,r2_v,s1_v,s2_v,pe_sample,valid\n";
  const double threshold = invalid_denominator_threshold(readout);
  for (const CycleRecord& c : cycles) {
    const PeSample s = two_point_pe(c, threshold);
    out << fmt::format("{},{},{},{},{},{},{}\n", c.cycle_index, num(c.r1), num(c.r2), num(c.s1), num(c.s2),
                       s ? num(*s) : "", s ? 1 : 0);
  }
}

void write_summary(std::ostream& out, const SweepResult& sweep, const ExperimentConfig& config) {
  out << "Excited-state population sweep (seed " << config.seed.value_or(0) << ")\n\n";
  out << fmt::format("{:>7} {:>20} {:>8} {:>8} {:>9} {:>8} {:>8} {:>8} {:>7} | {:>8} {:>8}\n", "Bath", "T_eff",
                     "A", "C", "N", "sigma_C", "P_e", "dP_e", "gamma1", "stdev", "mean");
  out << fmt::format("{:>7} {:>20} {:>8} {:>8} {:>9} {:>8} {:>8} {:>8} {:>7} | {:>8} {:>8}\n", "(mK)", "(mK)",
                     "", "", "", "(%)", "(%)", "(%)", "", "(%)", "(%)");
  for (const SweepRow& r : sweep.rows) {
    std::string teff = "-";
    if (r.teff.teff_mk) {
      teff = fmt::format("{:.1f} -{} +{}", *r.teff.teff_mk, r.teff.minus_mk ? fmt::format("{:.1f}", *r.teff.minus_mk) : "?",
                         r.teff.plus_mk ? fmt::format("{:.1f}", *r.teff.plus_mk) : "?");
    }
    const auto& g = r.stats.gaussian;
    out << fmt::format("{:>7.1f} {:>20} {:>8.1e} {:>8.1e} {:>9.2e} {:>8} {:>8} {:>8} {:>7.3f} | {:>8} {:>8}\n",
                       r.bath_mk, teff, double(r.averages), double(r.cycles), double(r.total_averages),
                       pct(r.stats.sigma_c, 2), pct(r.stats.mean), pct(r.stats.stderr_mean), r.stats.skewness,
                       g ? pct(g->stdev, 2) : "-", g ? pct(g->mean) : "-");
  }
  if (!config.metadata.empty()) {
    out << "\nmetadata:\n";
    for (const auto& [k, v] : config.metadata) out << "  " << k << " = " << v << "\n";
  }
}

void write_calibration_csv(std::ostream& out, const CalibrationResult& cal) {
  const auto& f = cal.fit;
  out << fmt::format("# fit: mode={} slope={} slope_stderr={} intercept={} intercept_stderr={} ci95_low={} "
                     "ci95_high={} dof={}\n",
                     f.mode == CalibrationMode::free_slope ? "free_slope" : "unit_slope", num(f.slope),
                     num(f.slope_stderr), num(f.intercept), num(f.intercept_stderr), num(f.ci95.first),
                     num(f.ci95.second), f.dof);
  out << fmt::format("# injected_pe={} expected_slope={} worst_case_k={} residual_after_repetition={}\n",
                     num(cal.injected_pe), num(cal.expected_slope), num(cal.worst_case_k),
                     num(cal.residual_contamination));
  out << "# units: fraction,fraction,fraction,count,fraction,fraction,fraction\n";
  out << "k,pe_measured,stderr_pe,C,pe_pumped,target_pexp,fit_line\n";
  for (const auto& r : cal.rows) {
    out << fmt::format("{},{},{},{},{},{},{}\n", num(r.k), num(r.pe_measured), num(r.stderr_pe), r.cycles,
                       num(r.pe_pumped), num(r.target_pexp), num(f.intercept + f.slope * r.k));
  }
}

void write_qp_report(std::ostream& out, const QpReport& r) {
  auto t1 = [](const QpRelaxation& rel) {
    return rel.t1_us ? fmt::format("{:.4g}", *rel.t1_us) : std::string("unbounded");
  };
  out << fmt::format("pe = {:.6g}\n", r.pe);
  out << fmt::format("gap_uev = {:.6g}\n", r.gap_uev);
  out << fmt::format("ege_ghz = {:.6g}\n", r.ege_ghz);
  out << fmt::format("rn_kohm = {:.6g}\n", r.rn_kohm);
  out << fmt::format("capacitance_ff = {:.6g}\n", r.capacitance_ff);
  out << fmt::format("density_ratio = {:.6g}\n", r.density_ratio);
  out << fmt::format("gamma_qp_khz = {:.6g}\n", r.relaxation.gamma_khz);
  out << fmt::format("t1_qp_us = {}\n", t1(r.relaxation));
  out << fmt::format("density_ratio_rounded = {:.2g}\n", r.density_ratio_rounded);
  out << fmt::format("gamma_qp_rounded_khz = {:.6g}\n", r.relaxation_rounded.gamma_khz);
  out << fmt::format("t1_qp_rounded_us = {}\n", t1(r.relaxation_rounded));
  out << fmt::format("measured_t1_us = {:.6g}\n", r.measured_t1_us);
  out << fmt::format("t1_qp_over_measured = {}\n", r.t1_ratio ? fmt::format("{:.4g}", *r.t1_ratio) : "unbounded");
}

void write_trace_csv(std::ostream& out, const TraceResult& tr) {
  const auto& rf = tr.reference_fit;
  const auto& sf = tr.signal_fit;
  out << fmt::format("# temperature_mk={} target_pexp={} pe_full_trace={} pe_two_point_noiseless={}\n",
                     num(tr.temperature_mk), num(tr.target_pexp), num(tr.pe_full_trace), num(tr.pe_two_point));
  out << fmt::format("# reference_fit: amplitude={} stderr={} frequency_mhz={} phase_rad={} offset={}\n",
                     num(rf.amplitude), num(rf.amplitude_stderr), num(rf.frequency_mhz), num(rf.phase_rad),
                     num(rf.offset));
  out << fmt::format("# signal_fit: amplitude={} stderr={} frequency_mhz={} phase_rad={} offset={}\n",
                     num(sf.amplitude), num(sf.amplitude_stderr), num(sf.frequency_mhz), num(sf.phase_rad),
                     num(sf.offset));
  out << "# units: us,V,V\n";
  out << "time_us,reference_v,signal_v\n";
  for (std::size_t i = 0; i < tr.reference.times_us.size(); ++i) {
    out << fmt::format("{},{},{}\n", num(tr.reference.times_us[i]), num(tr.reference.voltages_v[i]),
                       num(tr.signal.voltages_v[i]));
  }
}

std::string samples_file_name(double temperature_mk) {
  return fmt::format("samples_{:g}mK.csv", temperature_mk);
}

void write_sweep_outputs(const std::filesystem::path& dir, const SweepResult& sweep, const ExperimentConfig& config) {
  ensure_dir(dir);
  {
    const auto path = dir / "sweep.csv";
    auto out = open_output(path);
    write_sweep_csv(out, sweep);
    finish(out, path);
  }
  for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
    const auto path = dir / samples_file_name(sweep.rows[i].bath_mk);
    auto out = open_output(path);
    write_samples_csv(out, sweep.cycles[i], config.readout);
    finish(out, path);
  }
  const auto path = dir / "summary.txt";
  auto out = open_output(path);
  write_summary(out, sweep, config);
  finish(out, path);
}

void write_calibration_outputs(const std::filesystem::path& dir, const CalibrationResult& cal) {
  ensure_dir(dir);
  const auto path = dir / "calibration.csv";
  auto out = open_output(path);
  write_calibration_csv(out, cal);
  finish(out, path);
}

void write_qp_outputs(const std::filesystem::path& dir, const QpReport& report) {
  ensure_dir(dir);
  const auto path = dir / "qp_report.txt";
  auto out = open_output(path);
  write_qp_report(out, report);
  finish(out, path);
}

void write_trace_outputs(const std::filesystem::path& dir, const TraceResult& trace) {
  ensure_dir(dir);
  const auto path = dir / fmt::format("trace_{:g}mK.csv", trace.temperature_mk);
  auto out = open_output(path);
  write_trace_csv(out, trace);
  finish(out, path);
}

}  // namespace qtherm
