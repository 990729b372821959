#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "qtherm/config.hpp"
#include "qtherm/report.hpp"
#include "qtherm/runner.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
  cmd->add_option("-s,--seed", opts.seed, "Master RNG seed (overrides the config)");
  cmd->add_option("-o,--out", opts.out_dir, "Output directory (overrides the config)");
  cmd->add_option("-j,--jobs", opts.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

qtherm::ExperimentConfig resolve(const CommonOptions& opts) {
  qtherm::ExperimentConfig cfg = opts.config_path.empty() ? qtherm::default_config()
                                                          : qtherm::load_config(opts.config_path);
  if (opts.seed) cfg.seed = opts.seed;
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (opts.jobs) cfg.jobs = *opts.jobs;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transmon excited-state population and effective temperature toolkit"};
  app.require_subcommand(1);

  CommonOptions sweep_opts, cal_opts, qp_opts, trace_opts;
  auto* sweep = app.add_subcommand("sweep", "Simulate the two-point protocol over a bath-temperature sweep");
  auto* cal = app.add_subcommand("calibrate", "Pumped-population calibration of the estimator");
  auto* qp = app.add_subcommand("qp", "Quasiparticle density and relaxation implied by a residual P_e");
  auto* trace = app.add_subcommand("trace", "Full e-f Rabi traces with sinusoid fits at one temperature");
  add_common(sweep, sweep_opts);
  add_common(cal, cal_opts);
  add_common(qp, qp_opts);
  add_common(trace, trace_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) {
      const auto cfg = resolve(sweep_opts);
      const auto result = qtherm::run_temperature_sweep(cfg);
      qtherm::write_sweep_outputs(cfg.out_dir, result, cfg);
      qtherm::write_summary(std::cout, result, cfg);
    } else if (*cal) {
      const auto cfg = resolve(cal_opts);
      const auto result = qtherm::run_calibration(cfg);
      qtherm::write_calibration_outputs(cfg.out_dir, result);
      const auto& f = result.fit;
      std::cout << fmt::format("intercept = {:.4f}% [{:.4f}%, {:.4f}%] (injected {:.4f}%)\n", 100 * f.intercept,
                               100 * f.ci95.first, 100 * f.ci95.second, 100 * result.injected_pe);
      std::cout << fmt::format("slope = {:.5f} +/- {:.5f} (ideal {:.5f})\n", f.slope, f.slope_stderr,
                               result.expected_slope);
      std::cout << fmt::format("P_e left after one repetition at k = {:.3f}: {:.3g}\n", result.worst_case_k,
                               result.residual_contamination);
    } else if (*qp) {
      auto opts = qp_opts;
      if (!opts.seed) opts.seed = 0;  // analytic, no randomness involved
      const auto cfg = resolve(opts);
      const auto report = qtherm::run_qp_analysis(cfg);
      qtherm::write_qp_outputs(cfg.out_dir, report);
      qtherm::write_qp_report(std::cout, report);
    } else if (*trace) {
      const auto cfg = resolve(trace_opts);
      const auto result = qtherm::run_trace(cfg);
      qtherm::write_trace_outputs(cfg.out_dir, result);
      std::cout << fmt::format("T = {} mK: P_e full trace = {:.4f}%, two-point (noiseless) = {:.4f}%, target = {:.4f}%\n",
                               result.temperature_mk, 100 * result.pe_full_trace, 100 * result.pe_two_point,
                               100 * result.target_pexp);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
