#include "qtherm/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace qtherm {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) {
    throw ConfigError(fmt::format("config: section '{}' must be an object", section));
  }
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) {
      throw ConfigError(fmt::format("config: unknown key '{}{}'", section.empty() ? "" : section + ".", key));
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& section) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config: bad value for '{}.{}': {}", section, key, e.what()));
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, std::optional<T>& out, const std::string& section) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  T v{};
  read(obj, key, v, section);
  out = v;
}

// Scalar or list, for per-set-point values.
void read_int_list(const json& obj, const char* key, std::vector<int>& out, const std::string& section) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (v.is_number_integer()) {
    out = {v.get<int>()};
  } else {
    read(obj, key, out, section);
  }
}

DriftKind parse_drift_kind(const std::string& s) {
  if (s == "none") return DriftKind::none;
  if (s == "ou" || s == "ornstein_uhlenbeck") return DriftKind::ornstein_uhlenbeck;
  if (s == "linear") return DriftKind::linear;
  throw ConfigError("config: readout.drift.kind must be 'none', 'ou' or 'linear'");
}

}  // namespace

std::pair<int, int> default_counts(double temperature_mk) {
  constexpr int kAverages = 5000;
  if (temperature_mk < 32.5) return {kAverages, 3000};
  if (temperature_mk < 47.5) return {kAverages, 1500};
  return {kAverages, 750};
}

std::vector<double> default_calibration_k() {
  std::vector<double> k;
  for (int i = 1; i <= 25; ++i) k.push_back(0.002 * i);
  return k;
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.readout.a0_v = 1e-3;
  c.readout.baseline_v = 5e-3;
  c.readout.drift.kind = DriftKind::ornstein_uhlenbeck;
  c.readout.drift.amplitude_v = 5e-6;
  c.readout.drift.correlation_time_s = 10.0;
  c.target_sigma_c = 0.021;
  c.calibration.k_values = default_calibration_k();
  c.protocol.t1_us = c.t1_us;
  return c;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config: parse error: {}", e.what()));
  }
  reject_unknown(doc, "", {"seed", "device", "ladder", "protocol", "readout", "sweep", "calibration", "qp",
                           "trace", "output", "jobs", "metadata"});

  ExperimentConfig c = default_config();
  read_opt(doc, "seed", c.seed, "");
  read(doc, "jobs", c.jobs, "");

  if (doc.contains("device")) {
    const json& d = doc["device"];
    reject_unknown(d, "device", {"ej_ghz", "ec_ghz", "gap_uev", "t1_us"});
    read(d, "ej_ghz", c.ej_ghz, "device");
    read(d, "ec_ghz", c.ec_ghz, "device");
    read(d, "gap_uev", c.gap_uev, "device");
    read(d, "t1_us", c.t1_us, "device");
  }
  c.protocol.t1_us = c.t1_us;

  if (doc.contains("ladder")) {
    const json& l = doc["ladder"];
    reject_unknown(l, "ladder", {"transitions_ghz", "from_device", "n_levels"});
    read(l, "transitions_ghz", c.ladder.transitions_ghz, "ladder");
    read(l, "from_device", c.ladder.from_device, "ladder");
    read(l, "n_levels", c.ladder.n_levels, "ladder");
  }

  if (doc.contains("protocol")) {
    const json& p = doc["protocol"];
    reject_unknown(p, "protocol", {"rabi_freq_mhz", "rabi_decay_us", "trace_duration_us", "trace_points",
                                   "averages_per_point", "cycles", "repetition_period_us", "order"});
    read(p, "rabi_freq_mhz", c.protocol.rabi_freq_mhz, "protocol");
    if (p.contains("rabi_decay_us") && p["rabi_decay_us"].is_null()) {
      c.protocol.rabi_decay_us = std::numeric_limits<double>::infinity();
    } else {
      read(p, "rabi_decay_us", c.protocol.rabi_decay_us, "protocol");
    }
    read(p, "trace_duration_us", c.protocol.trace_duration_us, "protocol");
    read(p, "trace_points", c.protocol.trace_points, "protocol");
    read(p, "averages_per_point", c.protocol.averages_per_point, "protocol");
    read(p, "cycles", c.protocol.cycles, "protocol");
    read(p, "repetition_period_us", c.protocol.repetition_period_us, "protocol");
    std::string order = "interleaved";
    read(p, "order", order, "protocol");
    if (order == "interleaved") {
      c.protocol.order = AcquisitionOrder::interleaved;
    } else if (order == "blocked") {
      c.protocol.order = AcquisitionOrder::blocked;
    } else {
      throw ConfigError("config: protocol.order must be 'interleaved' or 'blocked'");
    }
  }

  if (doc.contains("readout")) {
    const json& r = doc["readout"];
    reject_unknown(r, "readout", {"a0_v", "baseline_v", "sigma_t_v", "target_sigma_c", "polarity", "drift"});
    read(r, "a0_v", c.readout.a0_v, "readout");
    read(r, "baseline_v", c.readout.baseline_v, "readout");
    if (r.contains("sigma_t_v") && r.contains("target_sigma_c")) {
      throw ConfigError("config: give either readout.sigma_t_v or readout.target_sigma_c, not both");
    }
    if (r.contains("sigma_t_v")) {
      read(r, "sigma_t_v", c.readout.sigma_t_v, "readout");
      c.target_sigma_c.reset();
    }
    read_opt(r, "target_sigma_c", c.target_sigma_c, "readout");
    if (r.contains("polarity")) {
      const std::string pol = r["polarity"].is_string() ? r["polarity"].get<std::string>() : "";
      if (pol == "bright") {
        c.readout.polarity = +1;
      } else if (pol == "dark") {
        c.readout.polarity = -1;
      } else {
        throw ConfigError("config: readout.polarity must be 'bright' or 'dark'");
      }
    }
    if (r.contains("drift")) {
      const json& d = r["drift"];
      reject_unknown(d, "readout.drift", {"kind", "amplitude_v", "correlation_time_s", "slope_v_per_s"});
      std::string kind = "none";
      read(d, "kind", kind, "readout.drift");
      c.readout.drift.kind = parse_drift_kind(kind);
      read(d, "amplitude_v", c.readout.drift.amplitude_v, "readout.drift");
      read(d, "correlation_time_s", c.readout.drift.correlation_time_s, "readout.drift");
      read(d, "slope_v_per_s", c.readout.drift.slope_v_per_s, "readout.drift");
    }
  }

  if (doc.contains("sweep")) {
    const json& s = doc["sweep"];
    reject_unknown(s, "sweep", {"temperatures_mk", "averages_per_point", "cycles", "residual_pe"});
    read(s, "temperatures_mk", c.sweep.temperatures_mk, "sweep");
    read_int_list(s, "averages_per_point", c.sweep.averages_per_point, "sweep");
    read_int_list(s, "cycles", c.sweep.cycles, "sweep");
    read(s, "residual_pe", c.sweep.residual_pe, "sweep");
  }

  if (doc.contains("calibration")) {
    const json& s = doc["calibration"];
    reject_unknown(s, "calibration", {"temperature_mk", "residual_pe", "k_values", "cycles", "mode"});
    read(s, "temperature_mk", c.calibration.temperature_mk, "calibration");
    read(s, "residual_pe", c.calibration.residual_pe, "calibration");
    read(s, "k_values", c.calibration.k_values, "calibration");
    read(s, "cycles", c.calibration.cycles, "calibration");
    std::string mode = "free_slope";
    read(s, "mode", mode, "calibration");
    if (mode == "free_slope") {
      c.calibration.mode = CalibrationMode::free_slope;
    } else if (mode == "unit_slope") {
      c.calibration.mode = CalibrationMode::unit_slope;
    } else {
      throw ConfigError("config: calibration.mode must be 'free_slope' or 'unit_slope'");
    }
  }

  if (doc.contains("qp")) {
    const json& q = doc["qp"];
    reject_unknown(q, "qp", {"pe", "measured_t1_us", "rn_kohm", "capacitance_ff"});
    read(q, "pe", c.qp.pe, "qp");
    read_opt(q, "measured_t1_us", c.qp.measured_t1_us, "qp");
    read_opt(q, "rn_kohm", c.qp.rn_kohm, "qp");
    read_opt(q, "capacitance_ff", c.qp.capacitance_ff, "qp");
  }

  if (doc.contains("trace")) {
    const json& t = doc["trace"];
    reject_unknown(t, "trace", {"temperature_mk"});
    read(t, "temperature_mk", c.trace.temperature_mk, "trace");
  }

  if (doc.contains("output")) {
    const json& o = doc["output"];
    reject_unknown(o, "output", {"dir"});
    std::string dir;
    read(o, "dir", dir, "output");
    if (!dir.empty()) c.out_dir = dir;
  }

  if (doc.contains("metadata")) {
    const json& m = doc["metadata"];
    if (!m.is_object()) throw ConfigError("config: metadata must be an object");
    for (const auto& [key, value] : m.items()) c.metadata.emplace_back(key, value.dump());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(fmt::format("config: cannot open '{}'", path.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void ExperimentConfig::validate() const {
  if (!seed) {
    throw ConfigError("config: a seed is required (set 'seed' or pass --seed)");
  }
  if (jobs < 1) throw ConfigError("config: jobs must be >= 1");
  try {
    derive_device_params(ej_ghz, ec_ghz, gap_uev, t1_us);
    protocol.validate();
    readout.validate();
    if (!ladder.from_device) {
      ladder_from_transitions(ladder.transitions_ghz);
    } else {
      transmon_ladder(ej_ghz, ec_ghz, ladder.n_levels);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("config: {}", e.what()));
  }
  if (target_sigma_c && !(*target_sigma_c >= 0.0)) {
    throw ConfigError("config: readout.target_sigma_c must be non-negative");
  }

  auto check_temperature = [](double t, const char* where) {
    if (!(t >= 1.0 && t <= 1000.0)) {
      throw ConfigError(fmt::format("config: {} temperature {} mK outside [1, 1000]", where, t));
    }
  };
  if (sweep.temperatures_mk.empty()) throw ConfigError("config: sweep.temperatures_mk is empty");
  for (double t : sweep.temperatures_mk) check_temperature(t, "sweep");
  for (const auto* list : {&sweep.averages_per_point, &sweep.cycles}) {
    if (list->size() > 1 && list->size() != sweep.temperatures_mk.size()) {
      throw ConfigError("config: per-set-point lists must match sweep.temperatures_mk in length");
    }
    for (int v : *list) {
      if (v < 1) throw ConfigError("config: sweep averages and cycles must be >= 1");
    }
  }
  if (!(sweep.residual_pe >= 0.0 && sweep.residual_pe < 0.5)) {
    throw ConfigError("config: sweep.residual_pe must lie in [0, 0.5)");
  }

  check_temperature(calibration.temperature_mk, "calibration");
  if (calibration.k_values.size() < 2) throw ConfigError("config: calibration.k_values needs at least 2 values");
  for (double k : calibration.k_values) {
    if (!(k >= 0.0 && k <= 1.0)) throw ConfigError(fmt::format("config: calibration k {} outside [0, 1]", k));
  }
  if (calibration.cycles < 2) throw ConfigError("config: calibration.cycles must be >= 2");
  if (!(calibration.residual_pe >= 0.0 && calibration.residual_pe < 0.5)) {
    throw ConfigError("config: calibration.residual_pe must lie in [0, 0.5)");
  }

  if (!(qp.pe >= 0.0)) throw ConfigError("config: qp.pe must be non-negative");
  check_temperature(trace.temperature_mk, "trace");
}

}  // namespace qtherm
