#include "spinretro/run_config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "spinretro/errors.hpp"

namespace spinretro::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "schema", "seed", "repetitions", "theta2_rad",
      "kappa1_sq", "kappa2_sq", "kappa3_sq", "kappa4_sq",
      "tau1_ms", "tau2_ms", "tau3_ms", "tau4_ms",
      "duty", "backaction", "decoherence",
      "t1_ms", "t2_ms", "probe_depol_per_ms", "initial_polarization",
      "initial_cov_factor", "quantum_efficiency", "strob_coefficient",
      "theta_start_rad", "theta_stop_rad", "theta_count", "theory_grid_column",
      "grid_length", "grid_points", "grid_modes",
      "rf_enabled", "rf_omega_c", "rf_omega_s", "rf_duration_s", "rf_phase",
      "rf_drive_omega", "rf_larmor_omega", "rf_mean_spin", "rf_before_pulse",
      "sweep_param", "sweep_start", "sweep_stop", "sweep_count",
      "jackknife_blocks", "shot_noise_unit",
  };
  return keys;
}

class KeyMap {
 public:
  KeyMap(std::map<std::string, std::string> kv, std::string origin)
      : kv_(std::move(kv)), origin_(std::move(origin)) {}

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  double number(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(it->second.c_str(), &end);
    if (errno != 0 || end == it->second.c_str() || *end != '\0') {
      throw ConfigError(origin_ + ": key '" + key + "': cannot parse number '" + it->second +
                        "'");
    }
    return v;
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) const {
    const double v = number(key, static_cast<double>(fallback));
    const auto i = static_cast<std::int64_t>(v);
    if (static_cast<double>(i) != v) {
      throw ConfigError(origin_ + ": key '" + key + "' must be an integer");
    }
    return i;
  }

  bool flag(const std::string& key, bool fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    if (it->second == "on" || it->second == "true" || it->second == "1") return true;
    if (it->second == "off" || it->second == "false" || it->second == "0") return false;
    throw ConfigError(origin_ + ": key '" + key + "' must be on/off");
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::string> kv_;
  std::string origin_;
};

KeyMap parse_key_values(const std::string& text, const std::string& origin) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (known_keys().count(key) == 0) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (kv.count(key) > 0) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    kv[key] = value;
  }
  return KeyMap(std::move(kv), origin);
}

BackactionMode parse_backaction(const std::string& name, const std::string& origin) {
  if (name == "ideal") return BackactionMode::ideal_bae;
  if (name == "residual") return BackactionMode::residual;
  if (name == "full") return BackactionMode::full_cw;
  throw ConfigError(origin + ": backaction must be ideal|residual|full");
}

std::string backaction_name(BackactionMode mode) {
  switch (mode) {
    case BackactionMode::ideal_bae: return "ideal";
    case BackactionMode::residual: return "residual";
    case BackactionMode::full_cw: return "full";
  }
  return "ideal";
}

SweepParam parse_sweep_param(const std::string& name, const std::string& origin) {
  if (name == "kappa1_sq") return SweepParam::kappa1_sq;
  if (name == "kappa3_sq") return SweepParam::kappa3_sq;
  if (name == "tau1_ms") return SweepParam::tau1_ms;
  if (name == "tau3_ms") return SweepParam::tau3_ms;
  throw ConfigError(origin + ": sweep_param must be kappa1_sq|kappa3_sq|tau1_ms|tau3_ms");
}

std::string sweep_param_name(SweepParam p) {
  switch (p) {
    case SweepParam::kappa1_sq: return "kappa1_sq";
    case SweepParam::kappa3_sq: return "kappa3_sq";
    case SweepParam::tau1_ms: return "tau1_ms";
    case SweepParam::tau3_ms: return "tau3_ms";
  }
  return "kappa1_sq";
}

}  // namespace

sim::SequenceConfig RunConfig::sequence() const {
  sim::SequenceConfig c;
  const std::array<double, 4> thetas{0.0, theta2, M_PI / 2.0, 0.0};
  for (int i = 0; i < 4; ++i) {
    const auto u = static_cast<std::size_t>(i);
    c.pulses[u].spec = PulseSpec(QuadratureDirection(thetas[u]), kappa_sq[u], duty, backaction);
    c.pulses[u].duration_ms = tau_ms[u];
  }
  c.decoherence = decoherence;
  c.decoherence_on = decoherence_on;
  c.initial_cov_factor = initial_cov_factor;
  c.quantum_efficiency = quantum_efficiency;
  c.strob_coefficient = strob_coefficient;
  c.seed = seed.value_or(1);
  c.repetitions = repetitions;
  if (rf_enabled) c.rf = rf;
  c.validate();
  return c;
}

io::EchoLines RunConfig::echo() const {
  io::EchoLines e;
  auto num = [&](const std::string& k, double v) { e.emplace_back(k, io::format_double(v)); };
  e.emplace_back("schema", "1");
  if (seed) e.emplace_back("seed", std::to_string(*seed));
  e.emplace_back("repetitions", std::to_string(repetitions));
  num("theta2_rad", theta2);
  num("kappa1_sq", kappa_sq[0]);
  num("kappa2_sq", kappa_sq[1]);
  num("kappa3_sq", kappa_sq[2]);
  num("kappa4_sq", kappa_sq[3]);
  num("tau1_ms", tau_ms[0]);
  num("tau2_ms", tau_ms[1]);
  num("tau3_ms", tau_ms[2]);
  num("tau4_ms", tau_ms[3]);
  num("duty", duty);
  e.emplace_back("backaction", backaction_name(backaction));
  e.emplace_back("decoherence", decoherence_on ? "on" : "off");
  num("t1_ms", decoherence.t1_ms);
  num("t2_ms", decoherence.t2_ms);
  num("probe_depol_per_ms", decoherence.probe_depol_per_ms);
  num("initial_polarization", decoherence.initial_polarization);
  num("initial_cov_factor", initial_cov_factor);
  num("quantum_efficiency", quantum_efficiency);
  num("strob_coefficient", strob_coefficient);
  num("theta_start_rad", theta_start);
  num("theta_stop_rad", theta_stop);
  e.emplace_back("theta_count", std::to_string(theta_count));
  e.emplace_back("theory_grid_column", theory_grid_column ? "on" : "off");
  num("grid_length", grid.length);
  e.emplace_back("grid_points", std::to_string(grid.points));
  e.emplace_back("grid_modes", std::to_string(grid.modes));
  e.emplace_back("rf_enabled", rf_enabled ? "on" : "off");
  if (rf_enabled) {
    num("rf_omega_c", rf.rf.omega_c);
    num("rf_omega_s", rf.rf.omega_s);
    num("rf_duration_s", rf.rf.duration_s);
    num("rf_phase", rf.rf.phase);
    num("rf_drive_omega", rf.rf.drive_omega);
    num("rf_larmor_omega", rf.larmor_omega);
    num("rf_mean_spin", rf.mean_spin);
    e.emplace_back("rf_before_pulse", std::to_string(rf.before_pulse));
  }
  e.emplace_back("sweep_param", sweep_param_name(sweep_param));
  num("sweep_start", sweep_start);
  num("sweep_stop", sweep_stop);
  e.emplace_back("sweep_count", std::to_string(sweep_count));
  e.emplace_back("jackknife_blocks", std::to_string(jackknife_blocks));
  num("shot_noise_unit", shot_noise_unit);
  return e;
}

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
  const KeyMap kv = parse_key_values(text, origin);
  if (!kv.has("schema")) throw ConfigError(origin + ": missing mandatory 'schema' key");
  if (kv.integer("schema", 0) != 1) throw ConfigError(origin + ": unsupported schema version");

  RunConfig c;
  if (kv.has("seed")) c.seed = static_cast<std::uint64_t>(kv.integer("seed", 0));
  c.repetitions = kv.integer("repetitions", c.repetitions);
  c.theta2 = kv.number("theta2_rad", c.theta2);
  c.kappa_sq = {kv.number("kappa1_sq", c.kappa_sq[0]), kv.number("kappa2_sq", c.kappa_sq[1]),
                kv.number("kappa3_sq", c.kappa_sq[2]), kv.number("kappa4_sq", c.kappa_sq[3])};
  c.tau_ms = {kv.number("tau1_ms", c.tau_ms[0]), kv.number("tau2_ms", c.tau_ms[1]),
              kv.number("tau3_ms", c.tau_ms[2]), kv.number("tau4_ms", c.tau_ms[3])};
  c.duty = kv.number("duty", c.duty);
  c.backaction = parse_backaction(kv.text("backaction", "ideal"), kv.origin());
  c.decoherence_on = kv.flag("decoherence", c.decoherence_on);
  c.decoherence.t1_ms = kv.number("t1_ms", c.decoherence.t1_ms);
  c.decoherence.t2_ms = kv.number("t2_ms", c.decoherence.t2_ms);
  c.decoherence.probe_depol_per_ms =
      kv.number("probe_depol_per_ms", c.decoherence.probe_depol_per_ms);
  c.decoherence.initial_polarization =
      kv.number("initial_polarization", c.decoherence.initial_polarization);
  c.initial_cov_factor = kv.number("initial_cov_factor", c.initial_cov_factor);
  c.quantum_efficiency = kv.number("quantum_efficiency", c.quantum_efficiency);
  c.strob_coefficient = kv.number("strob_coefficient", c.strob_coefficient);
  c.theta_start = kv.number("theta_start_rad", c.theta_start);
  c.theta_stop = kv.number("theta_stop_rad", c.theta_stop);
  c.theta_count = static_cast<int>(kv.integer("theta_count", c.theta_count));
  c.theory_grid_column = kv.flag("theory_grid_column", c.theory_grid_column);
  c.grid.length = kv.number("grid_length", c.grid.length);
  c.grid.points = static_cast<int>(kv.integer("grid_points", c.grid.points));
  c.grid.modes = static_cast<int>(kv.integer("grid_modes", c.grid.modes));
  c.rf_enabled = kv.flag("rf_enabled", c.rf_enabled);
  c.rf.rf.omega_c = kv.number("rf_omega_c", c.rf.rf.omega_c);
  c.rf.rf.omega_s = kv.number("rf_omega_s", c.rf.rf.omega_s);
  c.rf.rf.duration_s = kv.number("rf_duration_s", c.rf.rf.duration_s);
  c.rf.rf.phase = kv.number("rf_phase", c.rf.rf.phase);
  c.rf.rf.drive_omega = kv.number("rf_drive_omega", c.rf.rf.drive_omega);
  c.rf.larmor_omega = kv.number("rf_larmor_omega", c.rf.larmor_omega);
  c.rf.mean_spin = kv.number("rf_mean_spin", c.rf.mean_spin);
  c.rf.before_pulse = static_cast<int>(kv.integer("rf_before_pulse", c.rf.before_pulse));
  c.sweep_param = parse_sweep_param(kv.text("sweep_param", "kappa1_sq"), kv.origin());
  c.sweep_start = kv.number("sweep_start", c.sweep_start);
  c.sweep_stop = kv.number("sweep_stop", c.sweep_stop);
  c.sweep_count = static_cast<int>(kv.integer("sweep_count", c.sweep_count));
  c.jackknife_blocks = static_cast<int>(kv.integer("jackknife_blocks", c.jackknife_blocks));
  c.shot_noise_unit = kv.number("shot_noise_unit", c.shot_noise_unit);

  if (c.theta_count < 1) throw ConfigError(kv.origin() + ": theta_count must be >= 1");
  if (c.sweep_count < 1) throw ConfigError(kv.origin() + ": sweep_count must be >= 1");
  if (c.repetitions < 1) throw ConfigError(kv.origin() + ": repetitions must be >= 1");
  return c;
}

RunConfig parse_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config_text(buf.str(), path.string());
}

}  // namespace spinretro::cli
