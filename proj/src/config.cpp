#include "stno/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "stno/constants.hpp"
#include "stno/errors.hpp"

namespace stno {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::single_run: return "single-run";
    case ExperimentKind::freq_vs_bias: return "freq-vs-bias";
    case ExperimentKind::amp_vs_rf: return "amp-vs-rf";
    case ExperimentKind::bias_vs_area: return "bias-vs-area";
    case ExperimentKind::montecarlo: return "montecarlo";
    case ExperimentKind::sensitivity_sweep: return "sensitivity-sweep";
    case ExperimentKind::drift_calibration: return "drift-calibration";
    case ExperimentKind::array_demo: return "array-demo";
    case ExperimentKind::locking_range: return "locking-range";
  }
  throw std::logic_error("to_string: unknown experiment kind");
}

ExperimentKind experiment_kind_from(const std::string& name) {
  for (ExperimentKind kind :
       {ExperimentKind::single_run, ExperimentKind::freq_vs_bias, ExperimentKind::amp_vs_rf,
        ExperimentKind::bias_vs_area, ExperimentKind::montecarlo,
        ExperimentKind::sensitivity_sweep, ExperimentKind::drift_calibration,
        ExperimentKind::array_demo, ExperimentKind::locking_range}) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown experiment kind '" + name + "'");
}

namespace {

// ---------------------------------------------------------------------------
// Raw document: sections of key/value pairs with source lines.

struct RawValue {
  std::string text;
  int line = 0;
  mutable bool consumed = false;
};

struct RawSection {
  int line = 0;
  std::map<std::string, RawValue> keys;
  std::vector<std::string> order;  // for first-unknown-key reporting
  mutable bool consumed = false;
};

using Document = std::map<std::string, RawSection>;

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Strip a trailing comment: '#' at start of line or preceded by whitespace.
std::string strip_comment(const std::string& s) {
  if (!s.empty() && s[0] == '#') return {};
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i] == '#' && (s[i - 1] == ' ' || s[i - 1] == '\t')) return s.substr(0, i);
  }
  return s;
}

Document parse_document(const std::string& text) {
  Document doc;
  RawSection* current = nullptr;
  std::string current_name;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trimmed(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) {
        throw ConfigError("malformed section header", s, line);
      }
      const std::string name = trimmed(s.substr(1, s.size() - 2));
      if (doc.count(name) != 0) {
        throw ConfigError("duplicate section", name, line);
      }
      current = &doc[name];
      current->line = line;
      current_name = name;
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value'", s, line);
    }
    if (current == nullptr) {
      throw ConfigError("key outside any [section]", trimmed(s.substr(0, eq)), line);
    }
    const std::string key = trimmed(s.substr(0, eq));
    const std::string value = trimmed(s.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", current_name, line);
    if (value.empty()) throw ConfigError("empty value", current_name + "." + key, line);
    if (current->keys.count(key) != 0) {
      throw ConfigError("duplicate key", current_name + "." + key, line);
    }
    current->keys[key] = RawValue{value, line, false};
    current->order.push_back(key);
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Unit-suffixed quantities.

enum class Dimension {
  none,
  current,
  field,
  frequency,
  time,
  length,
  temperature,
  energy,
  angle,
  resistance,
  magnetization,
  gyromagnetic,
};

struct UnitEntry {
  const char* token;
  double factor;
};

const std::vector<UnitEntry>& unit_table(Dimension dim) {
  static const std::vector<UnitEntry> none{};
  static const std::vector<UnitEntry> current{{"A", 1.0}, {"mA", 1e-3}, {"uA", 1e-6}, {"nA", 1e-9}};
  static const std::vector<UnitEntry> field{
      {"A/m", 1.0}, {"kA/m", 1e3}, {"Oe", 79.57747154594767}, {"kOe", 79577.47154594767}};
  static const std::vector<UnitEntry> frequency{
      {"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}};
  static const std::vector<UnitEntry> time{
      {"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"ns", 1e-9}, {"ps", 1e-12}};
  static const std::vector<UnitEntry> length{{"m", 1.0}, {"mm", 1e-3}, {"um", 1e-6}, {"nm", 1e-9}};
  static const std::vector<UnitEntry> temperature{{"K", 1.0}};
  static const std::vector<UnitEntry> energy{{"J", 1.0}, {"kT", kBoltzmann * 300.0}};
  static const std::vector<UnitEntry> angle{{"rad", 1.0}, {"deg", std::numbers::pi / 180.0}};
  static const std::vector<UnitEntry> resistance{{"ohm", 1.0}, {"kohm", 1e3}, {"Mohm", 1e6}};
  static const std::vector<UnitEntry> magnetization{
      {"A/m", 1.0}, {"kA/m", 1e3}, {"emu/cc", 1000.0}};
  static const std::vector<UnitEntry> gyromagnetic{{"m/A/s", 1.0}};
  switch (dim) {
    case Dimension::none: return none;
    case Dimension::current: return current;
    case Dimension::field: return field;
    case Dimension::frequency: return frequency;
    case Dimension::time: return time;
    case Dimension::length: return length;
    case Dimension::temperature: return temperature;
    case Dimension::energy: return energy;
    case Dimension::angle: return angle;
    case Dimension::resistance: return resistance;
    case Dimension::magnetization: return magnetization;
    case Dimension::gyromagnetic: return gyromagnetic;
  }
  throw std::logic_error("unit_table: unknown dimension");
}

const char* dimension_name(Dimension dim) {
  switch (dim) {
    case Dimension::none: return "dimensionless";
    case Dimension::current: return "current";
    case Dimension::field: return "magnetic field";
    case Dimension::frequency: return "frequency";
    case Dimension::time: return "time";
    case Dimension::length: return "length";
    case Dimension::temperature: return "temperature";
    case Dimension::energy: return "energy";
    case Dimension::angle: return "angle";
    case Dimension::resistance: return "resistance";
    case Dimension::magnetization: return "magnetization";
    case Dimension::gyromagnetic: return "gyromagnetic ratio";
  }
  return "?";
}

double parse_number(const std::string& text, const std::string& path, int line) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || end != begin + text.size()) {
    throw ConfigError("not a number: '" + text + "'", path, line);
  }
  if (!std::isfinite(v)) throw ConfigError("value must be finite", path, line);
  return v;
}

/// "5 kOe" -> 397887.36 A/m. Bare numbers are allowed only for dimensionless
/// keys; dimensioned keys must carry one of their accepted unit suffixes.
double parse_quantity(const std::string& text, Dimension dim, const std::string& path, int line) {
  const auto split = text.find_first_of(" \t");
  const std::string num_part = split == std::string::npos ? text : text.substr(0, split);
  const std::string unit_part = split == std::string::npos ? "" : trimmed(text.substr(split + 1));
  const double value = parse_number(num_part, path, line);
  if (dim == Dimension::none) {
    if (!unit_part.empty()) {
      throw ConfigError("dimensionless key does not take a unit (got '" + unit_part + "')", path,
                        line);
    }
    return value;
  }
  if (unit_part.empty()) {
    throw ConfigError(std::string("missing unit; expected a ") + dimension_name(dim) +
                          " suffix (e.g. '" + unit_table(dim).front().token + "')",
                      path, line);
  }
  for (const auto& entry : unit_table(dim)) {
    if (unit_part == entry.token) return value * entry.factor;
  }
  throw ConfigError("unit '" + unit_part + "' is not a " + dimension_name(dim) + " unit", path,
                    line);
}

// ---------------------------------------------------------------------------
// Typed access to one section with unknown-key accounting.

class SectionReader {
 public:
  SectionReader(const Document& doc, std::string name) : name_(std::move(name)) {
    const auto it = doc.find(name_);
    if (it != doc.end()) {
      section_ = &it->second;
      section_->consumed = true;
    }
  }

  bool present() const { return section_ != nullptr; }
  int line() const { return section_ != nullptr ? section_->line : 0; }

  const RawValue* find(const std::string& key) const {
    if (section_ == nullptr) return nullptr;
    const auto it = section_->keys.find(key);
    if (it == section_->keys.end()) return nullptr;
    it->second.consumed = true;
    return &it->second;
  }

  bool has(const std::string& key) const {
    if (section_ == nullptr) return false;
    return section_->keys.count(key) != 0;  // does not consume
  }

  double quantity(const std::string& key, Dimension dim, double fallback) const {
    const RawValue* raw = find(key);
    if (raw == nullptr) return fallback;
    return parse_quantity(raw->text, dim, path(key), raw->line);
  }

  double number(const std::string& key, double fallback) const {
    return quantity(key, Dimension::none, fallback);
  }

  long long integer(const std::string& key, long long fallback) const {
    const RawValue* raw = find(key);
    if (raw == nullptr) return fallback;
    const double v = parse_number(raw->text, path(key), raw->line);
    if (v != std::floor(v) || std::abs(v) > 9e15) {
      throw ConfigError("expected an integer", path(key), raw->line);
    }
    return static_cast<long long>(v);
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
    const RawValue* raw = find(key);
    if (raw == nullptr) return fallback;
    const char* begin = raw->text.c_str();
    char* end = nullptr;
    const unsigned long long v = std::strtoull(begin, &end, 10);
    if (end == begin || end != begin + raw->text.size()) {
      throw ConfigError("expected a non-negative integer", path(key), raw->line);
    }
    return static_cast<std::uint64_t>(v);
  }

  bool boolean(const std::string& key, bool fallback) const {
    const RawValue* raw = find(key);
    if (raw == nullptr) return fallback;
    const std::string& t = raw->text;
    if (t == "true" || t == "on" || t == "yes") return true;
    if (t == "false" || t == "off" || t == "no") return false;
    throw ConfigError("expected a boolean (true/false/on/off/yes/no)", path(key), raw->line);
  }

  std::string word(const std::string& key, const std::string& fallback) const {
    const RawValue* raw = find(key);
    if (raw == nullptr) return fallback;
    return raw->text;
  }

  Vec3 axis(const std::string& key, const Vec3& fallback) const {
    const RawValue* raw = find(key);
    if (raw == nullptr) return fallback;
    if (raw->text == "x") return Vec3{1.0, 0.0, 0.0};
    if (raw->text == "y") return Vec3{0.0, 1.0, 0.0};
    if (raw->text == "z") return Vec3{0.0, 0.0, 1.0};
    throw ConfigError("expected an axis (x, y or z)", path(key), raw->line);
  }

  /// First key that no schema handler consumed, in document order.
  void reject_unknown_keys() const {
    if (section_ == nullptr) return;
    for (const auto& key : section_->order) {
      const auto& raw = section_->keys.at(key);
      if (!raw.consumed) {
        throw ConfigError("unknown key", path(key), raw.line);
      }
    }
  }

  std::string path(const std::string& key) const { return name_ + "." + key; }

 private:
  std::string name_;
  const RawSection* section_ = nullptr;
};

// ---------------------------------------------------------------------------
// Sweep symbols.

Dimension sweep_dimension(const std::string& symbol, const std::string& path, int line) {
  if (symbol == "i_dc" || symbol == "i_rf") return Dimension::current;
  if (symbol == "side" || symbol == "bead_height" || symbol == "bead_radius") {
    return Dimension::length;
  }
  if (symbol == "e_b") return Dimension::energy;
  if (symbol == "alpha" || symbol == "ms_scale") return Dimension::none;
  if (symbol == "ms") return Dimension::magnetization;
  throw ConfigError("unknown sweep symbol '" + symbol +
                        "' (expected i_dc, i_rf, side, e_b, alpha, ms, ms_scale, bead_height or "
                        "bead_radius)",
                    path, line);
}

bool kind_sweeps(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::freq_vs_bias:
    case ExperimentKind::amp_vs_rf:
    case ExperimentKind::bias_vs_area:
    case ExperimentKind::sensitivity_sweep:
    case ExperimentKind::drift_calibration:
    case ExperimentKind::locking_range:
      return true;
    default:
      return false;
  }
}

SweepSpec default_sweep(ExperimentKind kind) {
  SweepSpec sweep;
  switch (kind) {
    case ExperimentKind::freq_vs_bias:
      sweep = {"i_dc", 190e-6, 320e-6, 14, 10.0e9};
      break;
    case ExperimentKind::amp_vs_rf:
      sweep = {"i_rf", 10e-6, 80e-6, 8, 10.0e9};
      break;
    case ExperimentKind::bias_vs_area:
      sweep = {"side", 30e-9, 50e-9, 5, 10.0e9};
      break;
    case ExperimentKind::sensitivity_sweep:
      sweep = {"i_rf", 10e-6, 80e-6, 8, 10.0e9};
      break;
    case ExperimentKind::drift_calibration:
      sweep = {"ms_scale", 0.95, 1.05, 5, 10.0e9};
      break;
    case ExperimentKind::locking_range:
      sweep = {"i_rf", 20e-6, 60e-6, 5, 10.0e9};
      break;
    default:
      break;
  }
  return sweep;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  const Document doc = parse_document(text);
  ExperimentConfig config;

  // --- [experiment] ---------------------------------------------------------
  const SectionReader experiment(doc, "experiment");
  if (!experiment.present()) {
    throw ConfigError("missing required section", "experiment", 0);
  }
  const RawValue* kind_raw = experiment.find("kind");
  if (kind_raw == nullptr) {
    throw ConfigError("missing required key", "experiment.kind", experiment.line());
  }
  try {
    config.kind = experiment_kind_from(kind_raw->text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), "experiment.kind", kind_raw->line);
  }
  config.seed = experiment.unsigned_integer("seed", 1);
  config.output = experiment.word("output", "");
  experiment.reject_unknown_keys();

  // --- [device] --------------------------------------------------------------
  const SectionReader device(doc, "device");
  MagnetParams& magnet = config.magnet;
  magnet.ms_free = device.quantity("ms", Dimension::magnetization, magnet.ms_free);
  magnet.ms_pinned = device.quantity("ms_pinned", Dimension::magnetization, magnet.ms_pinned);
  magnet.alpha = device.number("alpha", magnet.alpha);
  magnet.gamma = device.quantity("gamma", Dimension::gyromagnetic, magnet.gamma);
  // The array stack ships with a weaker spin-transfer efficiency so a 10 uA
  // bias grid resolves the 0.1 GHz channel comb.
  const bool array_device = config.kind == ExperimentKind::array_demo ||
                            config.kind == ExperimentKind::drift_calibration;
  const double default_polarization = array_device ? 0.005 : magnet.polarization;
  magnet.polarization = device.number("polarization", default_polarization);
  magnet.e_b = device.quantity("energy_barrier", Dimension::energy, magnet.e_b);
  magnet.temperature = device.quantity("temperature", Dimension::temperature, magnet.temperature);
  magnet.easy_axis = device.axis("easy_axis", magnet.easy_axis);
  const double tilt = device.quantity("polarizer_tilt", Dimension::angle,
                                      30.0 * std::numbers::pi / 180.0);
  magnet.m_p = Vec3{-std::cos(tilt), 0.0, -std::sin(tilt)};

  if (device.has("side") && (device.has("length") || device.has("width"))) {
    const RawValue* side_raw = device.find("side");
    throw ConfigError("side conflicts with explicit length/width", device.path("side"),
                      side_raw->line);
  }
  if (device.has("side")) {
    const double side = device.quantity("side", Dimension::length, magnet.geometry.length);
    magnet.geometry.length = side;
    magnet.geometry.width = side;
  } else {
    magnet.geometry.length = device.quantity("length", Dimension::length, magnet.geometry.length);
    magnet.geometry.width = device.quantity("width", Dimension::length, magnet.geometry.width);
  }
  magnet.geometry.t_free = device.quantity("t_free", Dimension::length, magnet.geometry.t_free);
  magnet.geometry.t_pinned =
      device.quantity("t_pinned", Dimension::length, magnet.geometry.t_pinned);
  magnet.geometry.t_spacer =
      device.quantity("t_spacer", Dimension::length, magnet.geometry.t_spacer);
  config.resistance.r_p =
      device.quantity("r_parallel", Dimension::resistance, config.resistance.r_p);
  config.resistance.r_ap =
      device.quantity("r_antiparallel", Dimension::resistance, config.resistance.r_ap);
  device.reject_unknown_keys();

  // --- [fields] ---------------------------------------------------------------
  const SectionReader fields(doc, "fields");
  FieldSources& sources = config.sources;
  const double h_static = fields.quantity("static", Dimension::field, oersted_to_si(5000.0));
  const Vec3 static_axis = fields.axis("static_axis", Vec3{1.0, 0.0, 0.0});
  sources.h_static = static_axis * h_static;
  const double h_rf = fields.quantity("rf_amplitude", Dimension::field, 0.0);
  const Vec3 rf_axis = fields.axis("rf_axis", Vec3{1.0, 0.0, 0.0});
  sources.h_rf_amplitude = rf_axis * h_rf;
  sources.h_rf_frequency = fields.quantity("rf_frequency", Dimension::frequency, 0.0);
  // A noise-free ensemble is degenerate, so the replica study defaults the
  // thermal field on; everything else defaults deterministic.
  sources.thermal_enabled =
      fields.boolean("thermal", config.kind == ExperimentKind::montecarlo);
  sources.thermal_scale = fields.number("thermal_scale", 1.0);
  fields.reject_unknown_keys();

  // --- [drive] ----------------------------------------------------------------
  const SectionReader drive(doc, "drive");
  config.drive.i_dc = drive.quantity("i_dc", Dimension::current, 200e-6);
  config.drive.i_rf = drive.quantity("i_rf", Dimension::current, 0.0);
  config.drive.f_rf = drive.quantity("f_rf", Dimension::frequency, 0.0);
  config.drive.phase = drive.quantity("phase", Dimension::angle, 0.0);
  drive.reject_unknown_keys();

  // --- [bead] -----------------------------------------------------------------
  const SectionReader bead(doc, "bead");
  const bool bead_kind = config.kind == ExperimentKind::single_run ||
                         config.kind == ExperimentKind::amp_vs_rf ||
                         config.kind == ExperimentKind::sensitivity_sweep ||
                         config.kind == ExperimentKind::array_demo;
  if (bead.present() && !bead_kind) {
    throw ConfigError("[bead] does not apply to the " + to_string(config.kind) + " kind", "bead",
                      bead.line());
  }
  if (bead.present()) {
    BeadParams params;
    params.radius = bead.quantity("radius", Dimension::length, params.radius);
    params.ms = bead.quantity("ms", Dimension::magnetization, params.ms);
    const double height = bead.quantity("height", Dimension::length, 400e-9);
    params.position = Vec3{0.0, height, 0.0};
    params.temperature = bead.quantity("temperature", Dimension::temperature, params.temperature);
    bead.reject_unknown_keys();
    config.bead = params;
  }

  // --- [integrator] -----------------------------------------------------------
  const SectionReader integrator(doc, "integrator");
  if (config.kind == ExperimentKind::array_demo) {
    // The multiplexed readout needs the injection-lock settling transient
    // fully decayed, or its sidebands land on neighboring channel windows.
    config.integrator.duration = 200e-9;
    config.integrator.trim = 0.5;
  }
  config.integrator.dt = integrator.quantity("dt", Dimension::time, config.integrator.dt);
  config.integrator.duration =
      integrator.quantity("duration", Dimension::time, config.integrator.duration);
  const std::string scheme = integrator.word("scheme", "auto");
  if (scheme == "auto") {
    config.integrator.scheme = SchemeChoice::automatic;
  } else if (scheme == "rk4") {
    config.integrator.scheme = SchemeChoice::rk4;
  } else if (scheme == "heun") {
    config.integrator.scheme = SchemeChoice::heun;
  } else {
    throw ConfigError("expected auto, rk4 or heun", integrator.path("scheme"),
                      integrator.find("scheme")->line);
  }
  config.integrator.trim = integrator.number("trim", config.integrator.trim);
  integrator.reject_unknown_keys();

  // --- [sweep] ----------------------------------------------------------------
  const SectionReader sweep(doc, "sweep");
  if (sweep.present() && !kind_sweeps(config.kind)) {
    throw ConfigError("experiment kind '" + to_string(config.kind) + "' does not take a sweep",
                      "sweep", sweep.line());
  }
  config.sweep = default_sweep(config.kind);
  if (sweep.present()) {
    const RawValue* symbol_raw = sweep.find("symbol");
    if (symbol_raw != nullptr) config.sweep.symbol = symbol_raw->text;
    const Dimension dim = sweep_dimension(config.sweep.symbol, sweep.path("symbol"),
                                          symbol_raw != nullptr ? symbol_raw->line : sweep.line());
    // Unit-checked against the symbol's dimension; defaults only survive when
    // the symbol stays the default one.
    if (sweep.has("start") != sweep.has("stop")) {
      throw ConfigError("start and stop must be given together", "sweep", sweep.line());
    }
    if (symbol_raw != nullptr && config.sweep.symbol != default_sweep(config.kind).symbol &&
        !sweep.has("start")) {
      throw ConfigError("a non-default sweep symbol needs explicit start/stop", "sweep",
                        symbol_raw->line);
    }
    config.sweep.start = sweep.quantity("start", dim, config.sweep.start);
    config.sweep.stop = sweep.quantity("stop", dim, config.sweep.stop);
    config.sweep.points = static_cast<int>(sweep.integer("points", config.sweep.points));
    config.sweep.target =
        sweep.quantity("target", Dimension::frequency, config.sweep.target);
    sweep.reject_unknown_keys();
  }
  if (kind_sweeps(config.kind)) {
    if (config.sweep.points < 2) {
      throw ConfigError("sweep needs at least 2 points", "sweep.points", sweep.line());
    }
    if (config.sweep.start == config.sweep.stop) {
      throw ConfigError("sweep start and stop coincide", "sweep.start", sweep.line());
    }
  }

  // --- [array] ----------------------------------------------------------------
  const SectionReader array(doc, "array");
  const bool array_kind = config.kind == ExperimentKind::array_demo ||
                          config.kind == ExperimentKind::drift_calibration;
  if (array.present() && !array_kind) {
    throw ConfigError("[array] only applies to array-demo and drift-calibration", "array",
                      array.line());
  }
  config.array.channels = static_cast<int>(array.integer("channels", config.array.channels));
  config.array.f_start = array.quantity("f_start", Dimension::frequency, config.array.f_start);
  config.array.margin = array.quantity("margin", Dimension::frequency, config.array.margin);
  config.array.bias_resolution =
      array.quantity("bias_resolution", Dimension::current, config.array.bias_resolution);
  config.array.i_rf = array.quantity("i_rf", Dimension::current, config.array.i_rf);
  config.array.bead_channel =
      static_cast<int>(array.integer("bead_channel", config.array.bead_channel));
  config.array.trials = static_cast<int>(array.integer("trials", config.array.trials));
  config.array.threshold = array.number("threshold", config.array.threshold);
  config.array.target = array.quantity("target", Dimension::frequency, config.array.target);
  config.array.curve_bias_min =
      array.quantity("curve_bias_min", Dimension::current, config.array.curve_bias_min);
  config.array.curve_bias_max =
      array.quantity("curve_bias_max", Dimension::current, config.array.curve_bias_max);
  config.array.curve_points =
      static_cast<int>(array.integer("curve_points", config.array.curve_points));
  config.array.calibrate = array.boolean("calibrate", config.array.calibrate);
  array.reject_unknown_keys();

  // --- [montecarlo] -----------------------------------------------------------
  const SectionReader montecarlo(doc, "montecarlo");
  if (montecarlo.present() && config.kind != ExperimentKind::montecarlo) {
    throw ConfigError("[montecarlo] only applies to the montecarlo kind", "montecarlo",
                      montecarlo.line());
  }
  config.montecarlo.replicas =
      static_cast<int>(montecarlo.integer("replicas", config.montecarlo.replicas));
  config.montecarlo.margin =
      montecarlo.quantity("margin", Dimension::frequency, config.montecarlo.margin);
  config.montecarlo.histogram_bins =
      static_cast<int>(montecarlo.integer("histogram_bins", config.montecarlo.histogram_bins));
  montecarlo.reject_unknown_keys();

  // --- [locking] --------------------------------------------------------------
  const SectionReader locking(doc, "locking");
  if (locking.present() && config.kind != ExperimentKind::locking_range) {
    throw ConfigError("[locking] only applies to the locking-range kind", "locking",
                      locking.line());
  }
  config.locking.halfwidth =
      locking.quantity("halfwidth", Dimension::frequency, config.locking.halfwidth);
  config.locking.points = static_cast<int>(locking.integer("points", config.locking.points));
  locking.reject_unknown_keys();

  // --- unknown sections -------------------------------------------------------
  for (const auto& [name, section] : doc) {
    if (!section.consumed) {
      throw ConfigError("unknown section", name, section.line);
    }
  }

  // --- semantic validation ------------------------------------------------------
  try {
    config.magnet.validate();
    config.sources.validate();
    config.resistance.validate();
    config.drive.validate();
    if (config.bead) config.bead->validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what(), "(validation)", 0);
  }
  if (!(config.integrator.dt > 0.0)) {
    throw ConfigError("dt must be positive", "integrator.dt", 0);
  }
  if (config.integrator.duration < 2048.0 * config.integrator.dt) {
    throw ConfigError("duration must cover at least 2048 steps", "integrator.duration", 0);
  }
  if (!(config.integrator.trim >= 0.0 && config.integrator.trim < 1.0)) {
    throw ConfigError("trim must lie in [0, 1)", "integrator.trim", 0);
  }
  if (config.integrator.scheme == SchemeChoice::rk4 && config.sources.thermal_enabled) {
    throw ConfigError("the rk4 scheme is deterministic; use heun (or auto) with thermal noise",
                      "integrator.scheme", 0);
  }
  if (config.montecarlo.replicas < 2) {
    throw ConfigError("need at least 2 replicas", "montecarlo.replicas", 0);
  }
  if (config.montecarlo.histogram_bins < 1) {
    throw ConfigError("need at least 1 bin", "montecarlo.histogram_bins", 0);
  }
  if (config.locking.points < 3) {
    throw ConfigError("locking scan needs at least 3 points", "locking.points", 0);
  }
  if (array_kind) {
    if (config.array.channels < 1) {
      throw ConfigError("need at least one channel", "array.channels", 0);
    }
    if (!(config.array.margin > 0.0)) {
      throw ConfigError("margin must be positive", "array.margin", 0);
    }
    if (!(config.array.bias_resolution > 0.0)) {
      throw ConfigError("bias resolution must be positive", "array.bias_resolution", 0);
    }
    if (config.array.bead_channel < 0 || config.array.bead_channel >= config.array.channels) {
      throw ConfigError("bead channel outside the plan", "array.bead_channel", 0);
    }
    if (config.array.trials < 1) {
      throw ConfigError("need at least one trial", "array.trials", 0);
    }
    if (config.array.curve_points < 2 ||
        !(config.array.curve_bias_max > config.array.curve_bias_min)) {
      throw ConfigError("bias curve range is degenerate", "array.curve_points", 0);
    }
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace stno
