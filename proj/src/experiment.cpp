#include "stno/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "stno/array.hpp"
#include "stno/bead.hpp"
#include "stno/constants.hpp"
#include "stno/dynamics.hpp"
#include "stno/errors.hpp"
#include "stno/metrics.hpp"
#include "stno/rng.hpp"
#include "stno/spectrum.hpp"
#include "stno/transducer.hpp"

namespace stno {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
/// Spectra are written up to this frequency; beyond it the one-sided
/// transform of a GHz-class oscillator holds nothing but padding.
constexpr double kSpectrumFileCap = 50e9;
/// Half-width of the readout window around an injection tone. Matches the
/// default channel margin/2 minus headroom so adjacent windows never overlap.
constexpr double kReadoutHalfwidth = 45e6;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> axis_series(const Trajectory& traj, const Vec3& axis) {
  std::vector<double> out(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) out[i] = traj.m[i].dot(axis);
  return out;
}

Scheme resolve_scheme(SchemeChoice choice, bool thermal) {
  switch (choice) {
    case SchemeChoice::rk4: return Scheme::rk4;
    case SchemeChoice::heun: return Scheme::heun;
    case SchemeChoice::automatic: return thermal ? Scheme::heun : Scheme::rk4;
  }
  throw std::logic_error("resolve_scheme: unknown choice");
}

const char* scheme_name(Scheme scheme) {
  return scheme == Scheme::rk4 ? "rk4" : "heun";
}

Trajectory run_sim(const MagnetParams& magnet, const FieldSources& sources,
                   const DriveCurrent& drive, const IntegratorChoice& integ,
                   std::uint64_t seed) {
  IntegratorConfig ic;
  ic.dt = integ.dt;
  ic.scheme = resolve_scheme(integ.scheme, sources.thermal_enabled);
  ic.seed = seed;
  return simulate(default_initial_state(magnet), magnet, sources, drive, ic, integ.duration);
}

/// Deterministic reference line: thermal and RF drive off, rk4.
double free_running_frequency(const MagnetParams& magnet, const FieldSources& sources,
                              double i_dc, const IntegratorChoice& integ) {
  FieldSources s = sources;
  s.h_rf_amplitude = Vec3{};
  s.h_rf_frequency = 0.0;
  s.thermal_enabled = false;
  DriveCurrent d;
  d.i_dc = i_dc;
  d.i_rf = 0.0;
  IntegratorConfig ic;
  ic.dt = integ.dt;
  ic.scheme = Scheme::rk4;
  const Trajectory traj =
      simulate(default_initial_state(magnet), magnet, s, d, ic, integ.duration);
  return dominant_frequency(trim_transient(axis_series(traj, magnet.easy_axis), integ.trim),
                            integ.dt);
}

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v.x, v.y, v.z}); }

ordered_json config_json(const ExperimentConfig& c) {
  ordered_json j;
  j["kind"] = to_string(c.kind);
  j["seed"] = c.seed;
  j["output"] = c.resolved_output();
  ordered_json device;
  device["ms_free_A_per_m"] = c.magnet.ms_free;
  device["ms_pinned_A_per_m"] = c.magnet.ms_pinned;
  device["alpha"] = c.magnet.alpha;
  device["gamma_m_per_A_s"] = c.magnet.gamma;
  device["polarization"] = c.magnet.polarization;
  device["energy_barrier_J"] = c.magnet.e_b;
  device["temperature_K"] = c.magnet.temperature;
  device["easy_axis"] = vec_json(c.magnet.easy_axis);
  device["polarizer"] = vec_json(c.magnet.m_p);
  device["length_m"] = c.magnet.geometry.length;
  device["width_m"] = c.magnet.geometry.width;
  device["t_free_m"] = c.magnet.geometry.t_free;
  device["t_pinned_m"] = c.magnet.geometry.t_pinned;
  device["t_spacer_m"] = c.magnet.geometry.t_spacer;
  device["r_parallel_ohm"] = c.resistance.r_p;
  device["r_antiparallel_ohm"] = c.resistance.r_ap;
  j["device"] = device;
  ordered_json fields;
  fields["h_static_A_per_m"] = vec_json(c.sources.h_static);
  fields["h_rf_amplitude_A_per_m"] = vec_json(c.sources.h_rf_amplitude);
  fields["h_rf_frequency_Hz"] = c.sources.h_rf_frequency;
  fields["thermal"] = c.sources.thermal_enabled;
  fields["thermal_scale"] = c.sources.thermal_scale;
  j["fields"] = fields;
  ordered_json drive;
  drive["i_dc_A"] = c.drive.i_dc;
  drive["i_rf_A"] = c.drive.i_rf;
  drive["f_rf_Hz"] = c.drive.f_rf;
  drive["phase_rad"] = c.drive.phase;
  j["drive"] = drive;
  if (c.bead) {
    ordered_json bead;
    bead["radius_m"] = c.bead->radius;
    bead["ms_A_per_m"] = c.bead->ms;
    bead["position_m"] = vec_json(c.bead->position);
    bead["temperature_K"] = c.bead->temperature;
    j["bead"] = bead;
  } else {
    j["bead"] = nullptr;
  }
  ordered_json integ;
  integ["dt_s"] = c.integrator.dt;
  integ["duration_s"] = c.integrator.duration;
  integ["scheme"] = c.integrator.scheme == SchemeChoice::automatic
                        ? "auto"
                        : scheme_name(resolve_scheme(c.integrator.scheme, false));
  integ["scheme_resolved"] =
      scheme_name(resolve_scheme(c.integrator.scheme, c.sources.thermal_enabled));
  integ["trim"] = c.integrator.trim;
  j["integrator"] = integ;
  const bool sweeps = !c.sweep.symbol.empty();
  if (sweeps) {
    ordered_json sweep;
    sweep["symbol"] = c.sweep.symbol;
    sweep["start"] = c.sweep.start;
    sweep["stop"] = c.sweep.stop;
    sweep["points"] = c.sweep.points;
    sweep["target_Hz"] = c.sweep.target;
    j["sweep"] = sweep;
  }
  if (c.kind == ExperimentKind::array_demo || c.kind == ExperimentKind::drift_calibration) {
    ordered_json array;
    array["channels"] = c.array.channels;
    array["f_start_Hz"] = c.array.f_start;
    array["margin_Hz"] = c.array.margin;
    array["bias_resolution_A"] = c.array.bias_resolution;
    array["i_rf_A"] = c.array.i_rf;
    array["bead_channel"] = c.array.bead_channel;
    array["trials"] = c.array.trials;
    array["threshold"] = c.array.threshold;
    array["target_Hz"] = c.array.target;
    array["curve_bias_min_A"] = c.array.curve_bias_min;
    array["curve_bias_max_A"] = c.array.curve_bias_max;
    array["curve_points"] = c.array.curve_points;
    array["calibrate"] = c.array.calibrate;
    j["array"] = array;
  }
  if (c.kind == ExperimentKind::montecarlo) {
    ordered_json mc;
    mc["replicas"] = c.montecarlo.replicas;
    mc["margin_Hz"] = c.montecarlo.margin;
    mc["histogram_bins"] = c.montecarlo.histogram_bins;
    j["montecarlo"] = mc;
  }
  if (c.kind == ExperimentKind::locking_range) {
    ordered_json locking;
    locking["halfwidth_Hz"] = c.locking.halfwidth;
    locking["points"] = c.locking.points;
    j["locking"] = locking;
  }
  return j;
}

struct RunContext {
  RunContext(const ExperimentConfig& c, fs::path d) : config(c), dir(std::move(d)) {}

  const ExperimentConfig& config;
  fs::path dir;
  std::vector<FileEntry> files;
  ordered_json stats = ordered_json::object();
  bool success = true;
  int failed_points = 0;

  void fail_point() {
    ++failed_points;
    success = false;
  }

  void save(const std::string& name, const std::string& bytes) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + (dir / name).string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write on '" + (dir / name).string() + "'");
    files.push_back(FileEntry{name, bytes.size(), fnv1a64_hex(bytes)});
  }
};

std::string spectrum_csv(const Spectrum& spec, double f_cap = kSpectrumFileCap) {
  std::ostringstream out;
  out << "frequency_Hz,amplitude\n";
  for (std::size_t b = 0; b < spec.size(); ++b) {
    const double f = spec.frequency(b);
    if (f > f_cap) break;
    out << fmt(f) << ',' << fmt(spec.amplitude[b]) << '\n';
  }
  return out.str();
}

std::vector<double> sweep_values(const SweepSpec& sweep) {
  std::vector<double> values(static_cast<std::size_t>(sweep.points));
  for (int k = 0; k < sweep.points; ++k) {
    values[static_cast<std::size_t>(k)] =
        sweep.start + (sweep.stop - sweep.start) * static_cast<double>(k) /
                          static_cast<double>(sweep.points - 1);
  }
  return values;
}

/// Apply one sweep-axis value onto a fresh copy of the base configuration.
/// Side sweeps hold the anisotropy energy *density* constant, so the barrier
/// scales with the element area.
void apply_sweep_value(ExperimentConfig& point, const std::string& symbol, double v) {
  if (symbol == "i_dc") {
    point.drive.i_dc = v;
  } else if (symbol == "i_rf") {
    point.drive.i_rf = v;
  } else if (symbol == "side") {
    const double old_area = point.magnet.geometry.length * point.magnet.geometry.width;
    point.magnet.geometry.length = v;
    point.magnet.geometry.width = v;
    point.magnet.e_b *= (v * v) / old_area;
  } else if (symbol == "e_b") {
    point.magnet.e_b = v;
  } else if (symbol == "alpha") {
    point.magnet.alpha = v;
  } else if (symbol == "ms") {
    point.magnet.ms_free = v;
  } else if (symbol == "ms_scale") {
    point.magnet.ms_free *= v;
  } else if (symbol == "bead_height") {
    if (!point.bead) point.bead = BeadParams{};
    point.bead->position = Vec3{0.0, v, 0.0};
  } else if (symbol == "bead_radius") {
    if (!point.bead) point.bead = BeadParams{};
    point.bead->radius = v;
  } else {
    throw std::logic_error("apply_sweep_value: unknown symbol " + symbol);
  }
  point.magnet.validate();
  if (point.bead) point.bead->validate();
}

// ---------------------------------------------------------------------------
// single-run

void run_single(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  FieldSources sources = c.sources;
  DriveCurrent drive = c.drive;

  const bool wants_free_running =
      (drive.i_rf > 0.0 && drive.f_rf == 0.0) ||
      (sources.h_rf_amplitude.norm() > 0.0 && sources.h_rf_frequency == 0.0);
  double f0 = kNan;
  std::string status = "ok";
  if (wants_free_running) {
    try {
      f0 = free_running_frequency(c.magnet, c.sources, drive.i_dc, c.integrator);
      if (drive.i_rf > 0.0 && drive.f_rf == 0.0) drive.f_rf = f0;
      if (sources.h_rf_amplitude.norm() > 0.0 && sources.h_rf_frequency == 0.0) {
        sources.h_rf_frequency = f0;
      }
    } catch (const NoOscillationError&) {
      status = "no-oscillation";
      ctx.fail_point();
    }
  }

  if (c.bead && status == "ok") {
    const AveragedBeadField perturbation =
        bead_perturbation(*c.bead, c.magnet, sources.h_static, QuadratureConfig{});
    sources.bead_field = perturbation.value;
    ctx.stats["bead_field_A_per_m"] = vec_json(perturbation.value);
  }

  const Trajectory traj = run_sim(c.magnet, sources, drive, c.integrator, c.seed);
  const std::vector<double> voltage =
      voltage_series(traj, c.magnet.m_p, c.resistance, TmrConvention::parallel_min);

  std::ostringstream ts;
  ts << "t_seconds,m_x,m_y,m_z,current_A,voltage_V\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    ts << fmt(traj.time(i)) << ',' << fmt(traj.m[i].x) << ',' << fmt(traj.m[i].y) << ','
       << fmt(traj.m[i].z) << ',' << fmt(traj.current[i]) << ',' << fmt(voltage[i]) << '\n';
  }
  ctx.save("timeseries.csv", ts.str());

  const std::vector<double> v_trim = trim_transient(voltage, c.integrator.trim);
  const std::vector<double> m_trim =
      trim_transient(axis_series(traj, c.magnet.easy_axis), c.integrator.trim);
  ctx.save("spectrum.csv", spectrum_csv(compute_spectrum(v_trim, traj.dt)));

  double frequency = kNan;
  double amplitude_v = kNan;
  double m_amplitude = kNan;
  bool locked = false;
  if (status == "ok") {
    try {
      frequency = dominant_frequency(m_trim, traj.dt);
      m_amplitude = steady_amplitude(m_trim, traj.dt);
      amplitude_v = drive.i_rf > 0.0
                        ? amplitude_near(v_trim, traj.dt, drive.f_rf, kReadoutHalfwidth)
                        : steady_amplitude(v_trim, traj.dt);
      if (drive.i_rf > 0.0) locked = is_locked(m_trim, traj.dt, drive.f_rf);
    } catch (const NoOscillationError&) {
      status = "no-oscillation";
      ctx.fail_point();
    }
  }

  double mean_v = 0.0;
  for (double v : voltage) mean_v += v;
  mean_v /= static_cast<double>(voltage.size());

  ctx.stats["status"] = status;
  ctx.stats["frequency_Hz"] = frequency;
  ctx.stats["m_easy_amplitude"] = m_amplitude;
  ctx.stats["amplitude_V"] = amplitude_v;
  ctx.stats["mean_voltage_V"] = mean_v;
  ctx.stats["f_injection_Hz"] = drive.i_rf > 0.0 ? drive.f_rf : kNan;
  ctx.stats["locked"] = locked;
  ctx.stats["samples"] = traj.size();
}

// ---------------------------------------------------------------------------
// freq-vs-bias

void run_freq_vs_bias(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const bool with_rf_field = c.sources.h_rf_amplitude.norm() > 0.0;
  std::ostringstream csv;
  csv << (with_rf_field ? "axis_value,frequency_Hz,amplitude,frequency_rf_Hz,status\n"
                        : "axis_value,frequency_Hz,amplitude,status\n");

  std::vector<double> freqs;
  std::vector<double> freqs_rf;
  for (double v : sweep_values(c.sweep)) {
    ExperimentConfig point = c;
    std::string status = "ok";
    double f_static = kNan;
    double amp = kNan;
    double f_rf_on = kNan;
    try {
      apply_sweep_value(point, c.sweep.symbol, v);
      FieldSources quiet = point.sources;
      quiet.h_rf_amplitude = Vec3{};
      quiet.h_rf_frequency = 0.0;
      DriveCurrent drive = point.drive;
      drive.i_rf = 0.0;
      const Trajectory traj = run_sim(point.magnet, quiet, drive, point.integrator, point.seed);
      const std::vector<double> m_trim =
          trim_transient(axis_series(traj, point.magnet.easy_axis), point.integrator.trim);
      f_static = dominant_frequency(m_trim, traj.dt);
      amp = steady_amplitude(m_trim, traj.dt);
      freqs.push_back(f_static);
      if (with_rf_field) {
        FieldSources loud = point.sources;
        if (loud.h_rf_frequency == 0.0) loud.h_rf_frequency = f_static;
        const Trajectory traj_rf =
            run_sim(point.magnet, loud, drive, point.integrator, point.seed);
        f_rf_on = dominant_frequency(
            trim_transient(axis_series(traj_rf, point.magnet.easy_axis), point.integrator.trim),
            traj_rf.dt);
        freqs_rf.push_back(f_rf_on);
      }
    } catch (const NoOscillationError&) {
      status = "no-oscillation";
      ctx.fail_point();
    } catch (const std::domain_error&) {
      status = "invalid-point";
      ctx.fail_point();
    }
    csv << fmt(v) << ',' << fmt(f_static) << ',' << fmt(amp);
    if (with_rf_field) csv << ',' << fmt(f_rf_on);
    csv << ',' << status << '\n';
  }
  ctx.save("sweep.csv", csv.str());

  const auto span = [](const std::vector<double>& f) {
    if (f.size() < 2) return kNan;
    const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
    return *hi - *lo;
  };
  ctx.stats["points_measured"] = freqs.size();
  ctx.stats["span_Hz"] = span(freqs);
  ctx.stats["monotone_nondecreasing"] = std::is_sorted(freqs.begin(), freqs.end());
  if (with_rf_field) {
    ctx.stats["span_rf_Hz"] = span(freqs_rf);
    ctx.stats["rf_span_wider"] =
        freqs_rf.size() == freqs.size() && !freqs.empty() && span(freqs_rf) > span(freqs);
  }
}

// ---------------------------------------------------------------------------
// amp-vs-rf

void run_amp_vs_rf(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  double f_inj = c.drive.f_rf;
  std::ostringstream csv;
  csv << "axis_value,amplitude_V,locked,status\n";
  try {
    if (f_inj == 0.0) f_inj = free_running_frequency(c.magnet, c.sources, c.drive.i_dc,
                                                     c.integrator);
  } catch (const NoOscillationError&) {
    ctx.stats["status"] = "no-oscillation";
    ctx.fail_point();
    ctx.save("sweep.csv", csv.str());
    return;
  }

  FieldSources sources = c.sources;
  if (c.bead) {
    sources.bead_field =
        bead_perturbation(*c.bead, c.magnet, sources.h_static, QuadratureConfig{}).value;
  }

  double best_amp = 0.0;
  double best_irf = kNan;
  int locked_count = 0;
  for (double v : sweep_values(c.sweep)) {
    std::string status = "ok";
    double amp = kNan;
    bool locked = false;
    try {
      DriveCurrent drive = c.drive;
      drive.i_rf = v;
      drive.f_rf = f_inj;
      const Trajectory traj = run_sim(c.magnet, sources, drive, c.integrator, c.seed);
      const std::vector<double> v_trim =
          trim_transient(voltage_series(traj, c.magnet.m_p, c.resistance), c.integrator.trim);
      amp = v > 0.0 ? amplitude_near(v_trim, traj.dt, f_inj, kReadoutHalfwidth)
                    : steady_amplitude(v_trim, traj.dt);
      locked = v > 0.0 &&
               is_locked(trim_transient(axis_series(traj, c.magnet.easy_axis),
                                        c.integrator.trim),
                         traj.dt, f_inj);
      locked_count += locked ? 1 : 0;
      if (amp > best_amp) {
        best_amp = amp;
        best_irf = v;
      }
    } catch (const NoOscillationError&) {
      status = "no-oscillation";
      ctx.fail_point();
    }
    csv << fmt(v) << ',' << fmt(amp) << ',' << (locked ? 1 : 0) << ',' << status << '\n';
  }
  ctx.save("sweep.csv", csv.str());
  ctx.stats["f_injection_Hz"] = f_inj;
  ctx.stats["max_amplitude_V"] = best_amp;
  ctx.stats["max_amplitude_at_A"] = best_irf;
  ctx.stats["locked_points"] = locked_count;
}

// ---------------------------------------------------------------------------
// bias-vs-area

void run_bias_vs_area(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const double base_area = c.magnet.geometry.length * c.magnet.geometry.width;
  std::ostringstream csv;
  csv << "axis_value,area_m2,bias_A,frequency_Hz,status\n";
  std::vector<double> biases;
  for (double side : sweep_values(c.sweep)) {
    ExperimentConfig point = c;
    std::string status = "ok";
    double bias = kNan;
    double achieved = kNan;
    try {
      apply_sweep_value(point, c.sweep.symbol, side);
      // Same current density <=> same dynamics once the barrier scales with
      // area, so the anchor bias transfers quadratically from the base side.
      const double area = point.magnet.geometry.length * point.magnet.geometry.width;
      const double guess = c.drive.i_dc * area / base_area;
      std::vector<double> scan_bias;
      std::vector<double> scan_freq;
      for (int k = 0; k < 9; ++k) {
        const double b = guess * (0.70 + 0.10 * static_cast<double>(k));
        try {
          const double f = free_running_frequency(point.magnet, point.sources, b,
                                                  point.integrator);
          scan_bias.push_back(b);
          scan_freq.push_back(f);
        } catch (const NoOscillationError&) {
          // below threshold or over the band edge; skip the scan point
        }
      }
      bool found = false;
      for (std::size_t k = 0; k + 1 < scan_bias.size(); ++k) {
        const double lo = scan_freq[k] - c.sweep.target;
        const double hi = scan_freq[k + 1] - c.sweep.target;
        if (lo * hi <= 0.0) {
          const double t = hi == lo ? 0.0 : -lo / (hi - lo);
          bias = scan_bias[k] + t * (scan_bias[k + 1] - scan_bias[k]);
          achieved = free_running_frequency(point.magnet, point.sources, bias, point.integrator);
          biases.push_back(bias);
          found = true;
          break;
        }
      }
      if (!found) {
        status = "no-crossing";
        ctx.fail_point();
      }
    } catch (const NoOscillationError&) {
      status = "no-oscillation";
      ctx.fail_point();
    } catch (const std::domain_error&) {
      status = "invalid-point";
      ctx.fail_point();
    }
    const double area = side * side;
    csv << fmt(side) << ',' << fmt(area) << ',' << fmt(bias) << ',' << fmt(achieved) << ','
        << status << '\n';
  }
  ctx.save("sweep.csv", csv.str());
  ctx.stats["target_Hz"] = c.sweep.target;
  ctx.stats["points_measured"] = biases.size();
  ctx.stats["bias_monotone_increasing"] = std::is_sorted(biases.begin(), biases.end());
}

// ---------------------------------------------------------------------------
// montecarlo

void run_montecarlo(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  std::ostringstream csv;
  csv << "replica,seed,frequency_Hz,amplitude,status\n";
  std::vector<double> freqs;
  for (int r = 0; r < c.montecarlo.replicas; ++r) {
    const std::uint64_t seed = replica_seed(c.seed, static_cast<std::uint64_t>(r));
    std::string status = "ok";
    double f = kNan;
    double amp = kNan;
    try {
      const Trajectory traj = run_sim(c.magnet, c.sources, c.drive, c.integrator, seed);
      const std::vector<double> m_trim =
          trim_transient(axis_series(traj, c.magnet.easy_axis), c.integrator.trim);
      f = dominant_frequency(m_trim, traj.dt);
      amp = steady_amplitude(m_trim, traj.dt);
      freqs.push_back(f);
    } catch (const NoOscillationError&) {
      status = "no-oscillation";
      ctx.fail_point();
    }
    csv << r << ',' << seed << ',' << fmt(f) << ',' << fmt(amp) << ',' << status << '\n';
  }
  ctx.save("replicas.csv", csv.str());

  double mean = kNan;
  double sd = kNan;
  if (!freqs.empty()) {
    mean = 0.0;
    for (double f : freqs) mean += f;
    mean /= static_cast<double>(freqs.size());
    if (freqs.size() > 1) {
      double ss = 0.0;
      for (double f : freqs) ss += (f - mean) * (f - mean);
      sd = std::sqrt(ss / static_cast<double>(freqs.size() - 1));
    }
  }

  std::ostringstream hist;
  hist << "bin_low_Hz,bin_high_Hz,count\n";
  if (!freqs.empty()) {
    auto [lo_it, hi_it] = std::minmax_element(freqs.begin(), freqs.end());
    double lo = *lo_it;
    double hi = *hi_it;
    if (hi == lo) {
      lo -= 0.5;
      hi += 0.5;
    }
    const int bins = c.montecarlo.histogram_bins;
    std::vector<int> count(static_cast<std::size_t>(bins), 0);
    for (double f : freqs) {
      int b = static_cast<int>(static_cast<double>(bins) * (f - lo) / (hi - lo));
      b = std::clamp(b, 0, bins - 1);
      ++count[static_cast<std::size_t>(b)];
    }
    for (int b = 0; b < bins; ++b) {
      const double w = (hi - lo) / static_cast<double>(bins);
      hist << fmt(lo + w * b) << ',' << fmt(lo + w * (b + 1)) << ','
           << count[static_cast<std::size_t>(b)] << '\n';
    }
  }
  ctx.save("histogram.csv", hist.str());

  ctx.stats["replicas"] = c.montecarlo.replicas;
  ctx.stats["measured"] = freqs.size();
  ctx.stats["mean_Hz"] = mean;
  ctx.stats["std_Hz"] = sd;
  ctx.stats["two_sigma_Hz"] = 2.0 * sd;
  ctx.stats["margin_Hz"] = c.montecarlo.margin;
  ctx.stats["within_margin"] = std::isfinite(sd) && 2.0 * sd <= c.montecarlo.margin;
}

// ---------------------------------------------------------------------------
// sensitivity-sweep

void run_sensitivity_sweep(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  std::ostringstream csv;
  csv << "axis_value,f_injection_Hz,baseline_amplitude_V,bead_amplitude_V,sensitivity,status\n";
  double best_sens = 0.0;
  double best_axis = kNan;
  for (double v : sweep_values(c.sweep)) {
    ExperimentConfig point = c;
    std::string status = "ok";
    double f_inj = kNan;
    double a0 = kNan;
    double a1 = kNan;
    double sens = kNan;
    try {
      if (!point.bead) point.bead = BeadParams{};
      apply_sweep_value(point, c.sweep.symbol, v);
      f_inj = point.drive.f_rf;
      if (point.drive.i_rf > 0.0 && f_inj == 0.0) {
        f_inj = free_running_frequency(point.magnet, point.sources, point.drive.i_dc,
                                       point.integrator);
      }
      DriveCurrent drive = point.drive;
      drive.f_rf = f_inj;
      const auto measure = [&](const Vec3& bead_field) {
        FieldSources sources = point.sources;
        sources.bead_field = bead_field;
        const Trajectory traj = run_sim(point.magnet, sources, drive, point.integrator,
                                        point.seed);
        const std::vector<double> v_trim = trim_transient(
            voltage_series(traj, point.magnet.m_p, point.resistance), point.integrator.trim);
        return drive.i_rf > 0.0 ? amplitude_near(v_trim, traj.dt, f_inj, kReadoutHalfwidth)
                                : steady_amplitude(v_trim, traj.dt);
      };
      a0 = measure(Vec3{});
      const Vec3 bead_field =
          bead_perturbation(*point.bead, point.magnet, point.sources.h_static,
                            QuadratureConfig{})
              .value;
      a1 = measure(bead_field);
      sens = sensitivity(a0, a1);
      if (sens > best_sens) {
        best_sens = sens;
        best_axis = v;
      }
    } catch (const NoOscillationError&) {
      status = "no-oscillation";
      ctx.fail_point();
    } catch (const std::domain_error&) {
      status = "invalid-point";
      ctx.fail_point();
    }
    csv << fmt(v) << ',' << fmt(f_inj) << ',' << fmt(a0) << ',' << fmt(a1) << ',' << fmt(sens)
        << ',' << status << '\n';
  }
  ctx.save("sweep.csv", csv.str());
  ctx.stats["max_sensitivity"] = best_sens;
  ctx.stats["max_sensitivity_at"] = best_axis;
}

// ---------------------------------------------------------------------------
// drift-calibration

std::vector<BiasPoint> measure_bias_curve(const MagnetParams& magnet,
                                          const FieldSources& sources, const ArrayConfig& array,
                                          const IntegratorChoice& integ, RunContext& ctx) {
  std::vector<BiasPoint> curve;
  std::ostringstream csv;
  csv << "bias_A,frequency_Hz\n";
  for (int k = 0; k < array.curve_points; ++k) {
    const double b = array.curve_bias_min +
                     (array.curve_bias_max - array.curve_bias_min) * static_cast<double>(k) /
                         static_cast<double>(array.curve_points - 1);
    const double f = free_running_frequency(magnet, sources, b, integ);
    curve.push_back(BiasPoint{b, f});
    csv << fmt(b) << ',' << fmt(f) << '\n';
  }
  ctx.save("bias_curve.csv", csv.str());
  return curve;
}

void run_drift_calibration(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const std::vector<BiasPoint> curve =
      measure_bias_curve(c.magnet, c.sources, c.array, c.integrator, ctx);

  double b0 = kNan;
  try {
    b0 = plan_channels(1, c.array.target, c.array.margin, curve, c.array.bias_resolution)
             .channels[0]
             .bias;
  } catch (const PlanningError& e) {
    ctx.stats["status"] = std::string("planning-failed: ") + e.what();
    ctx.fail_point();
    return;
  }
  ctx.stats["initial_bias_A"] = b0;
  ctx.stats["target_Hz"] = c.array.target;

  std::ostringstream csv;
  csv << "axis_value,bias_A,frequency_Hz,probes,error_Hz,status\n";
  double worst = 0.0;
  int most_probes = 0;
  for (double v : sweep_values(c.sweep)) {
    ExperimentConfig point = c;
    std::string status = "ok";
    double bias = kNan;
    double f = kNan;
    int probes = 0;
    try {
      apply_sweep_value(point, c.sweep.symbol, v);
      const auto measure = [&](double b) {
        return free_running_frequency(point.magnet, point.sources, b, point.integrator);
      };
      const CalibrationResult result =
          calibrate_bias(measure, b0, c.array.target, c.array.margin, c.array.bias_resolution);
      bias = result.bias;
      f = result.frequency;
      probes = static_cast<int>(result.trace.size());
      worst = std::max(worst, std::abs(f - c.array.target));
      most_probes = std::max(most_probes, probes);
    } catch (const CalibrationError& e) {
      status = "calibration-failed";
      probes = static_cast<int>(e.trace().size());
      ctx.fail_point();
    } catch (const NoOscillationError&) {
      status = "no-oscillation";
      ctx.fail_point();
    } catch (const std::domain_error&) {
      status = "invalid-point";
      ctx.fail_point();
    }
    csv << fmt(v) << ',' << fmt(bias) << ',' << fmt(f) << ',' << probes << ','
        << fmt(std::isfinite(f) ? f - c.array.target : kNan) << ',' << status << '\n';
  }
  ctx.save("sweep.csv", csv.str());
  ctx.stats["max_error_Hz"] = worst;
  ctx.stats["max_probes"] = most_probes;
  ctx.stats["all_within_half_margin"] = ctx.failed_points == 0 && worst <= c.array.margin / 2.0;
}

// ---------------------------------------------------------------------------
// array-demo

void run_array_demo(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const std::vector<BiasPoint> curve =
      measure_bias_curve(c.magnet, c.sources, c.array, c.integrator, ctx);

  ChannelPlan plan;
  try {
    plan = plan_channels(c.array.channels, c.array.f_start, c.array.margin, curve,
                         c.array.bias_resolution);
  } catch (const PlanningError& e) {
    ctx.stats["status"] = std::string("planning-failed: ") + e.what();
    ctx.stats["failed_channel"] = e.channel();
    ctx.fail_point();
    return;
  }

  std::ostringstream plan_csv;
  plan_csv << "channel,f_target_Hz,f_injection_Hz,bias_A\n";
  for (const ChannelAssignment& ch : plan.channels) {
    plan_csv << ch.index << ',' << fmt(ch.f_target) << ',' << fmt(ch.f_injection) << ','
             << fmt(ch.bias) << '\n';
  }
  ctx.save("plan.csv", plan_csv.str());

  ArraySetup setup;
  setup.magnet = c.magnet;
  setup.sources = c.sources;
  setup.sources.bead_field = Vec3{};
  setup.i_rf = c.array.i_rf;
  if (c.bead) setup.bead = *c.bead;
  setup.resistance = c.resistance;
  setup.duration = c.integrator.duration;
  setup.dt = c.integrator.dt;
  setup.trim_fraction = c.integrator.trim;
  setup.calibrate = c.array.calibrate;

  const std::size_t n = plan.channels.size();
  const std::vector<bool> no_beads(n, false);
  std::vector<bool> bead_bound(n, false);
  bead_bound[static_cast<std::size_t>(c.array.bead_channel)] = true;
  const double halfwidth = 0.45 * plan.margin;

  std::ostringstream channels_csv;
  channels_csv << "trial,channel,f_injection_Hz,bias_A,baseline_locked,measured_locked,"
                  "own_baseline_amplitude_V,own_measured_amplitude_V,"
                  "mixed_baseline_amplitude_V,mixed_measured_amplitude_V,"
                  "relative_shift,threshold,detected,bead_truth\n";
  std::ostringstream trials_csv;
  trials_csv << "trial,seed_baseline,seed_measured,detected_count,bead_detected,"
                "false_positives,status\n";

  int hits = 0;
  int fp_trials = 0;
  int clean = 0;
  int done = 0;
  for (int t = 0; t < c.array.trials; ++t) {
    const std::uint64_t master = c.seed + static_cast<std::uint64_t>(t);
    const std::uint64_t seed_base = replica_seed(master, 0);
    const std::uint64_t seed_meas = replica_seed(master, 1);
    std::string status = "ok";
    int detected_count = 0;
    int false_positives = 0;
    bool hit = false;
    try {
      const ArrayRunResult baseline = run_array(plan, setup, {}, no_beads, seed_base);
      const ArrayRunResult measured = run_array(plan, setup, {}, bead_bound, seed_meas);
      const Spectrum spec_base = compute_spectrum(baseline.mixed, baseline.dt);
      const Spectrum spec_meas = compute_spectrum(measured.mixed, measured.dt);
      const std::vector<double> amps_base = channel_amplitudes(spec_base, plan, halfwidth);
      const std::vector<double> amps_meas = channel_amplitudes(spec_meas, plan, halfwidth);
      const DetectionReport report = detect(plan, amps_base, amps_meas, c.array.threshold);

      for (std::size_t ch = 0; ch < n; ++ch) {
        const ChannelDecision& d = report.channels[ch];
        if (d.detected && !bead_bound[ch]) ++false_positives;
        if (d.detected && bead_bound[ch]) hit = true;
        channels_csv << t << ',' << plan.channels[ch].index << ','
                     << fmt(plan.channels[ch].f_injection) << ',' << fmt(baseline.truth[ch].bias)
                     << ',' << (baseline.truth[ch].locked ? 1 : 0) << ','
                     << (measured.truth[ch].locked ? 1 : 0) << ','
                     << fmt(baseline.truth[ch].amplitude) << ','
                     << fmt(measured.truth[ch].amplitude) << ',' << fmt(d.baseline) << ','
                     << fmt(d.measured) << ',' << fmt(d.relative_shift) << ','
                     << fmt(d.threshold) << ',' << (d.detected ? 1 : 0) << ','
                     << (bead_bound[ch] ? 1 : 0) << '\n';
      }
      detected_count = static_cast<int>(report.detected_count);
      hits += hit ? 1 : 0;
      fp_trials += false_positives > 0 ? 1 : 0;
      clean += (hit && false_positives == 0) ? 1 : 0;
      ++done;
      if (t == 0) {
        ctx.save("baseline_spectrum.csv", spectrum_csv(spec_base));
        ctx.save("measured_spectrum.csv", spectrum_csv(spec_meas));
      }
    } catch (const NoOscillationError&) {
      status = "no-oscillation";
      ctx.fail_point();
    } catch (const CalibrationError&) {
      status = "calibration-failed";
      ctx.fail_point();
    }
    trials_csv << t << ',' << seed_base << ',' << seed_meas << ',' << detected_count << ','
               << (hit ? 1 : 0) << ',' << false_positives << ',' << status << '\n';
  }
  ctx.save("channels.csv", channels_csv.str());
  ctx.save("trials.csv", trials_csv.str());

  ctx.stats["channels"] = plan.channels.size();
  ctx.stats["f_first_Hz"] = plan.channels.front().f_injection;
  ctx.stats["f_last_Hz"] = plan.channels.back().f_injection;
  ctx.stats["margin_Hz"] = plan.margin;
  ctx.stats["i_rf_A"] = c.array.i_rf;
  ctx.stats["threshold"] = c.array.threshold;
  ctx.stats["bead_channel"] = c.array.bead_channel;
  ctx.stats["trials"] = c.array.trials;
  ctx.stats["trials_completed"] = done;
  ctx.stats["bead_hits"] = hits;
  ctx.stats["false_positive_trials"] = fp_trials;
  ctx.stats["clean_trials"] = clean;
  ctx.stats["clean_fraction"] =
      c.array.trials > 0 ? static_cast<double>(clean) / static_cast<double>(c.array.trials)
                         : kNan;
}

// ---------------------------------------------------------------------------
// locking-range

void run_locking_range(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  std::ostringstream csv;
  csv << "axis_value,free_running_Hz,lower_Hz,upper_Hz,width_Hz,found,status\n";
  std::vector<double> widths;
  for (double v : sweep_values(c.sweep)) {
    std::string status = "ok";
    LockingRange range;
    try {
      DriveCurrent drive = c.drive;
      drive.i_rf = v;
      drive.f_rf = 0.0;  // the scan supplies its own injection frequencies
      LockingScanConfig scan;
      scan.halfwidth = c.locking.halfwidth;
      scan.points = c.locking.points;
      scan.duration = c.integrator.duration;
      scan.dt = c.integrator.dt;
      scan.trim_fraction = c.integrator.trim;
      range = locking_range(c.magnet, c.sources, drive, scan);
      if (range.found) widths.push_back(range.width());
    } catch (const NoOscillationError&) {
      status = "no-oscillation";
      ctx.fail_point();
    }
    csv << fmt(v) << ',' << fmt(range.free_running) << ','
        << fmt(range.found ? range.lower : kNan) << ',' << fmt(range.found ? range.upper : kNan)
        << ',' << fmt(range.found ? range.width() : kNan) << ',' << (range.found ? 1 : 0) << ','
        << status << '\n';
  }
  ctx.save("sweep.csv", csv.str());
  ctx.stats["points_found"] = widths.size();
  ctx.stats["widths_nondecreasing"] =
      widths.size() == static_cast<std::size_t>(c.sweep.points) &&
      std::is_sorted(widths.begin(), widths.end());
  if (!widths.empty()) {
    ctx.stats["min_width_Hz"] = widths.front();
    ctx.stats["max_width_Hz"] = widths.back();
  }
}

}  // namespace

RunRecord run_experiment(const ExperimentConfig& config) {
  const fs::path dir = config.resolved_output();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory '" + dir.string() +
                             "': " + ec.message());
  }

  RunContext ctx{config, dir};
  switch (config.kind) {
    case ExperimentKind::single_run: run_single(ctx); break;
    case ExperimentKind::freq_vs_bias: run_freq_vs_bias(ctx); break;
    case ExperimentKind::amp_vs_rf: run_amp_vs_rf(ctx); break;
    case ExperimentKind::bias_vs_area: run_bias_vs_area(ctx); break;
    case ExperimentKind::montecarlo: run_montecarlo(ctx); break;
    case ExperimentKind::sensitivity_sweep: run_sensitivity_sweep(ctx); break;
    case ExperimentKind::drift_calibration: run_drift_calibration(ctx); break;
    case ExperimentKind::array_demo: run_array_demo(ctx); break;
    case ExperimentKind::locking_range: run_locking_range(ctx); break;
  }

  RunRecord record;
  record.run_id = to_string(config.kind) + "-" + std::to_string(config.seed);
  record.directory = dir.string();
  record.success = ctx.success;
  record.failed_points = ctx.failed_points;
  record.files = ctx.files;

  ordered_json summary;
  summary["schema_version"] = 1;
  summary["run_id"] = record.run_id;
  summary["kind"] = to_string(config.kind);
  summary["seed"] = config.seed;
  summary["success"] = ctx.success;
  summary["failed_points"] = ctx.failed_points;
  summary["config"] = config_json(config);
  summary["stats"] = ctx.stats;
  ordered_json manifest = ordered_json::array();
  for (const FileEntry& f : ctx.files) {
    ordered_json entry;
    entry["name"] = f.name;
    entry["bytes"] = f.bytes;
    entry["fnv1a64"] = f.fnv1a64;
    manifest.push_back(entry);
  }
  summary["files"] = manifest;
  record.summary_text = summary.dump(2) + "\n";

  std::ofstream out(dir / "summary.json", std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write summary.json");
  out << record.summary_text;
  return record;
}

}  // namespace stno
