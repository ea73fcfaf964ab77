#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "stno/array.hpp"
#include "stno/bead.hpp"
#include "stno/magnet.hpp"
#include "stno/transducer.hpp"

namespace stno {

/// The experiment families the harness can run.
enum class ExperimentKind {
  single_run,
  freq_vs_bias,
  amp_vs_rf,
  bias_vs_area,
  montecarlo,
  sensitivity_sweep,
  drift_calibration,
  array_demo,
  locking_range,
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from(const std::string& name);  // throws std::invalid_argument

/// Integrator selection; `automatic` picks the stochastic stepper whenever the
/// thermal field is enabled and the deterministic one otherwise.
enum class SchemeChoice { automatic, rk4, heun };

struct IntegratorChoice {
  double dt = 1e-12;        // s
  double duration = 100e-9; // s
  SchemeChoice scheme = SchemeChoice::automatic;
  double trim = 0.25;       // transient fraction dropped before analysis
};

/// One linear sweep axis. Units are resolved by the symbol.
struct SweepSpec {
  std::string symbol;
  double start = 0.0;  // SI
  double stop = 0.0;   // SI
  int points = 0;
  double target = 10.0e9;  // Hz, goal frequency for the area sweep
};

/// Array planning and detection knobs (array-demo and drift-calibration).
struct ArrayConfig {
  int channels = 20;
  double f_start = 9.5e9;        // Hz
  double margin = 0.1e9;         // Hz
  double bias_resolution = 10e-6;  // A
  double i_rf = 200e-6;          // A, shared injection amplitude
  int bead_channel = 7;          // which channel carries the label in the demo
  int trials = 1;                // seeded repetitions of the baseline/bead pair
  double threshold = 0.025;      // relative amplitude-shift decision level
  double target = 10.0e9;        // Hz, drift-calibration goal frequency
  double curve_bias_min = 1.39e-3;  // A, bias-curve calibration range
  double curve_bias_max = 1.72e-3;  // A
  int curve_points = 12;
  bool calibrate = false;        // force per-channel recalibration in the demo
};

struct MonteCarloConfig {
  int replicas = 100;
  double margin = 0.1e9;  // Hz, spread is compared against this channel margin
  int histogram_bins = 20;
};

struct LockingConfig {
  double halfwidth = 0.75e9;  // Hz, scan span around the free-running line
  int points = 41;            // injection frequencies across the span
};

/// Fully resolved harness configuration, SI units throughout.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::single_run;
  std::uint64_t seed = 1;
  std::string output;  // directory; empty -> "runs/<kind>"

  MagnetParams magnet;
  ResistancePair resistance;
  FieldSources sources;
  DriveCurrent drive;                // drive.f_rf == 0 with i_rf > 0 -> inject at
                                     // the measured free-running frequency
  std::optional<BeadParams> bead;
  IntegratorChoice integrator;

  SweepSpec sweep;
  ArrayConfig array;
  MonteCarloConfig montecarlo;
  LockingConfig locking;

  std::string resolved_output() const {
    return output.empty() ? "runs/" + to_string(kind) : output;
  }
};

/// Parse a configuration document (sections of unit-suffixed key = value
/// lines; grammar documented in the README). Unknown sections or keys, bad
/// units, and malformed values raise ConfigError with key path and line.
ExperimentConfig parse_config(const std::string& text);

/// parse_config over the contents of `path`; throws std::runtime_error when
/// the file cannot be read.
ExperimentConfig load_config(const std::string& path);

}  // namespace stno
