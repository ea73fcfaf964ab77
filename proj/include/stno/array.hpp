#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "stno/bead.hpp"
#include "stno/dynamics.hpp"
#include "stno/magnet.hpp"
#include "stno/spectrum.hpp"
#include "stno/transducer.hpp"

namespace stno {

/// One sample of a measured bias -> free-running-frequency curve.
struct BiasPoint {
  double bias = 0.0;       // A
  double frequency = 0.0;  // Hz
};

/// Operating point assigned to one array element.
struct ChannelAssignment {
  int index = 0;
  double f_target = 0.0;     // Hz, planned oscillation frequency
  double f_injection = 0.0;  // Hz, injection tone / readout frequency (= f_target)
  double bias = 0.0;         // A, grid-quantized dc bias
  double i_rf = 0.0;         // A, injection amplitude; 0 = use the array default
};

struct ChannelPlan {
  std::vector<ChannelAssignment> channels;
  double margin = 0.0;           // Hz, spacing between adjacent tones
  double bias_resolution = 0.0;  // A, dc source grid
};

/// Place `count` channels at f_start, f_start + margin, ... by inverting the
/// measured bias curve (piecewise-linear) and snapping each bias to the source
/// grid. The curve must be strictly monotone in both coordinates. Throws
/// PlanningError when a target frequency falls outside the calibrated range.
ChannelPlan plan_channels(int count, double f_start, double margin,
                          const std::vector<BiasPoint>& bias_curve,
                          double bias_resolution = 10e-6);

/// Passive summing network. Default: equal weights 1/N.
struct CouplingModel {
  std::vector<double> weights;
  static CouplingModel uniform(std::size_t count);
};

/// Weighted sum of equally long channel signals on the shared output line.
std::vector<double> mix(const std::vector<std::vector<double>>& signals,
                        const CouplingModel& coupling);

/// One frequency measurement taken during calibration.
using CalibrationProbe = std::pair<double, double>;  // (bias, measured frequency)

struct CalibrationResult {
  double bias = 0.0;       // A, calibrated grid point
  double frequency = 0.0;  // Hz, measured at that bias
  std::vector<CalibrationProbe> trace;
};

/// Feedback tuning of the dc bias: walk the bias grid in the direction that
/// closes the frequency error, stopping at the grid point where the error
/// stops improving (the local minimum, which equals the exhaustive-scan
/// optimum for a monotone frequency-bias response). Succeeds when that point
/// is within margin/2 of f_target. `measure` maps a bias to a frequency and
/// may throw NoOscillationError. Throws CalibrationError (with the probe
/// trace) when the best error exceeds margin/2, the response is flat, or the
/// probe budget runs out.
CalibrationResult calibrate_bias(const std::function<double(double)>& measure,
                                 double initial_bias, double f_target, double margin,
                                 double step = 10e-6, int max_probes = 64);

/// Multiplicative parameter drift applied to one device.
struct DeviceDrift {
  double ms_scale = 1.0;
  double alpha_scale = 1.0;
};

/// Everything the array runner needs besides the plan itself.
struct ArraySetup {
  MagnetParams magnet;
  FieldSources sources;         // bead_field left empty; beads enter per channel
  double i_rf = 20e-6;          // A, injection amplitude shared by all channels
  BeadParams bead;              // geometry/material of a bound label
  QuadratureConfig quadrature;
  ResistancePair resistance;
  TmrConvention convention = TmrConvention::parallel_min;
  double duration = 100e-9;     // s, simulated time per channel
  double dt = 1e-12;            // s
  double trim_fraction = 0.25;
  bool calibrate = false;       // re-tune each bias before the measurement run
  double calibration_duration = 60e-9;  // s, per calibration probe
  CouplingModel coupling;       // empty -> uniform over the plan
};

/// Ground truth and measurement for one channel of an array run.
struct ChannelRecord {
  int index = 0;
  double f_injection = 0.0;   // Hz
  double bias = 0.0;          // A, as actually driven (post-calibration)
  bool bead_bound = false;
  bool locked = false;        // from the channel's own magnetization trace
  double amplitude = 0.0;     // V, injection-frequency line of the channel's
                              // bridge-cancelled voltage trace
  double calibration_probes = 0.0;  // number of probes spent (0 = not calibrated)
};

struct ArrayRunResult {
  std::vector<double> mixed;         // V, shared line, transient already trimmed
  double dt = 0.0;                   // s
  std::vector<ChannelRecord> truth;
};

/// Simulate every channel of the plan (sequentially, deterministic per-channel
/// seeding), apply per-device drift and optional bead loading, optionally
/// re-calibrate each bias, and mix the voltage traces onto one line. Each
/// trace is read through a bridge against a matched reference junction, which
/// cancels the i(t) * R_ref drive feedthrough before mixing; the shared line
/// carries only the magnetoresistive oscillations.
ArrayRunResult run_array(const ChannelPlan& plan, const ArraySetup& setup,
                         const std::vector<DeviceDrift>& drift,
                         const std::vector<bool>& bead_bound, std::uint64_t seed);

/// Time-division schedule: contiguous blocks of at most `per_slot` sensors.
struct TdmSchedule {
  std::vector<std::pair<int, int>> slots;  // [first, last) sensor index ranges
  double slot_duration = 0.0;              // s
  double total_time() const { return slot_duration * static_cast<double>(slots.size()); }
};

TdmSchedule schedule_tdm(int total_sensors, int per_slot, double slot_duration);

/// Per-channel interpolated amplitudes at the plan's injection frequencies.
/// Requires search_halfwidth < margin/2 so channel windows cannot overlap.
std::vector<double> channel_amplitudes(const Spectrum& spectrum, const ChannelPlan& plan,
                                       double search_halfwidth);

/// detect() with one shared threshold across all channels of the plan.
DetectionReport detect(const ChannelPlan& plan, const std::vector<double>& baseline,
                       const std::vector<double>& measured, double threshold);

/// detect() with per-channel thresholds, labeled by the plan's channels.
DetectionReport detect(const ChannelPlan& plan, const std::vector<double>& baseline,
                       const std::vector<double>& measured,
                       const std::vector<double>& thresholds);

}  // namespace stno
