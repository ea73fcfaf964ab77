#pragma once

#include <cstddef>
#include <vector>

#include "stno/dynamics.hpp"
#include "stno/spectrum.hpp"

namespace stno {

/// Drop the leading `fraction` of a series (startup transient).
std::vector<double> trim_transient(const std::vector<double>& series, double fraction = 0.25);

/// Knobs shared by the spectral metrics.
struct SpectralOptions {
  Window window = Window::hann;
  int pad_factor = 4;
  /// Dominant peak must exceed this multiple of the median in-band amplitude,
  /// otherwise the series is declared non-oscillating.
  double peak_to_median = 10.0;
  /// Bins below this frequency are ignored (DC leakage guard). Zero selects
  /// three raw bin widths automatically.
  double min_frequency = 0.0;
};

/// Frequency of the strongest spectral component of a steady-state series.
/// Throws NoOscillationError when no peak stands clear of the noise floor.
double dominant_frequency(const std::vector<double>& series, double dt,
                          const SpectralOptions& opts = {});

/// Interpolated amplitude of the dominant spectral component. Same
/// no-oscillation contract as dominant_frequency.
double steady_amplitude(const std::vector<double>& series, double dt,
                        const SpectralOptions& opts = {});

/// Amplitude of the strongest component within +/- halfwidth of `frequency`.
double amplitude_near(const std::vector<double>& series, double dt, double frequency,
                      double halfwidth, const SpectralOptions& opts = {});

/// True when the dominant frequency agrees with f_injection within
/// `tolerance` (<= 0 selects one padded bin width). A non-oscillating series
/// is simply not locked.
bool is_locked(const std::vector<double>& series, double dt, double f_injection,
               double tolerance = 0.0, const SpectralOptions& opts = {});

/// Relative amplitude shift |a_perturbed - a_baseline| / a_baseline.
double sensitivity(double baseline_amplitude, double perturbed_amplitude);

/// Scan configuration for locking_range.
struct LockingScanConfig {
  double halfwidth = 0.75e9;   // Hz, scan span around the free-running line
  int points = 31;             // injection frequencies across the span
  double duration = 80e-9;     // s, simulated time per point
  double dt = 1e-12;           // s
  double trim_fraction = 0.25;
  double tolerance = 0.0;      // lock tolerance, <= 0 selects one padded bin
  SpectralOptions spectral;
};

struct LockingRange {
  double lower = 0.0;        // Hz, first locked injection frequency
  double upper = 0.0;        // Hz, last locked injection frequency
  double free_running = 0.0; // Hz, oscillator line with injection off
  bool found = false;

  double width() const { return found ? upper - lower : 0.0; }
};

/// Map the injection-locking interval: measure the free-running frequency,
/// then sweep the injection tone across +/- halfwidth and report the widest
/// contiguous run of locked points. The oscillation is read through the
/// easy-axis magnetization component.
LockingRange locking_range(const MagnetParams& params, const FieldSources& sources,
                           const DriveCurrent& drive, const LockingScanConfig& scan = {});

}  // namespace stno
