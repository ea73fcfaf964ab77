#include "stno/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stno/errors.hpp"

namespace stno {

std::vector<double> trim_transient(const std::vector<double>& series, double fraction) {
  if (!(fraction >= 0.0) || fraction >= 1.0) {
    throw std::invalid_argument("trim_transient: fraction must lie in [0, 1)");
  }
  const auto skip = static_cast<std::size_t>(std::floor(fraction * series.size()));
  return {series.begin() + static_cast<std::ptrdiff_t>(skip), series.end()};
}

namespace {

/// Dominant in-band peak, or throws NoOscillationError.
PeakEstimate dominant_peak(const std::vector<double>& series, double dt,
                           const SpectralOptions& opts) {
  if (series.size() < 1024) {
    throw std::invalid_argument("dominant_frequency: need at least 1024 samples");
  }
  // Remove the mean so DC leakage through the window sidelobes cannot pose as
  // a line, and reject (numerically) constant series outright.
  double mean = 0.0;
  for (double x : series) mean += x;
  mean /= static_cast<double>(series.size());
  double var = 0.0;
  std::vector<double> centered(series.size());
  for (std::size_t k = 0; k < series.size(); ++k) {
    centered[k] = series[k] - mean;
    var += centered[k] * centered[k];
  }
  var /= static_cast<double>(series.size());
  const double var_floor = 1e-12 * (std::abs(mean) + 1e-12);
  if (var < var_floor * var_floor) {
    throw NoOscillationError("series is constant to numerical precision");
  }
  const Spectrum spec = compute_spectrum(centered, dt, opts.window, opts.pad_factor);
  const double raw_bin = 1.0 / (static_cast<double>(spec.raw_size) * dt);
  const double f_min = opts.min_frequency > 0.0 ? opts.min_frequency : 3.0 * raw_bin;
  const double f_max = spec.frequency(spec.size() - 1);
  if (f_min >= f_max) {
    throw std::invalid_argument("dominant_peak: record too short for the frequency floor");
  }

  const auto k_lo = spec.bin_of(f_min);
  std::size_t best = k_lo;
  std::vector<double> band(spec.amplitude.begin() + static_cast<std::ptrdiff_t>(k_lo),
                           spec.amplitude.end());
  for (std::size_t k = k_lo; k < spec.size(); ++k) {
    if (spec.amplitude[k] > spec.amplitude[best]) best = k;
  }

  const std::size_t mid = band.size() / 2;
  std::nth_element(band.begin(), band.begin() + static_cast<std::ptrdiff_t>(mid), band.end());
  const double median = band[mid];
  const double peak = spec.amplitude[best];
  if (!(peak > 0.0) || peak < opts.peak_to_median * median) {
    throw NoOscillationError("no spectral line stands clear of the in-band floor");
  }
  return interpolate_peak(spec, best);
}

}  // namespace

double dominant_frequency(const std::vector<double>& series, double dt,
                          const SpectralOptions& opts) {
  return dominant_peak(series, dt, opts).frequency;
}

double steady_amplitude(const std::vector<double>& series, double dt,
                        const SpectralOptions& opts) {
  return dominant_peak(series, dt, opts).amplitude;
}

double amplitude_near(const std::vector<double>& series, double dt, double frequency,
                      double halfwidth, const SpectralOptions& opts) {
  if (!(halfwidth > 0.0)) {
    throw std::invalid_argument("amplitude_near: halfwidth must be positive");
  }
  const Spectrum spec = compute_spectrum(series, dt, opts.window, opts.pad_factor);
  const auto peak = find_peak(spec, frequency - halfwidth, frequency + halfwidth);
  if (!peak) {
    throw std::invalid_argument("amplitude_near: search window narrower than one bin");
  }
  return peak->amplitude;
}

bool is_locked(const std::vector<double>& series, double dt, double f_injection,
               double tolerance, const SpectralOptions& opts) {
  double f;
  try {
    f = dominant_frequency(series, dt, opts);
  } catch (const NoOscillationError&) {
    return false;
  }
  if (tolerance <= 0.0) {
    const auto padded = static_cast<double>(series.size() * opts.pad_factor);
    tolerance = 1.0 / (padded * dt);
  }
  return std::abs(f - f_injection) <= tolerance;
}

double sensitivity(double baseline_amplitude, double perturbed_amplitude) {
  if (!(baseline_amplitude > 0.0)) {
    throw std::domain_error("sensitivity: baseline amplitude must be positive");
  }
  return std::abs(perturbed_amplitude - baseline_amplitude) / baseline_amplitude;
}

LockingRange locking_range(const MagnetParams& params, const FieldSources& sources,
                           const DriveCurrent& drive, const LockingScanConfig& scan) {
  if (scan.points < 3) throw std::invalid_argument("locking_range: need at least 3 scan points");
  if (!(scan.halfwidth > 0.0)) {
    throw std::invalid_argument("locking_range: halfwidth must be positive");
  }

  IntegratorConfig integ;
  integ.dt = scan.dt;
  integ.scheme = sources.thermal_enabled ? Scheme::heun : Scheme::rk4;

  const bool injection_present = drive.i_rf > 0.0;

  const auto easy_component = [&](const Trajectory& traj) {
    std::vector<double> s(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) s[i] = traj.m[i].dot(params.easy_axis);
    return trim_transient(s, scan.trim_fraction);
  };

  DriveCurrent free_drive = drive;
  free_drive.i_rf = 0.0;
  const Trajectory free_traj =
      simulate(default_initial_state(params), params, sources, free_drive, integ, scan.duration);
  LockingRange result;
  result.free_running = dominant_frequency(easy_component(free_traj), scan.dt, scan.spectral);

  // No injection signal means nothing to lock to; the scan would only
  // rediscover the free-running line at zero detuning.
  if (!injection_present) return result;

  std::vector<char> locked(static_cast<std::size_t>(scan.points), 0);
  std::vector<double> freqs(static_cast<std::size_t>(scan.points), 0.0);
  for (int i = 0; i < scan.points; ++i) {
    const double f_inj = result.free_running - scan.halfwidth +
                         2.0 * scan.halfwidth * static_cast<double>(i) /
                             static_cast<double>(scan.points - 1);
    DriveCurrent locked_drive = drive;
    locked_drive.f_rf = f_inj;
    const Trajectory traj = simulate(default_initial_state(params), params, sources,
                                     locked_drive, integ, scan.duration);
    freqs[static_cast<std::size_t>(i)] = f_inj;
    locked[static_cast<std::size_t>(i)] = is_locked(easy_component(traj), scan.dt, f_inj,
                                                    scan.tolerance, scan.spectral)
                                              ? 1
                                              : 0;
  }

  // Widest contiguous run of locked scan points.
  int best_lo = -1;
  int best_len = 0;
  int run_lo = -1;
  for (int i = 0; i <= scan.points; ++i) {
    const bool on = i < scan.points && locked[static_cast<std::size_t>(i)] != 0;
    if (on && run_lo < 0) run_lo = i;
    if (!on && run_lo >= 0) {
      if (i - run_lo > best_len) {
        best_len = i - run_lo;
        best_lo = run_lo;
      }
      run_lo = -1;
    }
  }
  if (best_len > 0) {
    result.found = true;
    result.lower = freqs[static_cast<std::size_t>(best_lo)];
    result.upper = freqs[static_cast<std::size_t>(best_lo + best_len - 1)];
  }
  return result;
}

}  // namespace stno
