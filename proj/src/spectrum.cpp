#include "stno/spectrum.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace stno {

namespace {

constexpr double kPi = std::numbers::pi;

double window_value(Window window, std::size_t i, std::size_t n) {
  switch (window) {
    case Window::rectangular:
      return 1.0;
    case Window::hann:
      // Periodic form: its transform is exactly three Dirichlet kernels,
      // which interpolate_peak inverts analytically.
      return 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n)));
  }
  throw std::logic_error("window_value: unknown window");
}

/// Complex Dirichlet kernel D_n(delta) = sum_{j<n} exp(-2 pi i delta j / n),
/// with delta measured in bins of an n-point transform.
std::complex<double> dirichlet(double delta, std::size_t n) {
  const double nd = static_cast<double>(n);
  const double den = std::sin(kPi * delta / nd);
  const double magnitude = (den == 0.0) ? nd : std::sin(kPi * delta) / den;
  const double phase = -kPi * delta * (nd - 1.0) / nd;
  return magnitude * std::complex<double>(std::cos(phase), std::sin(phase));
}

/// Normalized window response at a tone offset of `delta` raw bins:
/// |W(delta)| / W(0), where W is the DFT of the window over the raw record.
double window_response(Window window, double delta, std::size_t n) {
  switch (window) {
    case Window::rectangular:
      return std::abs(dirichlet(delta, n)) / static_cast<double>(n);
    case Window::hann: {
      const std::complex<double> w = 0.5 * dirichlet(delta, n) -
                                     0.25 * (dirichlet(delta - 1.0, n) +
                                             dirichlet(delta + 1.0, n));
      return std::abs(w) / (0.5 * static_cast<double>(n));
    }
  }
  throw std::logic_error("window_response: unknown window");
}

}  // namespace

std::size_t Spectrum::bin_of(double frequency_hz) const {
  if (bin_width <= 0.0) throw std::logic_error("Spectrum::bin_of: empty spectrum");
  const double k = std::round(frequency_hz / bin_width);
  if (k < 0.0 || k >= static_cast<double>(size())) {
    throw std::out_of_range("Spectrum::bin_of: frequency outside the spectrum");
  }
  return static_cast<std::size_t>(k);
}

Spectrum compute_spectrum(const std::vector<double>& series, double dt, Window window,
                          int pad_factor) {
  const std::size_t n = series.size();
  if (n < 256) throw std::invalid_argument("compute_spectrum: need at least 256 samples");
  if (!(dt > 0.0)) throw std::invalid_argument("compute_spectrum: dt must be positive");
  if (pad_factor < 1) throw std::invalid_argument("compute_spectrum: pad_factor must be >= 1");

  const std::size_t padded = n * static_cast<std::size_t>(pad_factor);
  const std::size_t bins = padded / 2 + 1;

  double* in = fftw_alloc_real(padded);
  fftw_complex* out = fftw_alloc_complex(bins);
  if (in == nullptr || out == nullptr) {
    fftw_free(in);
    fftw_free(out);
    throw std::bad_alloc();
  }
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(padded), in, out, FFTW_ESTIMATE);
  if (plan == nullptr) {
    fftw_free(in);
    fftw_free(out);
    throw std::runtime_error("compute_spectrum: FFT planning failed");
  }

  double coherent_gain = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = window_value(window, i, n);
    in[i] = series[i] * w;
    coherent_gain += w;
  }
  std::fill(in + n, in + padded, 0.0);

  fftw_execute(plan);

  Spectrum result;
  result.amplitude.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double mag = std::hypot(out[k][0], out[k][1]);
    const bool one_sided_pair = k != 0 && !(padded % 2 == 0 && k == padded / 2);
    result.amplitude[k] = (one_sided_pair ? 2.0 : 1.0) * mag / coherent_gain;
  }
  result.bin_width = 1.0 / (static_cast<double>(padded) * dt);
  result.dt = dt;
  result.raw_size = n;
  result.padded_size = padded;
  result.window = window;
  result.pad_factor = pad_factor;

  fftw_destroy_plan(plan);
  fftw_free(in);
  fftw_free(out);
  return result;
}

PeakEstimate interpolate_peak(const Spectrum& spectrum, std::size_t bin) {
  const std::size_t last = spectrum.size() - 1;
  if (spectrum.size() == 0 || bin > last) {
    throw std::out_of_range("interpolate_peak: bin outside the spectrum");
  }
  const auto& a = spectrum.amplitude;

  double delta = 0.0;
  if (bin > 0 && bin < last && a[bin] > 0.0 && a[bin - 1] > 0.0 && a[bin + 1] > 0.0) {
    const double y0 = std::log(a[bin - 1]);
    const double y1 = std::log(a[bin]);
    const double y2 = std::log(a[bin + 1]);
    const double curvature = y0 - 2.0 * y1 + y2;
    if (curvature < 0.0) {
      delta = std::clamp(0.5 * (y0 - y2) / curvature, -1.0, 1.0);
    }
  }

  PeakEstimate peak;
  peak.bin = bin;
  peak.frequency = (static_cast<double>(bin) + delta) * spectrum.bin_width;
  const double raw_offset = delta / static_cast<double>(spectrum.pad_factor);
  const double response = window_response(spectrum.window, raw_offset, spectrum.raw_size);
  peak.amplitude = response > 0.0 ? a[bin] / response : a[bin];
  return peak;
}

std::optional<PeakEstimate> find_peak(const Spectrum& spectrum, double f_lo, double f_hi) {
  if (spectrum.size() == 0 || !(f_lo <= f_hi)) return std::nullopt;
  const double bw = spectrum.bin_width;
  const long k_lo = std::max(0L, static_cast<long>(std::ceil(f_lo / bw)));
  const long k_hi =
      std::min(static_cast<long>(spectrum.size()) - 1, static_cast<long>(std::floor(f_hi / bw)));
  if (k_lo > k_hi) return std::nullopt;

  std::size_t best = static_cast<std::size_t>(k_lo);
  for (long k = k_lo; k <= k_hi; ++k) {
    if (spectrum.amplitude[static_cast<std::size_t>(k)] > spectrum.amplitude[best]) {
      best = static_cast<std::size_t>(k);
    }
  }
  return interpolate_peak(spectrum, best);
}

std::vector<double> channel_amplitudes(const Spectrum& spectrum,
                                       const std::vector<ToneQuery>& queries,
                                       double search_halfwidth) {
  if (!(search_halfwidth > 0.0)) {
    throw std::invalid_argument("channel_amplitudes: search_halfwidth must be positive");
  }
  std::vector<double> centers;
  centers.reserve(queries.size());
  for (const auto& q : queries) centers.push_back(q.frequency);
  std::sort(centers.begin(), centers.end());
  for (std::size_t i = 1; i < centers.size(); ++i) {
    if (centers[i] - centers[i - 1] < 2.0 * search_halfwidth) {
      throw std::invalid_argument("channel_amplitudes: search windows overlap between channels");
    }
  }

  std::vector<double> amplitudes;
  amplitudes.reserve(queries.size());
  for (const auto& q : queries) {
    const auto peak =
        find_peak(spectrum, q.frequency - search_halfwidth, q.frequency + search_halfwidth);
    if (!peak) {
      throw std::invalid_argument(
          "channel_amplitudes: search window narrower than one spectral bin");
    }
    amplitudes.push_back(peak->amplitude);
  }
  return amplitudes;
}

DetectionReport detect(const std::vector<ToneQuery>& queries, const std::vector<double>& baseline,
                       const std::vector<double>& measured,
                       const std::vector<double>& thresholds) {
  const std::size_t n = queries.size();
  if (baseline.size() != n || measured.size() != n || thresholds.size() != n) {
    throw std::invalid_argument("detect: per-channel array sizes disagree");
  }
  DetectionReport report;
  report.channels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ChannelDecision d;
    d.label = queries[i].label;
    d.baseline = baseline[i];
    d.measured = measured[i];
    d.threshold = thresholds[i];
    if (baseline[i] > 0.0) {
      d.relative_shift = std::abs(measured[i] - baseline[i]) / baseline[i];
      d.detected = d.relative_shift > thresholds[i];
    } else {
      d.valid = false;
    }
    if (d.detected) ++report.detected_count;
    report.channels.push_back(std::move(d));
  }
  return report;
}

std::vector<double> noise_floor_threshold(const std::vector<std::vector<double>>& replicas,
                                          double multiplier) {
  if (replicas.size() < 10) {
    throw std::invalid_argument("noise_floor_threshold: need at least 10 replicas");
  }
  if (!(multiplier >= 0.0)) {
    throw std::invalid_argument("noise_floor_threshold: multiplier must be >= 0");
  }
  const std::size_t channels = replicas.front().size();
  for (const auto& row : replicas) {
    if (row.size() != channels) {
      throw std::invalid_argument("noise_floor_threshold: ragged replica table");
    }
  }
  const double k = static_cast<double>(replicas.size());

  std::vector<double> thresholds(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    double mean = 0.0;
    double lo = replicas.front()[c];
    double hi = lo;
    for (const auto& row : replicas) {
      mean += row[c];
      lo = std::min(lo, row[c]);
      hi = std::max(hi, row[c]);
    }
    mean /= k;
    if (lo == hi) {
      // Identical replicas have exactly zero spread; don't let summation
      // roundoff manufacture a nonzero threshold.
      if (!(lo > 0.0)) {
        throw std::domain_error("noise_floor_threshold: channel mean amplitude is not positive");
      }
      thresholds[c] = 0.0;
      continue;
    }
    if (!(mean > 0.0)) {
      throw std::domain_error("noise_floor_threshold: channel mean amplitude is not positive");
    }
    double ss = 0.0;
    for (const auto& row : replicas) {
      const double d = row[c] - mean;
      ss += d * d;
    }
    const double std_dev = std::sqrt(ss / (k - 1.0));
    thresholds[c] = multiplier * std_dev / mean;
  }
  return thresholds;
}

}  // namespace stno
