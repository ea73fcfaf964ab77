#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace stno {

/// Analysis window applied before the transform.
enum class Window { rectangular, hann };

/// One-sided amplitude spectrum of a real time series.
struct Spectrum {
  std::vector<double> amplitude;  // per-bin amplitude, window gain removed
  double bin_width = 0.0;         // Hz, of the (possibly zero-padded) transform
  double dt = 0.0;                // s, sample interval
  std::size_t raw_size = 0;       // samples before padding
  std::size_t padded_size = 0;
  Window window = Window::hann;
  int pad_factor = 1;

  std::size_t size() const { return amplitude.size(); }
  double frequency(std::size_t bin) const { return bin_width * static_cast<double>(bin); }
  std::size_t bin_of(double frequency_hz) const;
};

/// Compute the one-sided amplitude spectrum. Amplitudes are normalized so a
/// pure tone a*cos(2 pi f t) whose frequency sits exactly on a bin reports a
/// at that bin (DC and Nyquist report the plain mean / alternating amplitude).
/// pad_factor >= 1 zero-pads the windowed series to pad_factor * n samples.
Spectrum compute_spectrum(const std::vector<double>& series, double dt,
                          Window window = Window::hann, int pad_factor = 4);

/// A spectral peak refined off the bin grid.
struct PeakEstimate {
  double frequency = 0.0;  // Hz
  double amplitude = 0.0;  // same units as the input series
  std::size_t bin = 0;     // index of the underlying maximum bin
};

/// Refine the peak at `bin` by parabolic interpolation of log amplitude over
/// the three surrounding bins, then invert the analytic window response at the
/// interpolated offset to recover the tone amplitude.
PeakEstimate interpolate_peak(const Spectrum& spectrum, std::size_t bin);

/// Largest interpolated peak with frequency in [f_lo, f_hi]. Returns nullopt
/// if the interval contains no bins.
std::optional<PeakEstimate> find_peak(const Spectrum& spectrum, double f_lo, double f_hi);

/// One frequency-multiplexed readout channel.
struct ToneQuery {
  double frequency = 0.0;  // Hz, expected tone position
  std::string label;
};

/// Interpolated amplitude of the strongest peak within +/- search_halfwidth of
/// each queried tone. Queries whose windows would overlap are rejected.
std::vector<double> channel_amplitudes(const Spectrum& spectrum,
                                       const std::vector<ToneQuery>& queries,
                                       double search_halfwidth);

/// Per-channel binding decision.
struct ChannelDecision {
  std::string label;
  double baseline = 0.0;
  double measured = 0.0;
  double relative_shift = 0.0;  // |measured - baseline| / baseline
  double threshold = 0.0;
  bool detected = false;
  bool valid = true;  // false when the baseline is unusable
};

struct DetectionReport {
  std::vector<ChannelDecision> channels;
  std::size_t detected_count = 0;
};

/// Compare measured channel amplitudes against a baseline; a channel fires
/// when its relative amplitude shift exceeds its threshold. Baselines <= 0
/// mark the channel invalid rather than throwing.
DetectionReport detect(const std::vector<ToneQuery>& queries,
                       const std::vector<double>& baseline,
                       const std::vector<double>& measured,
                       const std::vector<double>& thresholds);

/// Per-channel detection thresholds from repeated bead-free measurements:
/// multiplier * (sample std of amplitude) / (mean amplitude), per channel.
/// `replicas` is indexed [replica][channel]; at least 10 replicas required.
std::vector<double> noise_floor_threshold(const std::vector<std::vector<double>>& replicas,
                                          double multiplier = 3.0);

}  // namespace stno
