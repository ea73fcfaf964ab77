#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "stno/rng.hpp"
#include "stno/spectrum.hpp"

using namespace stno;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> tone(std::size_t n, double cycles_per_record, double amplitude,
                         double phase = 0.0) {
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = amplitude * std::cos(2.0 * kPi * cycles_per_record * static_cast<double>(i) /
                                    static_cast<double>(n) +
                                phase);
  }
  return s;
}

}  // namespace

TEST_CASE("on-bin tones, DC, and Nyquist report their exact amplitudes") {
  const std::size_t n = 4096;
  const double dt = 1e-9;
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = 0.7 + std::cos(2.0 * kPi * 100.0 * static_cast<double>(i) / static_cast<double>(n)) +
           0.3 * ((i % 2 == 0) ? 1.0 : -1.0);
  }
  const Spectrum spec = compute_spectrum(s, dt, Window::rectangular, 1);

  CHECK(spec.bin_width == doctest::Approx(1.0 / (static_cast<double>(n) * dt)).epsilon(1e-15));
  CHECK(spec.size() == n / 2 + 1);
  CHECK(spec.amplitude[0] == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(spec.amplitude[100] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(spec.amplitude[n / 2] == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(spec.amplitude[500] < 1e-9);  // orthogonal bin stays at the roundoff floor
  CHECK(spec.bin_of(spec.frequency(100)) == 100);
}

TEST_CASE("total power matches the sum over one-sided bins") {
  const std::size_t n = 2048;
  const double dt = 2e-10;
  Rng rng(91);
  std::vector<double> s(n);
  for (auto& v : s) v = rng.gaussian();

  const Spectrum spec = compute_spectrum(s, dt, Window::rectangular, 1);
  double lhs = 0.0;
  for (const double v : s) lhs += v * v;
  lhs /= static_cast<double>(n);

  double rhs = spec.amplitude[0] * spec.amplitude[0] +
               spec.amplitude[n / 2] * spec.amplitude[n / 2];
  for (std::size_t k = 1; k < n / 2; ++k) {
    rhs += 0.5 * spec.amplitude[k] * spec.amplitude[k];
  }
  CHECK(std::abs(lhs - rhs) <= 1e-9 * lhs);
}

TEST_CASE("zero input yields an all-zero spectrum") {
  const std::vector<double> s(512, 0.0);
  const Spectrum spec = compute_spectrum(s, 1e-9);
  double peak = 0.0;
  for (const double a : spec.amplitude) peak = std::max(peak, a);
  CHECK(peak == 0.0);
}

TEST_CASE("spectrum input validation") {
  const std::vector<double> short_series(255, 1.0);
  CHECK_THROWS_AS(compute_spectrum(short_series, 1e-9), std::invalid_argument);
  const std::vector<double> s(256, 1.0);
  CHECK_THROWS_AS(compute_spectrum(s, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(compute_spectrum(s, -1e-9), std::invalid_argument);
  CHECK_THROWS_AS(compute_spectrum(s, 1e-9, Window::hann, 0), std::invalid_argument);
}

TEST_CASE("spectrum amplitude is linear in the input") {
  const std::size_t n = 1024;
  const auto s = tone(n, 37.25, 0.8, 0.4);
  std::vector<double> scaled(s);
  for (auto& v : scaled) v *= 3.0;

  const Spectrum a = compute_spectrum(s, 1e-9, Window::hann, 2);
  const Spectrum b = compute_spectrum(scaled, 1e-9, Window::hann, 2);
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    worst = std::max(worst, std::abs(b.amplitude[k] - 3.0 * a.amplitude[k]));
  }
  CHECK(worst <= 1e-11);
}

TEST_CASE("a tone midway between bins is recovered by interpolation") {
  const std::size_t n = 1024;
  const double dt = 1e-9;
  const double cycles = 100.5;
  const auto s = tone(n, cycles, 0.5, 0.3);
  const Spectrum spec = compute_spectrum(s, dt, Window::hann, 4);

  const double raw_bin = 1.0 / (static_cast<double>(n) * dt);
  const double f_true = cycles * raw_bin;
  const auto peak = find_peak(spec, f_true - 5.0 * raw_bin, f_true + 5.0 * raw_bin);
  REQUIRE(peak.has_value());
  CHECK(std::abs(peak->frequency - f_true) < 0.01 * raw_bin);
  CHECK(peak->amplitude == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("peak interpolation tracks tones across sub-bin offsets") {
  const std::size_t n = 1024;
  const double dt = 1e-9;
  const double raw_bin = 1.0 / (static_cast<double>(n) * dt);
  for (const double offset : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}) {
    const double cycles = 100.0 + offset;
    const auto s = tone(n, cycles, 1.0, 0.7);
    const Spectrum spec = compute_spectrum(s, dt, Window::hann, 4);
    const double f_true = cycles * raw_bin;
    const auto peak = find_peak(spec, f_true - 5.0 * raw_bin, f_true + 5.0 * raw_bin);
    REQUIRE(peak.has_value());
    CHECK(std::abs(peak->frequency - f_true) < 0.05 * raw_bin);
    CHECK(peak->amplitude == doctest::Approx(1.0).epsilon(0.01));
  }
}

TEST_CASE("multiplexed channel amplitudes are recovered within one percent") {
  const double dt = 5e-12;
  const std::size_t n = 10000;  // 50 ns record, 20 MHz raw bins
  Rng rng(4242);
  std::vector<double> amp(20);
  std::vector<double> freq(20);
  std::vector<double> phase(20);
  std::vector<double> s(n, 0.0);
  std::vector<ToneQuery> queries;
  for (int c = 0; c < 20; ++c) {
    amp[c] = 1.0 + 0.02 * c;
    freq[c] = 9.0e9 + 0.1e9 * c;
    phase[c] = rng.gaussian();
    queries.push_back({freq[c], "ch" + std::to_string(c)});
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    double v = 0.0;
    for (int c = 0; c < 20; ++c) v += amp[c] * std::cos(2.0 * kPi * freq[c] * t + phase[c]);
    s[i] = v;
  }
  const Spectrum spec = compute_spectrum(s, dt, Window::hann, 4);

  const auto recovered = channel_amplitudes(spec, queries, 40e6);
  REQUIRE(recovered.size() == queries.size());
  for (int c = 0; c < 20; ++c) {
    CHECK(recovered[c] == doctest::Approx(amp[c]).epsilon(0.01));
  }

  // A query far from every tone sees only the leakage floor.
  const auto empty = channel_amplitudes(spec, {{12.0e9, "empty"}}, 40e6);
  CHECK(empty[0] < 0.01);

  // Windows that could claim the same tone are rejected up front.
  CHECK_THROWS_AS(channel_amplitudes(spec, queries, 60e6), std::invalid_argument);
  // A window narrower than the bin spacing around an off-grid center has no bins.
  CHECK_THROWS_AS(channel_amplitudes(spec, {{9.0025e9, "narrow"}}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("detection compares relative amplitude shifts against thresholds") {
  const std::vector<ToneQuery> queries{{9.0e9, "a"}, {9.1e9, "b"}, {9.2e9, "c"}};
  const std::vector<double> baseline{0.5, 0.5, 0.0};
  const std::vector<double> measured{0.495, 0.499, 0.4};

  const auto report = detect(queries, baseline, measured, {0.005, 0.005, 0.005});
  REQUIRE(report.channels.size() == 3);
  CHECK(report.channels[0].detected);
  CHECK(report.channels[0].relative_shift == doctest::Approx(0.01).epsilon(1e-9));
  CHECK_FALSE(report.channels[1].detected);  // 0.002 shift below threshold
  CHECK_FALSE(report.channels[2].detected);
  CHECK_FALSE(report.channels[2].valid);  // zero baseline is unusable, not an exception
  CHECK(report.channels[0].valid);
  CHECK(report.detected_count == 1);

  const auto strict = detect(queries, baseline, measured, {0.02, 0.02, 0.02});
  CHECK_FALSE(strict.channels[0].detected);
  CHECK(strict.detected_count == 0);

  CHECK_THROWS_AS(detect(queries, {0.5, 0.5}, measured, {0.01, 0.01, 0.01}),
                  std::invalid_argument);
}

TEST_CASE("raising the threshold never adds a detection") {
  Rng rng(17);
  std::vector<ToneQuery> queries;
  std::vector<double> baseline, measured;
  for (int c = 0; c < 16; ++c) {
    queries.push_back({9.0e9 + 0.1e9 * c, "ch" + std::to_string(c)});
    baseline.push_back(1.0);
    measured.push_back(1.0 + 0.02 * rng.gaussian());
  }
  for (const double low : {0.005, 0.01, 0.02}) {
    const auto loose = detect(queries, baseline, measured,
                              std::vector<double>(queries.size(), low));
    const auto tight = detect(queries, baseline, measured,
                              std::vector<double>(queries.size(), 2.0 * low));
    CHECK(tight.detected_count <= loose.detected_count);
    for (std::size_t c = 0; c < queries.size(); ++c) {
      CHECK_FALSE((tight.channels[c].detected && !loose.channels[c].detected));
    }
  }
}

TEST_CASE("noise floor threshold reproduces a hand-computed table") {
  const std::vector<double> values{0.99, 1.00, 1.01, 0.98, 1.02, 1.00, 1.00, 0.99, 1.01, 1.00};
  std::vector<std::vector<double>> replicas;
  for (const double v : values) replicas.push_back({v, 2.0 * v});

  const auto thresholds = noise_floor_threshold(replicas, 3.0);
  REQUIRE(thresholds.size() == 2);
  // mean 1.0, sample std sqrt(0.0012/9): threshold = 3 * std / mean
  CHECK(thresholds[0] == doctest::Approx(0.034641016151377546).epsilon(1e-12));
  // Relative spread is scale-invariant, so the doubled channel matches.
  CHECK(thresholds[1] == doctest::Approx(thresholds[0]).epsilon(1e-12));

  CHECK(noise_floor_threshold(replicas, 0.0)[0] == 0.0);

  std::vector<std::vector<double>> nine(replicas.begin(), replicas.begin() + 9);
  CHECK_THROWS_AS(noise_floor_threshold(nine), std::invalid_argument);
  CHECK_THROWS_AS(noise_floor_threshold(replicas, -1.0), std::invalid_argument);

  std::vector<std::vector<double>> ragged = replicas;
  ragged[3].push_back(1.0);
  CHECK_THROWS_AS(noise_floor_threshold(ragged), std::invalid_argument);

  const std::vector<std::vector<double>> constant(12, std::vector<double>{0.8});
  CHECK(noise_floor_threshold(constant)[0] == 0.0);

  const std::vector<std::vector<double>> zeros(12, std::vector<double>{0.0});
  CHECK_THROWS_AS(noise_floor_threshold(zeros), std::domain_error);
}

TEST_CASE("noise floor threshold approaches three sigma over mean for large ensembles") {
  Rng rng(555);
  const double sigma = 0.01;
  std::vector<std::vector<double>> replicas;
  for (int k = 0; k < 4000; ++k) replicas.push_back({1.0 + sigma * rng.gaussian()});
  const auto thresholds = noise_floor_threshold(replicas, 3.0);
  CHECK(thresholds[0] == doctest::Approx(3.0 * sigma).epsilon(0.05));
}
