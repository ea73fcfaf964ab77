#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "stno/errors.hpp"
#include "stno/metrics.hpp"

using namespace stno;

namespace {

constexpr double kDt = 1e-10;  // 10 GS/s
constexpr std::size_t kSamples = 4096;

std::vector<double> tone(double frequency, double amplitude, double phase = 0.0,
                         double dc = 0.0, std::size_t n = kSamples) {
  std::vector<double> s(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * kDt;
    s[k] = dc + amplitude * std::cos(2.0 * std::numbers::pi * frequency * t + phase);
  }
  return s;
}

std::vector<double> add(std::vector<double> a, const std::vector<double>& b) {
  for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
  return a;
}

}  // namespace

TEST_CASE("trim_transient drops the leading fraction") {
  std::vector<double> s(100);
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = static_cast<double>(k);

  const auto trimmed = trim_transient(s, 0.25);
  REQUIRE(trimmed.size() == 75);
  CHECK(trimmed.front() == 25.0);
  CHECK(trimmed.back() == 99.0);

  CHECK(trim_transient(s, 0.0) == s);
  CHECK_THROWS_AS(trim_transient(s, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(trim_transient(s, -0.1), std::invalid_argument);
}

TEST_CASE("dominant_frequency recovers an off-bin tone to sub-bin accuracy") {
  // Raw bin width is 1/(4096 * 0.1ns) = 2.44 MHz; place the tone a third of a
  // bin off the grid so interpolation is actually exercised.
  const double raw_bin = 1.0 / (static_cast<double>(kSamples) * kDt);
  const double f0 = 1.0e9 + raw_bin / 3.0;
  const auto s = tone(f0, 0.8, 0.3);
  const double f_est = dominant_frequency(s, kDt);
  CHECK(std::abs(f_est - f0) < 0.05 * raw_bin);
}

TEST_CASE("steady_amplitude recovers the tone amplitude despite windowing") {
  const double raw_bin = 1.0 / (static_cast<double>(kSamples) * kDt);
  for (double frac : {0.0, 0.25, 0.5}) {
    const auto s = tone(1.4e9 + frac * raw_bin, 0.62, 1.1, /*dc=*/0.2);
    CHECK(steady_amplitude(s, kDt) == doctest::Approx(0.62).epsilon(0.01));
  }
}

TEST_CASE("amplitude_near isolates the tone inside its search window") {
  const auto s = add(tone(1.0e9, 0.5), tone(1.3e9, 0.25, 0.7));
  CHECK(amplitude_near(s, kDt, 1.0e9, 0.1e9) == doctest::Approx(0.5).epsilon(0.01));
  CHECK(amplitude_near(s, kDt, 1.3e9, 0.1e9) == doctest::Approx(0.25).epsilon(0.01));
  // Window centered between the tones but wide enough to cover both picks the
  // stronger one.
  CHECK(amplitude_near(s, kDt, 1.15e9, 0.2e9) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("non-oscillating series raise NoOscillationError") {
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> noise(kSamples);
  for (auto& x : noise) x = 0.3 + 0.01 * gauss(rng);
  CHECK_THROWS_AS(dominant_frequency(noise, kDt), NoOscillationError);
  CHECK_THROWS_AS(steady_amplitude(noise, kDt), NoOscillationError);

  std::vector<double> flat(kSamples, 0.7);
  CHECK_THROWS_AS(dominant_frequency(flat, kDt), NoOscillationError);
}

TEST_CASE("is_locked compares the dominant line against the injected tone") {
  const double f_inj = 2.0e9;
  CHECK(is_locked(tone(f_inj, 0.4), kDt, f_inj));

  // 3 MHz off: several padded bins away at this record length, so not locked
  // under the default one-bin tolerance, but locked under an explicit 5 MHz
  // tolerance.
  const auto detuned = tone(f_inj + 3.0e6, 0.4);
  CHECK_FALSE(is_locked(detuned, kDt, f_inj));
  CHECK(is_locked(detuned, kDt, f_inj, 5.0e6));

  // A non-oscillating series is simply not locked.
  std::vector<double> flat(kSamples, 0.1);
  CHECK_FALSE(is_locked(flat, kDt, f_inj));
}

TEST_CASE("sensitivity is the relative amplitude shift") {
  CHECK(sensitivity(0.5, 0.52) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(sensitivity(0.5, 0.48) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(sensitivity(2.0, 2.0) == 0.0);
  CHECK_THROWS_AS(sensitivity(0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(sensitivity(-1.0, 1.0), std::domain_error);
}
