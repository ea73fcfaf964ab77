#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "stno/array.hpp"
#include "stno/errors.hpp"
#include "stno/metrics.hpp"
#include "stno/spectrum.hpp"

using namespace stno;

namespace {

/// Linear frequency-bias response: f(b) = f0 + slope * (b - b0).
struct LinearCurve {
  double b0 = 1.4e-3;    // A
  double f0 = 9.0e9;     // Hz
  double slope = 7.8e12; // Hz/A  (0.0078 GHz/uA)

  double operator()(double bias) const { return f0 + slope * (bias - b0); }

  std::vector<BiasPoint> sample(double lo, double hi, double step) const {
    std::vector<BiasPoint> pts;
    for (double b = lo; b <= hi + 1e-12; b += step) pts.push_back({b, (*this)(b)});
    return pts;
  }
};

}  // namespace

TEST_CASE("plan_channels with grid-exact targets") {
  // Slope of exactly 0.01 GHz/uA makes each 0.1 GHz step a 10 uA step, so
  // every ideal bias already sits on the grid.
  LinearCurve curve{1.0e-3, 9.0e9, 1.0e13};
  const auto plan = plan_channels(20, 9.5e9, 0.1e9, curve.sample(1.0e-3, 1.35e-3, 50e-6));

  REQUIRE(plan.channels.size() == 20);
  CHECK(plan.margin == 0.1e9);
  CHECK(plan.bias_resolution == 10e-6);
  for (int k = 0; k < 20; ++k) {
    const auto& ch = plan.channels[static_cast<std::size_t>(k)];
    CHECK(ch.index == k);
    CHECK(ch.f_target == doctest::Approx(9.5e9 + k * 0.1e9).epsilon(1e-12));
    CHECK(ch.f_injection == ch.f_target);
    CHECK(ch.bias == doctest::Approx(1.05e-3 + k * 10e-6).epsilon(1e-9));
  }
  for (std::size_t k = 1; k < plan.channels.size(); ++k) {
    CHECK(plan.channels[k].bias > plan.channels[k - 1].bias);
  }
}

TEST_CASE("plan_channels snaps to the nearest grid point") {
  LinearCurve curve;  // 0.0078 GHz/uA
  const auto pts = curve.sample(1.39e-3, 1.72e-3, 10e-6);
  const auto plan = plan_channels(20, 9.5e9, 0.1e9, pts);

  const double res = plan.bias_resolution;
  for (const auto& ch : plan.channels) {
    const double ideal = curve.b0 + (ch.f_target - curve.f0) / curve.slope;
    const double snapped = std::round(ideal / res) * res;
    CHECK(ch.bias == doctest::Approx(snapped).epsilon(1e-9));
    // Residual detuning after rounding is at most slope * res / 2.
    CHECK(std::abs(curve(ch.bias) - ch.f_target) <= 0.5 * curve.slope * res + 1.0);
  }
}

TEST_CASE("plan_channels rejects targets outside the calibrated band") {
  LinearCurve curve;  // band 9.0 .. 9.0 + 0.0078*300 = 11.34 GHz over 1.40-1.70 mA
  const auto pts = curve.sample(1.40e-3, 1.70e-3, 20e-6);

  CHECK_THROWS_AS(plan_channels(1, 8.0e9, 0.1e9, pts), PlanningError);
  try {
    plan_channels(40, 9.5e9, 0.1e9, pts);  // channel 19 is the last in band
    FAIL("expected PlanningError");
  } catch (const PlanningError& e) {
    // First target beyond 11.34 GHz: 9.5 + k*0.1 > 11.34 -> k = 19 is 11.4.
    CHECK(e.channel() == 19);
  }
}

TEST_CASE("plan_channels validates its inputs") {
  LinearCurve curve;
  const auto pts = curve.sample(1.40e-3, 1.60e-3, 20e-6);
  CHECK_THROWS_AS(plan_channels(0, 9.5e9, 0.1e9, pts), std::invalid_argument);
  CHECK_THROWS_AS(plan_channels(5, 9.5e9, -0.1e9, pts), std::invalid_argument);
  CHECK_THROWS_AS(plan_channels(5, 9.5e9, 0.1e9, pts, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(plan_channels(5, 9.5e9, 0.1e9, {pts[0]}), std::invalid_argument);

  auto decreasing_bias = pts;
  std::swap(decreasing_bias[0], decreasing_bias[1]);
  CHECK_THROWS_AS(plan_channels(5, 9.5e9, 0.1e9, decreasing_bias), std::invalid_argument);

  auto flat = pts;
  flat[1].frequency = flat[0].frequency;
  CHECK_THROWS_AS(plan_channels(5, 9.5e9, 0.1e9, flat), std::invalid_argument);

  // Single channel degenerates gracefully.
  const auto single = plan_channels(1, 9.6e9, 0.1e9, pts);
  CHECK(single.channels.size() == 1);
}

TEST_CASE("mix is the weighted sum of the channel signals") {
  const std::vector<std::vector<double>> signals{{3.0, 3.0}, {6.0, 0.0}, {9.0, -3.0}};

  const auto uniform = mix(signals, CouplingModel::uniform(3));
  REQUIRE(uniform.size() == 2);
  CHECK(uniform[0] == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(uniform[1] == doctest::Approx(0.0).epsilon(1e-14));

  const auto weighted = mix(signals, CouplingModel{{1.0, 0.0, 0.5}});
  CHECK(weighted[0] == doctest::Approx(3.0 + 4.5).epsilon(1e-14));
  CHECK(weighted[1] == doctest::Approx(3.0 - 1.5).epsilon(1e-14));

  // Identity for a single unit-weight channel.
  const auto single = mix({{1.0, 2.0, 3.0}}, CouplingModel{{1.0}});
  CHECK(single == std::vector<double>{1.0, 2.0, 3.0});

  CHECK_THROWS_AS(mix({}, CouplingModel{{}}), std::invalid_argument);
  CHECK_THROWS_AS(mix(signals, CouplingModel::uniform(2)), std::invalid_argument);
  CHECK_THROWS_AS(mix({{1.0, 2.0}, {1.0}}, CouplingModel::uniform(2)), std::invalid_argument);
}

TEST_CASE("calibrate_bias walks to the exhaustive-scan optimum") {
  LinearCurve curve;
  const std::function<double(double)> measure = [&](double b) { return curve(b); };
  const double target = 9.5e9;
  const double margin = 0.1e9;
  const double step = 10e-6;

  const auto result = calibrate_bias(measure, 1.40e-3, target, margin, step);

  // Exhaustive scan over the grid around the start.
  double best_bias = 0.0;
  double best_err = 1e18;
  for (double b = 1.40e-3; b <= 1.60e-3 + 1e-12; b += step) {
    const double err = std::abs(curve(b) - target);
    if (err < best_err) {
      best_err = err;
      best_bias = b;
    }
  }
  CHECK(result.bias == doctest::Approx(best_bias).epsilon(1e-9));
  CHECK(std::abs(result.frequency - target) <= 0.5 * margin);
  CHECK(result.trace.size() >= 2);
  for (const auto& [b, f] : result.trace) {
    CHECK(std::abs(b / step - std::round(b / step)) < 1e-6);  // probes stay on grid
    CHECK(f == doctest::Approx(curve(b)).epsilon(1e-12));
  }

  // Starting at the optimum terminates after the sign probe.
  const auto again = calibrate_bias(measure, result.bias, target, margin, step);
  CHECK(again.bias == doctest::Approx(result.bias).epsilon(1e-9));
  CHECK(again.trace.size() <= 3);

  // Approaching from above walks downward to the same point.
  const auto from_above = calibrate_bias(measure, 1.55e-3, target, margin, step);
  CHECK(from_above.bias == doctest::Approx(result.bias).epsilon(1e-9));
}

TEST_CASE("calibrate_bias failure modes") {
  const std::function<double(double)> flat = [](double) { return 9.0e9; };
  CHECK_THROWS_AS(calibrate_bias(flat, 1.4e-3, 9.5e9, 0.1e9), CalibrationError);

  // Too far to reach within the probe budget.
  LinearCurve curve;
  const std::function<double(double)> measure = [&](double b) { return curve(b); };
  try {
    calibrate_bias(measure, 1.40e-3, 12.0e9, 0.1e9, 10e-6, 32);
    FAIL("expected CalibrationError");
  } catch (const CalibrationError& e) {
    CHECK(e.trace().size() == 32);  // budget spent, trace carried
  }

  // Oscillation death surfaces as CalibrationError, not NoOscillationError.
  const std::function<double(double)> dead = [](double) -> double {
    throw NoOscillationError("below threshold");
  };
  CHECK_THROWS_AS(calibrate_bias(dead, 1.4e-3, 9.5e9, 0.1e9), CalibrationError);

  CHECK_THROWS_AS(calibrate_bias(measure, 1.4e-3, 9.5e9, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_bias(measure, 1.4e-3, 9.5e9, 0.1e9, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_bias(measure, 1.4e-3, 9.5e9, 0.1e9, 10e-6, 1),
                  std::invalid_argument);
}

TEST_CASE("tdm schedule covers all sensors in contiguous blocks") {
  const auto s3 = schedule_tdm(60, 20, 1e-6);
  REQUIRE(s3.slots.size() == 3);
  CHECK(s3.slots[0] == std::pair<int, int>{0, 20});
  CHECK(s3.slots[1] == std::pair<int, int>{20, 40});
  CHECK(s3.slots[2] == std::pair<int, int>{40, 60});
  CHECK(s3.total_time() == doctest::Approx(3e-6));

  CHECK(schedule_tdm(20, 20, 1e-6).slots.size() == 1);

  const auto s2 = schedule_tdm(21, 20, 2e-6);
  REQUIRE(s2.slots.size() == 2);
  CHECK(s2.slots[1] == std::pair<int, int>{20, 21});
  CHECK(s2.total_time() == doctest::Approx(4e-6));

  CHECK(schedule_tdm(5, 8, 1e-6).slots.size() == 1);

  CHECK_THROWS_AS(schedule_tdm(0, 20, 1e-6), std::invalid_argument);
  CHECK_THROWS_AS(schedule_tdm(20, 0, 1e-6), std::invalid_argument);
  CHECK_THROWS_AS(schedule_tdm(20, 20, 0.0), std::invalid_argument);
}

TEST_CASE("channel_amplitudes demultiplexes a synthetic mixed line") {
  LinearCurve curve{1.0e-3, 9.0e9, 1.0e13};
  const auto plan = plan_channels(3, 9.5e9, 0.1e9, curve.sample(1.0e-3, 1.35e-3, 50e-6));

  const double dt = 1e-11;
  const std::size_t n = 1 << 15;
  const double amps[] = {0.9, 0.5, 0.7};
  std::vector<double> mixed(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    for (int c = 0; c < 3; ++c) {
      mixed[k] += amps[c] * std::cos(2.0 * std::numbers::pi *
                                     plan.channels[static_cast<std::size_t>(c)].f_injection * t);
    }
  }
  const Spectrum spec = compute_spectrum(mixed, dt, Window::hann, 4);
  const auto recovered = channel_amplitudes(spec, plan, 0.04e9);
  REQUIRE(recovered.size() == 3);
  for (int c = 0; c < 3; ++c) {
    CHECK(recovered[static_cast<std::size_t>(c)] ==
          doctest::Approx(amps[c]).epsilon(0.01));
  }

  // Window halfwidth at or above margin/2 would let channels overlap.
  CHECK_THROWS_AS(channel_amplitudes(spec, plan, 0.05e9), std::invalid_argument);
}

TEST_CASE("detect flags relative shifts above threshold") {
  LinearCurve curve{1.0e-3, 9.0e9, 1.0e13};
  const auto plan = plan_channels(3, 9.5e9, 0.1e9, curve.sample(1.0e-3, 1.35e-3, 50e-6));

  const std::vector<double> baseline{1.0, 1.0, 1.0};
  const std::vector<double> measured{1.0, 1.05, 0.96};

  const auto r1 = detect(plan, baseline, measured, 0.03);
  REQUIRE(r1.channels.size() == 3);
  CHECK(r1.detected_count == 2);
  CHECK_FALSE(r1.channels[0].detected);
  CHECK(r1.channels[1].detected);
  CHECK(r1.channels[2].detected);
  CHECK(r1.channels[1].relative_shift == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(r1.channels[1].label == "channel-1");

  const auto r2 = detect(plan, baseline, measured, std::vector<double>{0.06, 0.06, 0.03});
  CHECK(r2.detected_count == 1);
  CHECK_FALSE(r2.channels[1].detected);
  CHECK(r2.channels[2].detected);

  // Unusable baseline marks the channel invalid instead of throwing.
  const auto r3 = detect(plan, {0.0, 1.0, 1.0}, measured, 0.03);
  CHECK_FALSE(r3.channels[0].valid);
  CHECK_FALSE(r3.channels[0].detected);

  CHECK_THROWS_AS(detect(plan, {1.0}, measured, 0.03), std::invalid_argument);
}

TEST_CASE("noise_floor_threshold from repeated bead-free runs") {
  // 12 replicas x 2 channels with hand-chosen spread.
  std::vector<std::vector<double>> replicas;
  for (int r = 0; r < 12; ++r) {
    const double delta = (r % 2 == 0) ? 0.01 : -0.01;  // sd ~ 0.010436 around 1.0
    replicas.push_back({1.0 + delta, 2.0});
  }
  const auto thresholds = noise_floor_threshold(replicas, 3.0);
  REQUIRE(thresholds.size() == 2);
  // Sample sd of +-0.01 alternating over 12 samples: sqrt(12/11)*0.01.
  const double sd = std::sqrt(12.0 / 11.0) * 0.01;
  CHECK(thresholds[0] == doctest::Approx(3.0 * sd / 1.0).epsilon(1e-9));
  CHECK(thresholds[1] == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(noise_floor_threshold({{1.0}, {1.0}}, 3.0), std::invalid_argument);
}

TEST_CASE("run_array end-to-end on a two-channel plan") {
  // Measure a short bias curve on the reference device, plan two channels on a
  // fine bias grid (so the plan detuning is negligible against the locking
  // range), and run the array with mild thermal noise.
  MagnetParams magnet;
  FieldSources sources;

  const auto measure_free = [&](double bias) {
    IntegratorConfig config;
    config.dt = 1e-12;
    config.scheme = Scheme::rk4;
    const DriveCurrent drive{bias, 0.0, 0.0, 0.0};
    const Trajectory traj =
        simulate(default_initial_state(magnet), magnet, sources, drive, config, 80e-9);
    return dominant_frequency(trim_transient(traj.component(&Vec3::z), 0.25), config.dt);
  };

  std::vector<BiasPoint> curve;
  for (double b : {190e-6, 210e-6, 230e-6, 250e-6}) curve.push_back({b, measure_free(b)});

  const auto plan = plan_channels(2, 10.1e9, 0.1e9, curve, /*bias_resolution=*/0.1e-6);

  ArraySetup setup;
  setup.magnet = magnet;
  setup.sources = sources;
  setup.sources.thermal_enabled = true;
  setup.sources.thermal_scale = 0.0025;
  setup.i_rf = 20e-6;

  const auto result = run_array(plan, setup, {}, {true, false}, 42);

  REQUIRE(result.truth.size() == 2);
  CHECK(result.dt == setup.dt);
  CHECK(result.truth[0].bead_bound);
  CHECK_FALSE(result.truth[1].bead_bound);
  for (const auto& rec : result.truth) {
    CHECK(rec.locked);
    CHECK(rec.amplitude > 0.0);
    CHECK(rec.calibration_probes == 0.0);  // no drift, no forced calibration
  }
  CHECK(result.truth[0].f_injection == doctest::Approx(10.1e9));
  CHECK(result.truth[1].f_injection == doctest::Approx(10.2e9));

  // Trimmed length: (100 ns / 1 ps + 1), leading quarter dropped.
  const std::size_t total = static_cast<std::size_t>(100e-9 / setup.dt) + 1;
  const std::size_t skip = static_cast<std::size_t>(0.25 * static_cast<double>(total));
  CHECK(result.mixed.size() == total - skip);

  // Same seed reproduces the mixed trace bit for bit; a different seed with
  // thermal noise on does not.
  const auto rerun = run_array(plan, setup, {}, {true, false}, 42);
  CHECK(rerun.mixed == result.mixed);
  const auto other = run_array(plan, setup, {}, {true, false}, 43);
  CHECK(other.mixed != result.mixed);

  // Size guards.
  CHECK_THROWS_AS(run_array(plan, setup, {DeviceDrift{}}, {}, 1), std::invalid_argument);
  CHECK_THROWS_AS(run_array(plan, setup, {}, {true}, 1), std::invalid_argument);
}
