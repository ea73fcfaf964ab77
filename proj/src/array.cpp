#include "stno/array.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "stno/errors.hpp"
#include "stno/metrics.hpp"
#include "stno/rng.hpp"

namespace stno {

ChannelPlan plan_channels(int count, double f_start, double margin,
                          const std::vector<BiasPoint>& bias_curve, double bias_resolution) {
  if (count < 1) throw std::invalid_argument("plan_channels: need at least one channel");
  if (!(margin > 0.0)) throw std::invalid_argument("plan_channels: margin must be positive");
  if (!(bias_resolution > 0.0)) {
    throw std::invalid_argument("plan_channels: bias resolution must be positive");
  }
  if (bias_curve.size() < 2) {
    throw std::invalid_argument("plan_channels: bias curve needs at least two points");
  }
  const bool increasing = bias_curve[1].frequency > bias_curve[0].frequency;
  for (std::size_t i = 1; i < bias_curve.size(); ++i) {
    if (!(bias_curve[i].bias > bias_curve[i - 1].bias)) {
      throw std::invalid_argument("plan_channels: bias curve must have strictly increasing bias");
    }
    const bool step_up = bias_curve[i].frequency > bias_curve[i - 1].frequency;
    if (step_up != increasing || bias_curve[i].frequency == bias_curve[i - 1].frequency) {
      throw std::invalid_argument("plan_channels: bias curve frequency must be strictly monotone");
    }
  }
  const double f_min = std::min(bias_curve.front().frequency, bias_curve.back().frequency);
  const double f_max = std::max(bias_curve.front().frequency, bias_curve.back().frequency);

  ChannelPlan plan;
  plan.margin = margin;
  plan.bias_resolution = bias_resolution;
  plan.channels.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double f_target = f_start + static_cast<double>(k) * margin;
    if (f_target < f_min || f_target > f_max) {
      std::ostringstream msg;
      msg << "plan_channels: target " << f_target / 1e9 << " GHz outside the calibrated band ["
          << f_min / 1e9 << ", " << f_max / 1e9 << "] GHz";
      throw PlanningError(msg.str(), k);
    }
    double bias = bias_curve.back().bias;
    for (std::size_t i = 0; i + 1 < bias_curve.size(); ++i) {
      const double f0 = bias_curve[i].frequency;
      const double f1 = bias_curve[i + 1].frequency;
      if ((f_target - f0) * (f_target - f1) <= 0.0) {
        const double t = (f_target - f0) / (f1 - f0);
        bias = bias_curve[i].bias + t * (bias_curve[i + 1].bias - bias_curve[i].bias);
        break;
      }
    }
    ChannelAssignment ch;
    ch.index = k;
    ch.f_target = f_target;
    ch.f_injection = f_target;
    ch.bias = std::round(bias / bias_resolution) * bias_resolution;
    plan.channels.push_back(ch);
  }
  return plan;
}

CouplingModel CouplingModel::uniform(std::size_t count) {
  if (count == 0) throw std::invalid_argument("CouplingModel: need at least one channel");
  return {std::vector<double>(count, 1.0 / static_cast<double>(count))};
}

std::vector<double> mix(const std::vector<std::vector<double>>& signals,
                        const CouplingModel& coupling) {
  if (signals.empty()) throw std::invalid_argument("mix: no signals");
  if (coupling.weights.size() != signals.size()) {
    throw std::invalid_argument("mix: weight count does not match signal count");
  }
  const std::size_t n = signals.front().size();
  for (const auto& s : signals) {
    if (s.size() != n) throw std::invalid_argument("mix: signals must be equally long");
  }
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < signals.size(); ++i) {
    const double w = coupling.weights[i];
    for (std::size_t j = 0; j < n; ++j) out[j] += w * signals[i][j];
  }
  return out;
}

CalibrationResult calibrate_bias(const std::function<double(double)>& measure,
                                 double initial_bias, double f_target, double margin,
                                 double step, int max_probes) {
  if (!(margin > 0.0)) throw std::invalid_argument("calibrate_bias: margin must be positive");
  if (!(step > 0.0)) throw std::invalid_argument("calibrate_bias: step must be positive");
  if (max_probes < 2) throw std::invalid_argument("calibrate_bias: need at least 2 probes");

  std::vector<CalibrationProbe> trace;
  const auto probe = [&](double bias) {
    if (static_cast<int>(trace.size()) >= max_probes) {
      throw CalibrationError("calibrate_bias: probe budget exhausted before reaching margin/2",
                             trace);
    }
    double f;
    try {
      f = measure(bias);
    } catch (const NoOscillationError& e) {
      throw CalibrationError(std::string("calibrate_bias: oscillation lost at ") +
                                 std::to_string(bias * 1e6) + " uA: " + e.what(),
                             trace);
    }
    trace.emplace_back(bias, f);
    return f;
  };
  const double tol = 0.5 * margin;
  const auto finish = [&](double bias, double f) -> CalibrationResult {
    if (std::abs(f - f_target) > tol) {
      throw CalibrationError(
          "calibrate_bias: best reachable grid point is further than margin/2 from target",
          trace);
    }
    return {bias, f, trace};
  };

  const double b0 = std::round(initial_bias / step) * step;
  const double f0 = probe(b0);
  if (f0 == f_target) return {b0, f0, trace};  // exact hit: nothing to improve
  const double err0 = std::abs(f0 - f_target);

  // One neighbor probe fixes the sign of df/dI, hence the walk direction.
  const double f_up = probe(b0 + step);
  const double slope = (f_up - f0) / step;
  if (slope == 0.0) {
    throw CalibrationError("calibrate_bias: frequency response is flat", trace);
  }
  const double direction = (f_target - f0) / slope > 0.0 ? 1.0 : -1.0;

  double cur_bias = b0;
  double cur_f = f0;
  double cur_err = err0;
  if (direction > 0.0) {
    const double err_up = std::abs(f_up - f_target);
    if (err_up >= err0) return finish(b0, f0);  // already at the grid minimum
    cur_bias = b0 + step;
    cur_f = f_up;
    cur_err = err_up;
  }
  // Descend to the grid point where the error stops improving.
  while (true) {
    const double next_bias = cur_bias + direction * step;
    const double next_f = probe(next_bias);
    const double next_err = std::abs(next_f - f_target);
    if (next_err >= cur_err) return finish(cur_bias, cur_f);
    cur_bias = next_bias;
    cur_f = next_f;
    cur_err = next_err;
  }
}

ArrayRunResult run_array(const ChannelPlan& plan, const ArraySetup& setup,
                         const std::vector<DeviceDrift>& drift,
                         const std::vector<bool>& bead_bound, std::uint64_t seed) {
  const std::size_t n = plan.channels.size();
  if (n == 0) throw std::invalid_argument("run_array: empty channel plan");
  if (!drift.empty() && drift.size() != n) {
    throw std::invalid_argument("run_array: drift list does not match the plan");
  }
  if (!bead_bound.empty() && bead_bound.size() != n) {
    throw std::invalid_argument("run_array: bead list does not match the plan");
  }
  CouplingModel coupling =
      setup.coupling.weights.empty() ? CouplingModel::uniform(n) : setup.coupling;
  if (coupling.weights.size() != n) {
    throw std::invalid_argument("run_array: coupling does not match the plan");
  }

  ArrayRunResult result;
  result.dt = setup.dt;
  result.truth.reserve(n);
  std::vector<std::vector<double>> traces;
  traces.reserve(n);

  for (std::size_t c = 0; c < n; ++c) {
    const ChannelAssignment& ch = plan.channels[c];
    MagnetParams params = setup.magnet;
    if (!drift.empty()) {
      params.ms_free *= drift[c].ms_scale;
      params.alpha *= drift[c].alpha_scale;
    }

    ChannelRecord record;
    record.index = ch.index;
    record.f_injection = ch.f_injection;
    record.bias = ch.bias;
    record.bead_bound = !bead_bound.empty() && bead_bound[c];

    IntegratorConfig integ;
    integ.dt = setup.dt;
    integ.scheme = setup.sources.thermal_enabled ? Scheme::heun : Scheme::rk4;
    integ.seed = replica_seed(seed, c);

    const bool drifted =
        !drift.empty() && (drift[c].ms_scale != 1.0 || drift[c].alpha_scale != 1.0);
    if (setup.calibrate || drifted) {
      // Calibration probes emulate the feedback loop: bead-free, noise-free
      // free-running frequency reads against the channel's injection target.
      FieldSources calib_sources = setup.sources;
      calib_sources.thermal_enabled = false;
      calib_sources.bead_field = Vec3{};
      IntegratorConfig calib_integ = integ;
      calib_integ.scheme = Scheme::rk4;
      const auto measure = [&](double bias) {
        DriveCurrent d{bias, 0.0, 0.0, 0.0};
        const Trajectory traj = simulate(default_initial_state(params), params, calib_sources, d,
                                         calib_integ, setup.calibration_duration);
        std::vector<double> s(traj.size());
        for (std::size_t i = 0; i < traj.size(); ++i) s[i] = traj.m[i].dot(params.easy_axis);
        return dominant_frequency(trim_transient(s, setup.trim_fraction), setup.dt);
      };
      const CalibrationResult cal = calibrate_bias(measure, ch.bias, ch.f_injection, plan.margin,
                                                   plan.bias_resolution);
      record.bias = cal.bias;
      record.calibration_probes = static_cast<double>(cal.trace.size());
    }

    FieldSources sources = setup.sources;
    if (record.bead_bound) {
      sources.bead_field =
          bead_perturbation(setup.bead, params, setup.sources.h_static, setup.quadrature).value;
    }

    const double i_rf = ch.i_rf > 0.0 ? ch.i_rf : setup.i_rf;
    DriveCurrent drive{record.bias, i_rf, ch.f_injection, 0.0};
    const Trajectory traj = simulate(default_initial_state(params), params, sources, drive,
                                     integ, setup.duration);

    std::vector<double> easy(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) easy[i] = traj.m[i].dot(params.easy_axis);
    const auto easy_trimmed = trim_transient(easy, setup.trim_fraction);
    record.locked = is_locked(easy_trimmed, setup.dt, ch.f_injection);

    const auto volts = voltage_series(traj, params.m_p, setup.resistance, setup.convention);
    auto trimmed = trim_transient(volts, setup.trim_fraction);

    // Bridge readout: a matched reference junction cancels the direct
    // i(t) * R_ref drive feedthrough, leaving the magnetoresistive signal
    // i(t) * (R(t) - R_ref). Without this the injection tone itself dominates
    // every channel line and dilutes bead-induced amplitude shifts. R_ref is
    // the least-squares fit of the steady trace onto the drive waveform.
    const auto current_trimmed = trim_transient(traj.current, setup.trim_fraction);
    double vi = 0.0;
    double ii = 0.0;
    for (std::size_t i = 0; i < trimmed.size(); ++i) {
      vi += trimmed[i] * current_trimmed[i];
      ii += current_trimmed[i] * current_trimmed[i];
    }
    const double r_ref = ii > 0.0 ? vi / ii : 0.0;
    for (std::size_t i = 0; i < trimmed.size(); ++i) {
      trimmed[i] -= current_trimmed[i] * r_ref;
    }

    record.amplitude =
        amplitude_near(trimmed, setup.dt, ch.f_injection, 0.5 * plan.margin);

    result.truth.push_back(record);
    traces.push_back(std::move(trimmed));
  }

  result.mixed = mix(traces, coupling);
  return result;
}

namespace {

std::vector<ToneQuery> plan_queries(const ChannelPlan& plan) {
  std::vector<ToneQuery> queries;
  queries.reserve(plan.channels.size());
  for (const auto& ch : plan.channels) {
    queries.push_back({ch.f_injection, "channel-" + std::to_string(ch.index)});
  }
  return queries;
}

}  // namespace

std::vector<double> channel_amplitudes(const Spectrum& spectrum, const ChannelPlan& plan,
                                       double search_halfwidth) {
  if (!(search_halfwidth < 0.5 * plan.margin)) {
    throw std::invalid_argument(
        "channel_amplitudes: search halfwidth must stay below margin/2 to keep channel "
        "windows disjoint");
  }
  return channel_amplitudes(spectrum, plan_queries(plan), search_halfwidth);
}

DetectionReport detect(const ChannelPlan& plan, const std::vector<double>& baseline,
                       const std::vector<double>& measured, double threshold) {
  return detect(plan, baseline, measured,
                std::vector<double>(plan.channels.size(), threshold));
}

DetectionReport detect(const ChannelPlan& plan, const std::vector<double>& baseline,
                       const std::vector<double>& measured,
                       const std::vector<double>& thresholds) {
  return detect(plan_queries(plan), baseline, measured, thresholds);
}

TdmSchedule schedule_tdm(int total_sensors, int per_slot, double slot_duration) {
  if (total_sensors < 1) throw std::invalid_argument("schedule_tdm: need at least one sensor");
  if (per_slot < 1) throw std::invalid_argument("schedule_tdm: need at least one sensor per slot");
  if (!(slot_duration > 0.0)) {
    throw std::invalid_argument("schedule_tdm: slot duration must be positive");
  }
  TdmSchedule schedule;
  schedule.slot_duration = slot_duration;
  for (int first = 0; first < total_sensors; first += per_slot) {
    schedule.slots.emplace_back(first, std::min(total_sensors, first + per_slot));
  }
  return schedule;
}

}  // namespace stno
