#include "stno/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "stno/errors.hpp"

namespace stno {

Vec3 effective_field(const SimState& state, const MagnetParams& params,
                     const FieldSources& sources, double t) {
  const double h_k = params.anisotropy_field();
  const Vec3 anis = params.easy_axis * (h_k * state.m.dot(params.easy_axis));
  return anis + sources.applied_at(t);
}

Vec3 stt_torque(const Vec3& m, double current_density, const MagnetParams& params) {
  const double prefactor = params.gamma * (kHbar / (kMu0 * kElementaryCharge)) *
                           current_density / (params.t_free() * params.ms_free) *
                           params.polarization;
  return m.cross(params.m_p.cross(m)) * prefactor;
}

double thermal_field_sigma(const MagnetParams& params, double dt) {
  if (params.temperature <= 0.0) return 0.0;
  // Brown's fluctuation-field variance. A uniaxial magnet equilibrated with
  // this noise reaches the Boltzmann cone distribution, whose per-transverse-
  // component rms is sqrt(kT / 2 E_b) -- the calibration target verified by
  // the equilibrium ensemble tests.
  const double variance = 2.0 * params.alpha * kBoltzmann * params.temperature /
                          (params.gamma * kMu0 * params.ms_free *
                           params.geometry.volume_free() * dt);
  return std::sqrt(variance);
}

Vec3 thermal_field(const MagnetParams& params, double dt, Rng& rng) {
  const double sigma = thermal_field_sigma(params, dt);
  if (sigma == 0.0) return {0.0, 0.0, 0.0};
  return {rng.gaussian(sigma), rng.gaussian(sigma), rng.gaussian(sigma)};
}

Vec3 llgs_rhs(const Vec3& m, const Vec3& h_total, double j, const MagnetParams& params) {
  const double gamma = params.gamma;
  const double alpha = params.alpha;
  const Vec3 m_x_h = m.cross(h_total);
  const Vec3 precession = m_x_h * (-gamma);
  const Vec3 damping = m.cross(m_x_h) * (-gamma * alpha);
  const Vec3 stt = stt_torque(m, j, params);
  // Gilbert -> Landau-Lifshitz: dm/dt = [P + D + T + alpha m x T] / (1+a^2)
  return (precession + damping + stt + m.cross(stt) * alpha) / (1.0 + alpha * alpha);
}

Simulator::Simulator(const MagnetParams& params, const FieldSources& sources,
                     const DriveCurrent& drive, const IntegratorConfig& config)
    : params_(params), sources_(sources), drive_(drive), config_(config), rng_(config.seed) {
  params_.validate();
  sources_.validate();
  drive_.validate();
  config_.validate();
  if (config_.scheme == Scheme::rk4 && sources_.thermal_enabled && params_.temperature > 0.0) {
    throw std::domain_error("integrator: thermal noise requires the heun scheme");
  }
}

namespace {

void check_finite(const Vec3& dmdt, double t, const Vec3& m) {
  if (!dmdt.is_finite()) {
    std::ostringstream os;
    os << "integration failure: non-finite derivative at t = " << t << " s, m = " << m;
    throw IntegrationError(os.str(), t, m);
  }
}

}  // namespace

SimState Simulator::step_rk4(const SimState& state) {
  const double dt = config_.dt;
  const double t = state.t;

  auto rhs = [&](const Vec3& m, double ti) {
    const SimState s{m, ti};
    const Vec3 h = effective_field(s, params_, sources_, ti);
    const double j = current_to_density(drive_.at(ti), params_.geometry);
    return llgs_rhs(m, h, j, params_);
  };

  const Vec3 k1 = rhs(state.m, t);
  const Vec3 k2 = rhs(state.m + k1 * (0.5 * dt), t + 0.5 * dt);
  const Vec3 k3 = rhs(state.m + k2 * (0.5 * dt), t + 0.5 * dt);
  const Vec3 k4 = rhs(state.m + k3 * dt, t + dt);
  const Vec3 dmdt = (k1 + (k2 + k3) * 2.0 + k4) / 6.0;
  check_finite(dmdt, t, state.m);

  SimState next{state.m + dmdt * dt, t + dt};
  if (config_.renormalize_every_step) next.m.normalize();
  return next;
}

SimState Simulator::step_heun(const SimState& state) {
  const double dt = config_.dt;
  const double t = state.t;

  // One field draw per step, held fixed across predictor and corrector
  // (Stratonovich/Heun treatment of the Wiener increment).
  const Vec3 h_th = sources_.thermal_enabled
                        ? thermal_field(params_, dt, rng_) * sources_.thermal_scale
                        : Vec3{0.0, 0.0, 0.0};

  auto rhs = [&](const Vec3& m, double ti) {
    const SimState s{m, ti};
    const Vec3 h = effective_field(s, params_, sources_, ti) + h_th;
    const double j = current_to_density(drive_.at(ti), params_.geometry);
    return llgs_rhs(m, h, j, params_);
  };

  const Vec3 f0 = rhs(state.m, t);
  check_finite(f0, t, state.m);
  Vec3 predictor = state.m + f0 * dt;
  predictor.normalize();
  const Vec3 f1 = rhs(predictor, t + dt);
  check_finite(f1, t + dt, predictor);

  SimState next{state.m + (f0 + f1) * (0.5 * dt), t + dt};
  if (config_.renormalize_every_step) next.m.normalize();
  return next;
}

SimState Simulator::step(const SimState& state) {
  return config_.scheme == Scheme::rk4 ? step_rk4(state) : step_heun(state);
}

Trajectory Simulator::run(const SimState& initial, double duration) {
  if (duration < config_.dt) {
    throw std::domain_error("simulate: duration must be at least one time step");
  }
  const auto steps = static_cast<std::size_t>(std::floor(duration / config_.dt));

  Trajectory traj;
  traj.dt = config_.dt;
  traj.t0 = initial.t;
  traj.m.reserve(steps + 1);
  traj.current.reserve(steps + 1);

  SimState state = initial;
  traj.m.push_back(state.m);
  traj.current.push_back(drive_.at(state.t));
  for (std::size_t i = 0; i < steps; ++i) {
    state = step(state);
    traj.m.push_back(state.m);
    traj.current.push_back(drive_.at(state.t));
  }
  return traj;
}

Trajectory simulate(const SimState& initial, const MagnetParams& params,
                    const FieldSources& sources, const DriveCurrent& drive,
                    const IntegratorConfig& config, double duration) {
  Simulator sim(params, sources, drive, config);
  return sim.run(initial, duration);
}

SimState default_initial_state(const MagnetParams& params) {
  const double tilt = std::numbers::pi / 180.0;
  Vec3 transverse = kXAxis - params.easy_axis * params.easy_axis.dot(kXAxis);
  if (transverse.norm() < 1e-12) {
    transverse = kYAxis - params.easy_axis * params.easy_axis.dot(kYAxis);
  }
  transverse.normalize();
  Vec3 m = params.easy_axis * std::cos(tilt) + transverse * std::sin(tilt);
  m.normalize();
  return SimState{m, 0.0};
}

double magnetic_energy(const Vec3& m, const MagnetParams& params, const Vec3& h_static) {
  const double zeeman = -kMu0 * params.ms_free * params.geometry.volume_free() *
                        m.dot(h_static);
  const double mz = m.dot(params.easy_axis);
  return zeeman - params.e_b * mz * mz;
}

}  // namespace stno
