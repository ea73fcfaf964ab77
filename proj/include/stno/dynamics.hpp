#pragma once

#include <cstdint>
#include <vector>

#include "stno/magnet.hpp"
#include "stno/rng.hpp"
#include "stno/vec3.hpp"

namespace stno {

/// Free-layer direction at a point in time. |m| stays within 1e-9 of 1.
struct SimState {
  Vec3 m{0.0, 0.0, 1.0};
  double t = 0.0;
};

enum class Scheme {
  rk4,   // deterministic, 4th order; rejects thermal noise
  heun,  // stochastic predictor-corrector (Stratonovich)
};

struct IntegratorConfig {
  double dt = 1e-12;  // s
  Scheme scheme = Scheme::rk4;
  bool renormalize_every_step = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(dt > 0.0)) throw std::domain_error("integrator: dt must be positive");
  }
};

/// Uniformly sampled magnetization and drive-current history.
struct Trajectory {
  double dt = 0.0;
  double t0 = 0.0;
  std::vector<Vec3> m;
  std::vector<double> current;

  std::size_t size() const { return m.size(); }
  double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }

  std::vector<double> component(double Vec3::* axis) const {
    std::vector<double> out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i].*axis;
    return out;
  }
};

/// Deterministic effective field: uniaxial anisotropy + applied static/RF
/// fields + bead perturbation. A/m.
Vec3 effective_field(const SimState& state, const MagnetParams& params,
                     const FieldSources& sources, double t);

/// Slonczewski torque |gamma| (hbar/(mu0 e)) (J/(t_f Ms)) P m x (m_p x m), 1/s.
/// This is the Gilbert-form torque; the stepper resolves the implicit form.
Vec3 stt_torque(const Vec3& m, double current_density, const MagnetParams& params);

/// Standard deviation of each thermal-field component over one step, A/m:
/// sigma^2 = 2 alpha k_B T / (gamma mu0 Ms V dt). A thermal-only run
/// equilibrates at the Boltzmann cone distribution, with per-transverse-
/// component rms deviation sin(theta_rms) = sqrt(kT / 2 E_b).
double thermal_field_sigma(const MagnetParams& params, double dt);

/// One thermal-field draw for a step of length dt. Zero at T = 0.
Vec3 thermal_field(const MagnetParams& params, double dt, Rng& rng);

/// Explicit Landau-Lifshitz-Slonczewski right-hand side, with the Gilbert
/// implicit damping already resolved (1/(1+alpha^2) form). h_total includes
/// any thermal field; j is the instantaneous current density.
Vec3 llgs_rhs(const Vec3& m, const Vec3& h_total, double j, const MagnetParams& params);

/// Owns the RNG stream for one simulation run.
class Simulator {
 public:
  Simulator(const MagnetParams& params, const FieldSources& sources, const DriveCurrent& drive,
            const IntegratorConfig& config);

  /// Advance by one dt. Throws IntegrationError on non-finite derivatives.
  SimState step(const SimState& state);

  /// Repeated stepping from `initial`, recording floor(duration/dt)+1 samples.
  Trajectory run(const SimState& initial, double duration);

  const MagnetParams& params() const { return params_; }

 private:
  SimState step_rk4(const SimState& state);
  SimState step_heun(const SimState& state);

  MagnetParams params_;
  FieldSources sources_;
  DriveCurrent drive_;
  IntegratorConfig config_;
  Rng rng_;
};

/// Convenience wrapper: build a Simulator and run it.
Trajectory simulate(const SimState& initial, const MagnetParams& params,
                    const FieldSources& sources, const DriveCurrent& drive,
                    const IntegratorConfig& config, double duration);

/// Default starting state: easy axis tilted 1 degree toward x to break the
/// collinear equilibrium deterministically.
SimState default_initial_state(const MagnetParams& params);

/// Zeeman + uniaxial anisotropy energy, J. Used by dissipation checks.
double magnetic_energy(const Vec3& m, const MagnetParams& params, const Vec3& h_static);

}  // namespace stno
