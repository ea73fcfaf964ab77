#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "stno/constants.hpp"
#include "stno/geometry.hpp"
#include "stno/vec3.hpp"

namespace stno {

/// Free-layer material/device record. All quantities SI.
struct MagnetParams {
  double ms_free = 8e5;    // A/m
  double ms_pinned = 15e5; // A/m
  double alpha = 0.01;     // Gilbert damping
  double gamma = 2.21e5;   // m/(A*s), multiplies H in A/m
  double e_b = energy_in_kt(40.0);  // J, uniaxial anisotropy barrier
  double polarization = 0.03675;    // Slonczewski P (spin-transfer efficiency)
  Vec3 m_p{0.0, 0.0, 0.0};          // pinned-layer polarization direction (unit)
  Vec3 easy_axis{0.0, 0.0, 1.0};    // unit
  double temperature = 300.0;       // K
  SensorGeometry geometry{};

  MagnetParams() {
    // Polarizer tilted off the applied-field axis so the magnetoresistance
    // signal and injection coupling carry the fundamental precession
    // harmonic; anti-aligned with the static field so that positive bias
    // pumps the precession rather than damping it.
    const double tilt = 30.0 * std::numbers::pi / 180.0;
    m_p = Vec3{-std::cos(tilt), 0.0, -std::sin(tilt)};
  }

  double t_free() const { return geometry.t_free; }

  /// Uniaxial anisotropy field 2*E_b / (mu0 * Ms * V_free), A/m.
  double anisotropy_field() const {
    return 2.0 * e_b / (kMu0 * ms_free * geometry.volume_free());
  }

  void validate() const {
    geometry.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("magnet: alpha must be in (0,1)");
    if (!(polarization > 0.0 && polarization <= 1.0))
      throw std::domain_error("magnet: polarization must be in (0,1]");
    if (!(e_b > 0.0)) throw std::domain_error("magnet: energy barrier must be positive");
    if (!(ms_free > 0.0)) throw std::domain_error("magnet: Ms must be positive");
    if (std::abs(m_p.norm() - 1.0) > 1e-9)
      throw std::domain_error("magnet: pinned polarization must be a unit vector");
    if (std::abs(easy_axis.norm() - 1.0) > 1e-9)
      throw std::domain_error("magnet: easy axis must be a unit vector");
    if (!(temperature >= 0.0)) throw std::domain_error("magnet: temperature must be >= 0");
  }
};

/// DC bias plus injected RF current.
struct DriveCurrent {
  double i_dc = 200e-6;  // A
  double i_rf = 0.0;     // A, amplitude
  double f_rf = 0.0;     // Hz
  double phase = 0.0;    // rad

  double at(double t) const {
    return i_dc + i_rf * std::cos(2.0 * std::numbers::pi * f_rf * t + phase);
  }

  void validate() const {
    if (i_rf < 0.0) throw std::domain_error("drive: RF amplitude must be >= 0");
    if (f_rf < 0.0) throw std::domain_error("drive: RF frequency must be >= 0");
  }
};

/// Field sources composed into the effective field. The thermal term is
/// drawn by the stepper, not here.
struct FieldSources {
  Vec3 h_static{oersted_to_si(5000.0), 0.0, 0.0};  // A/m, applied along x
  Vec3 h_rf_amplitude{0.0, 0.0, 0.0};              // A/m
  double h_rf_frequency = 0.0;                     // Hz
  Vec3 bead_field{0.0, 0.0, 0.0};                  // A/m, constant perturbation
  bool thermal_enabled = false;
  /// Input-referred noise calibration: scales the thermal-field draw.
  /// 1 = full fluctuation-dissipation variance at `temperature`.
  double thermal_scale = 1.0;

  Vec3 applied_at(double t) const {
    Vec3 h = h_static + bead_field;
    if (h_rf_frequency > 0.0 || h_rf_amplitude.norm_sq() > 0.0) {
      h += h_rf_amplitude * std::cos(2.0 * std::numbers::pi * h_rf_frequency * t);
    }
    return h;
  }

  void validate() const {
    if (h_rf_frequency < 0.0) throw std::domain_error("fields: RF frequency must be >= 0");
    if (!(thermal_scale >= 0.0))
      throw std::domain_error("fields: thermal scale must be >= 0");
  }
};

}  // namespace stno
