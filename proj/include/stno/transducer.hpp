#pragma once

#include <vector>

#include "stno/dynamics.hpp"
#include "stno/vec3.hpp"

namespace stno {

/// Endpoint resistances of the junction.
struct ResistancePair {
  double r_p = 1000.0;   // ohm, parallel
  double r_ap = 2000.0;  // ohm, antiparallel

  void validate() const {
    if (!(r_p > 0.0) || !(r_p < r_ap)) {
      throw std::domain_error("resistance pair: requires 0 < r_p < r_ap");
    }
  }
};

/// Sign convention of the angular magnetoresistance.
enum class TmrConvention {
  parallel_min,  // R(theta=0) = r_p, the physical TMR convention (default)
  literal,       // R(theta=0) = r_ap
};

/// Junction resistance as a function of cos(theta) = m . m_p.
/// Values within 1e-9 of |cos| = 1 are clamped; beyond that is a domain error.
double resistance(double cos_theta, const ResistancePair& pair,
                  TmrConvention convention = TmrConvention::parallel_min);

/// Pointwise V(t) = i(t) * R(m(t) . m_p). Ideal current-source drive.
std::vector<double> voltage_series(const Trajectory& traj, const Vec3& m_p,
                                   const ResistancePair& pair,
                                   TmrConvention convention = TmrConvention::parallel_min);

}  // namespace stno
