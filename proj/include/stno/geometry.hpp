#pragma once

#include <stdexcept>

#include "stno/vec3.hpp"

namespace stno {

/// Rectangular MTJ stack geometry. The film plane is x-z (length along x,
/// width along z); layer thicknesses stack along +y with the free layer on
/// top, centered on `center`. A bead "above the sensor" sits at +y.
struct SensorGeometry {
  double length = 30e-9;       // m, along x
  double width = 30e-9;        // m, along z
  double t_free = 1.5e-9;      // m
  double t_pinned = 2e-9;      // m
  double t_spacer = 2e-9;      // m
  Vec3 center{0.0, 0.0, 0.0};  // free-layer center, m

  double area() const { return length * width; }
  double volume_free() const { return length * width * t_free; }

  /// Center of the pinned layer (below the free layer across the spacer).
  Vec3 pinned_center() const {
    return center - Vec3{0.0, 0.5 * t_free + t_spacer + 0.5 * t_pinned, 0.0};
  }

  void validate() const {
    if (!(length > 0.0) || !(width > 0.0) || !(t_free > 0.0) || !(t_pinned > 0.0) ||
        !(t_spacer > 0.0)) {
      throw std::domain_error("sensor geometry: all dimensions must be strictly positive");
    }
  }
};

/// Current density through the device cross-section. Sign is preserved; it
/// selects the torque polarity.
inline double current_to_density(double current_a, const SensorGeometry& geom) {
  const double a = geom.area();
  if (!(a > 0.0)) {
    throw std::domain_error("current_to_density: device area must be positive");
  }
  return current_a / a;
}

}  // namespace stno
