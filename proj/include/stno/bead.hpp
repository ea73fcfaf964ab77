#pragma once

#include <cstddef>

#include "stno/geometry.hpp"
#include "stno/magnet.hpp"
#include "stno/vec3.hpp"

namespace stno {

/// Superparamagnetic label suspended above the sensor.
struct BeadParams {
  double radius = 100e-9;           // m
  double ms = 4.8e5;                // A/m, bulk saturation magnetization
  Vec3 position{0.0, 400e-9, 0.0};  // m, bead center relative to free-layer center
  double temperature = 300.0;       // K

  double volume() const;
  /// Saturation moment ms * volume, A m^2.
  double saturation_moment() const;
  void validate() const;
};

/// Quadrature resolution for the stray-field and averaging integrals.
struct QuadratureConfig {
  int grid_points = 8;            // per axis, face / volume integrals
  int circumference_segments = 64;  // total, thin-film line integral
  void validate() const;
};

/// Which electrode of the stack acts as the field source.
enum class Layer { free_layer, pinned_layer };

/// Classical Langevin function coth(x) - 1/x, series-expanded near zero.
double langevin(double x);

/// Magnetostatic field of a uniformly magnetized rectangular layer at an
/// outside point, via midpoint quadrature of the surface-charge integral over
/// all six faces. `magnetization` is the full vector M in A/m.
Vec3 layer_stray_field(Layer layer, const Vec3& magnetization, const Vec3& point,
                       const SensorGeometry& geometry, const QuadratureConfig& quad);

/// Thin-film limit of the above: in-plane surface charges collapse onto line
/// charges running around the layer perimeter. Requires in-plane magnetization.
Vec3 layer_stray_field_thin_film(Layer layer, const Vec3& magnetization, const Vec3& point,
                                 const SensorGeometry& geometry, const QuadratureConfig& quad);

/// Total field at the bead center: external bias plus stray fields of both
/// electrodes. `free_direction` is the (unit) free-layer orientation used for
/// the stray-field source, typically the easy axis.
Vec3 field_at_bead(const BeadParams& bead, const MagnetParams& magnet, const Vec3& h_external,
                   const QuadratureConfig& quad, const Vec3& free_direction);

/// Thermally averaged bead moment along the local field, A m^2.
Vec3 bead_moment(const Vec3& field_at_bead_center, const BeadParams& bead);

/// Result of averaging the bead dipole field over the free-layer volume.
struct AveragedBeadField {
  Vec3 value;                // A/m, volume-averaged field
  double refinement_change;  // relative change on doubling the grid
  bool converged;            // refinement_change <= 1e-3
};

/// Dipole field of `moment` placed at the bead center, averaged over the
/// free-layer volume by midpoint quadrature. The returned value comes from the
/// doubled grid; `refinement_change` compares it against the requested grid.
AveragedBeadField averaged_bead_field(const Vec3& moment, const BeadParams& bead,
                                      const SensorGeometry& geometry,
                                      const QuadratureConfig& quad);

/// Full chain: field at bead -> Langevin moment -> volume-averaged dipole
/// field acting back on the free layer.
AveragedBeadField bead_perturbation(const BeadParams& bead, const MagnetParams& magnet,
                                    const Vec3& h_external, const QuadratureConfig& quad);

}  // namespace stno
