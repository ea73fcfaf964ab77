#include "stno/bead.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "stno/constants.hpp"

namespace stno {

namespace {

struct Box {
  Vec3 center;
  Vec3 half;  // half extents per axis
};

Box layer_box(Layer layer, const SensorGeometry& geometry) {
  switch (layer) {
    case Layer::free_layer:
      return {geometry.center,
              {0.5 * geometry.length, 0.5 * geometry.t_free, 0.5 * geometry.width}};
    case Layer::pinned_layer:
      return {geometry.pinned_center(),
              {0.5 * geometry.length, 0.5 * geometry.t_pinned, 0.5 * geometry.width}};
  }
  throw std::logic_error("layer_box: unknown layer");
}

bool inside(const Box& box, const Vec3& p) {
  return std::abs(p.x - box.center.x) < box.half.x &&
         std::abs(p.y - box.center.y) < box.half.y &&
         std::abs(p.z - box.center.z) < box.half.z;
}

/// Accumulated 1/(4 pi) * q * (r - r') / |r - r'|^3 for a point charge q at r'.
Vec3 coulomb_term(double charge, const Vec3& source, const Vec3& point) {
  const Vec3 d = point - source;
  const double r = d.norm();
  return d * (charge / (4.0 * std::numbers::pi * r * r * r));
}

}  // namespace

double BeadParams::volume() const {
  return (4.0 / 3.0) * std::numbers::pi * radius * radius * radius;
}

double BeadParams::saturation_moment() const { return ms * volume(); }

void BeadParams::validate() const {
  if (!(radius > 0.0)) throw std::domain_error("bead: radius must be positive");
  if (!(ms > 0.0)) throw std::domain_error("bead: saturation magnetization must be positive");
  if (!(temperature > 0.0)) throw std::domain_error("bead: temperature must be positive");
}

void QuadratureConfig::validate() const {
  if (grid_points < 2) throw std::domain_error("quadrature: grid_points must be >= 2");
  if (circumference_segments < 2) {
    throw std::domain_error("quadrature: circumference_segments must be >= 2");
  }
}

double langevin(double x) {
  if (!std::isfinite(x)) throw std::domain_error("langevin: argument must be finite");
  const double ax = std::abs(x);
  if (ax < 1e-4) {
    // coth(x) - 1/x = x/3 - x^3/45 + O(x^5); below 1e-4 the series is exact
    // to double precision and avoids the catastrophic cancellation of the
    // direct form.
    return x / 3.0 - x * x * x / 45.0;
  }
  return 1.0 / std::tanh(x) - 1.0 / x;
}

Vec3 layer_stray_field(Layer layer, const Vec3& magnetization, const Vec3& point,
                       const SensorGeometry& geometry, const QuadratureConfig& quad) {
  geometry.validate();
  quad.validate();
  const Box box = layer_box(layer, geometry);
  if (inside(box, point)) {
    throw std::domain_error("layer_stray_field: evaluation point lies inside the layer");
  }

  const int g = quad.grid_points;
  Vec3 h{};
  // One face per coordinate axis and sign. Surface charge density is M . n.
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    const double du = 2.0 * box.half[u] / g;
    const double dv = 2.0 * box.half[v] / g;
    const double area_element = du * dv;
    for (double sign : {1.0, -1.0}) {
      const double sigma = sign * magnetization[axis];
      if (sigma == 0.0) continue;
      Vec3 source;
      source[axis] = box.center[axis] + sign * box.half[axis];
      for (int i = 0; i < g; ++i) {
        source[u] = box.center[u] - box.half[u] + (i + 0.5) * du;
        for (int j = 0; j < g; ++j) {
          source[v] = box.center[v] - box.half[v] + (j + 0.5) * dv;
          h += coulomb_term(sigma * area_element, source, point);
        }
      }
    }
  }
  return h;
}

Vec3 layer_stray_field_thin_film(Layer layer, const Vec3& magnetization, const Vec3& point,
                                 const SensorGeometry& geometry, const QuadratureConfig& quad) {
  geometry.validate();
  quad.validate();
  if (std::abs(magnetization.y) > 1e-9 * magnetization.norm()) {
    throw std::domain_error(
        "layer_stray_field_thin_film: magnetization must lie in the film plane");
  }
  const Box box = layer_box(layer, geometry);
  if (inside(box, point)) {
    throw std::domain_error("layer_stray_field_thin_film: point lies inside the layer");
  }

  const double thickness = 2.0 * box.half.y;
  const double perimeter = 4.0 * (box.half.x + box.half.z);
  Vec3 h{};
  // The four side faces collapse onto line charges along the mid-thickness
  // perimeter, with linear density sigma * thickness.
  for (int axis : {0, 2}) {
    const int along = (axis == 0) ? 2 : 0;
    const double side_length = 2.0 * box.half[along];
    const int segments =
        std::max(1, static_cast<int>(std::lround(quad.circumference_segments * side_length /
                                                 perimeter)));
    const double dl = side_length / segments;
    for (double sign : {1.0, -1.0}) {
      const double sigma = sign * magnetization[axis];
      if (sigma == 0.0) continue;
      Vec3 source = box.center;
      source[axis] = box.center[axis] + sign * box.half[axis];
      for (int i = 0; i < segments; ++i) {
        source[along] = box.center[along] - box.half[along] + (i + 0.5) * dl;
        h += coulomb_term(sigma * thickness * dl, source, point);
      }
    }
  }
  return h;
}

Vec3 field_at_bead(const BeadParams& bead, const MagnetParams& magnet, const Vec3& h_external,
                   const QuadratureConfig& quad, const Vec3& free_direction) {
  bead.validate();
  const Vec3 m_free = free_direction.normalized() * magnet.ms_free;
  const Vec3 m_pinned = magnet.m_p.normalized() * magnet.ms_pinned;
  return h_external +
         layer_stray_field(Layer::free_layer, m_free, bead.position, magnet.geometry, quad) +
         layer_stray_field(Layer::pinned_layer, m_pinned, bead.position, magnet.geometry, quad);
}

Vec3 bead_moment(const Vec3& field_at_bead_center, const BeadParams& bead) {
  bead.validate();
  const double h = field_at_bead_center.norm();
  if (h == 0.0) return Vec3{};
  const double msat = bead.saturation_moment();
  const double x = kMu0 * msat * h / (kBoltzmann * bead.temperature);
  return field_at_bead_center * (msat * langevin(x) / h);
}

namespace {

/// Dipole field of `moment` at `point`, source at `origin`.
Vec3 dipole_field(const Vec3& moment, const Vec3& origin, const Vec3& point) {
  const Vec3 d = point - origin;
  const double r = d.norm();
  const Vec3 rhat = d / r;
  return (rhat * (3.0 * moment.dot(rhat)) - moment) /
         (4.0 * std::numbers::pi * r * r * r);
}

Vec3 volume_average(const Vec3& moment, const Vec3& origin, const Box& box, int g) {
  Vec3 sum{};
  Vec3 p;
  for (int i = 0; i < g; ++i) {
    p.x = box.center.x - box.half.x + (i + 0.5) * 2.0 * box.half.x / g;
    for (int j = 0; j < g; ++j) {
      p.y = box.center.y - box.half.y + (j + 0.5) * 2.0 * box.half.y / g;
      for (int k = 0; k < g; ++k) {
        p.z = box.center.z - box.half.z + (k + 0.5) * 2.0 * box.half.z / g;
        sum += dipole_field(moment, origin, p);
      }
    }
  }
  return sum / static_cast<double>(g * g * g);
}

}  // namespace

AveragedBeadField averaged_bead_field(const Vec3& moment, const BeadParams& bead,
                                      const SensorGeometry& geometry,
                                      const QuadratureConfig& quad) {
  geometry.validate();
  quad.validate();
  const Box box = layer_box(Layer::free_layer, geometry);
  if (inside(box, bead.position)) {
    throw std::domain_error("averaged_bead_field: bead center lies inside the free layer");
  }
  const Vec3 coarse = volume_average(moment, bead.position, box, quad.grid_points);
  const Vec3 fine = volume_average(moment, bead.position, box, 2 * quad.grid_points);
  const double scale = fine.norm();
  const double change = scale > 0.0 ? (fine - coarse).norm() / scale : 0.0;
  return {fine, change, change <= 1e-3};
}

AveragedBeadField bead_perturbation(const BeadParams& bead, const MagnetParams& magnet,
                                    const Vec3& h_external, const QuadratureConfig& quad) {
  const Vec3 h_at_bead = field_at_bead(bead, magnet, h_external, quad, magnet.easy_axis);
  const Vec3 moment = bead_moment(h_at_bead, bead);
  return averaged_bead_field(moment, bead, magnet.geometry, quad);
}

}  // namespace stno
