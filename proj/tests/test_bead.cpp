#include <cmath>
#include <numbers>
#include <stdexcept>

#include "doctest.h"
#include "stno/bead.hpp"
#include "stno/constants.hpp"

using namespace stno;

namespace {

/// Analytic H-field of a point dipole `moment` at `origin`, evaluated at
/// `point`: (1/4pi) [3 (m.r) r / r^5 - m / r^3].
Vec3 dipole_reference(const Vec3& moment, const Vec3& origin, const Vec3& point) {
  const Vec3 r = point - origin;
  const double d = r.norm();
  const double d3 = d * d * d;
  const Vec3 rhat = r / d;
  return (rhat * (3.0 * moment.dot(rhat)) - moment) / (4.0 * std::numbers::pi * d3);
}

}  // namespace

TEST_CASE("langevin function against hand-computed values") {
  CHECK(langevin(0.0) == 0.0);
  CHECK(langevin(1.0) == doctest::Approx(0.31303528549933146).epsilon(1e-14));
  CHECK(langevin(-1.0) == doctest::Approx(-0.31303528549933146).epsilon(1e-14));
  // Small-argument limit x/3.
  CHECK(langevin(1e-8) == doctest::Approx(1e-8 / 3.0).epsilon(1e-12));
  // Strong-field limit 1 - 1/x.
  CHECK(langevin(50.0) == doctest::Approx(1.0 - 1.0 / 50.0).epsilon(1e-12));
  CHECK_THROWS_AS(langevin(std::nan("")), std::domain_error);
}

TEST_CASE("bead volume and saturation moment") {
  BeadParams bead;  // radius 100 nm, ms 4.8e5 A/m
  CHECK(bead.volume() == doctest::Approx(4.188790204786391e-21).epsilon(1e-12));
  CHECK(bead.saturation_moment() == doctest::Approx(2.0106192982974674e-15).epsilon(1e-12));

  BeadParams bad = bead;
  bad.radius = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  bad = bead;
  bad.temperature = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
}

TEST_CASE("bead moment follows the Langevin law along the local field") {
  BeadParams bead;
  const double msat = bead.saturation_moment();

  // Moment is parallel to the field with magnitude msat * L(mu0 msat H / kT).
  const Vec3 h{123456.0, -654321.0, 98765.0};
  const Vec3 m = bead_moment(h, bead);
  const double xi = kMu0 * msat * h.norm() / (kBoltzmann * bead.temperature);
  CHECK(m.norm() == doctest::Approx(msat * langevin(xi)).epsilon(1e-12));
  CHECK(m.cross(h).norm() / (m.norm() * h.norm()) < 1e-12);

  // At the 5 kOe operating field the bead is essentially saturated.
  const Vec3 m_op = bead_moment(Vec3{oersted_to_si(5000.0), 0.0, 0.0}, bead);
  CHECK(m_op.x / msat > 0.99999);
  CHECK(m_op.x / msat < 1.0);

  CHECK(bead_moment(Vec3{}, bead).norm() == 0.0);
}

TEST_CASE("layer stray field matches the point dipole in the far zone") {
  SensorGeometry geom;  // 30 x 30 x 1.5 nm free layer
  QuadratureConfig quad;
  const Vec3 magnetization{8e5, 0.0, 0.0};
  const Vec3 moment = magnetization * geom.volume_free();

  // Distances >= 10x the largest layer extent (30 nm), several directions.
  const Vec3 points[] = {
      {0.0, 400e-9, 0.0},   // stack normal
      {400e-9, 0.0, 0.0},   // along the moment
      {0.0, 0.0, 350e-9},   // in-plane, transverse
      {250e-9, 250e-9, 250e-9},
      {-300e-9, 320e-9, -150e-9},
  };
  for (const Vec3& p : points) {
    const Vec3 numeric = layer_stray_field(Layer::free_layer, magnetization, p, geom, quad);
    const Vec3 exact = dipole_reference(moment, Vec3{}, p);
    CHECK((numeric - exact).norm() / exact.norm() < 0.01);
  }
}

TEST_CASE("thin-film line-charge limit agrees with the face quadrature") {
  SensorGeometry geom;
  QuadratureConfig quad;
  quad.grid_points = 16;
  quad.circumference_segments = 256;
  const Vec3 magnetization{8e5, 0.0, 0.0};  // in-plane, as the limit requires
  const Vec3 points[] = {
      {0.0, 400e-9, 0.0},
      {200e-9, 150e-9, 100e-9},
      {-120e-9, 300e-9, 60e-9},
  };
  for (const Vec3& p : points) {
    const Vec3 full = layer_stray_field(Layer::free_layer, magnetization, p, geom, quad);
    const Vec3 thin =
        layer_stray_field_thin_film(Layer::free_layer, magnetization, p, geom, quad);
    CHECK((full - thin).norm() / full.norm() < 0.01);
  }
}

TEST_CASE("averaged bead field reproduces the transverse point dipole") {
  // A moment perpendicular to its displacement produces H = -m/(4 pi r^3) at
  // the origin; with |m| = 2.0106e-15 A m^2 at 400 nm that is 2500 A/m.
  BeadParams bead;  // centered 400 nm up the stack normal
  SensorGeometry geom;
  QuadratureConfig quad;
  const Vec3 moment{-bead.saturation_moment(), 0.0, 0.0};

  const AveragedBeadField avg = averaged_bead_field(moment, bead, geom, quad);
  CHECK(avg.converged);
  CHECK(avg.refinement_change < 1e-3);
  CHECK(avg.value.x == doctest::Approx(2500.0).epsilon(0.01));
  CHECK(std::abs(avg.value.y) < 5.0);
  CHECK(std::abs(avg.value.z) < 5.0);
}

TEST_CASE("averaged bead field reproduces the axial point dipole") {
  // On-axis the dipole field is +2m/(4 pi r^3): 5000 A/m for the same moment.
  BeadParams bead;
  SensorGeometry geom;
  QuadratureConfig quad;
  const Vec3 moment{0.0, bead.saturation_moment(), 0.0};

  const AveragedBeadField avg = averaged_bead_field(moment, bead, geom, quad);
  CHECK(avg.converged);
  CHECK(avg.value.y == doctest::Approx(5000.0).epsilon(0.01));
  CHECK(std::abs(avg.value.x) < 5.0);
  CHECK(std::abs(avg.value.z) < 5.0);
}

TEST_CASE("field at the bead is the external field plus electrode strays") {
  BeadParams bead;
  MagnetParams magnet;
  QuadratureConfig quad;
  const Vec3 h_ext{oersted_to_si(5000.0), 0.0, 0.0};

  // Far away the strays vanish.
  BeadParams far = bead;
  far.position = Vec3{0.0, 10e-6, 0.0};
  const Vec3 f_far = field_at_bead(far, magnet, h_ext, quad, magnet.easy_axis);
  CHECK((f_far - h_ext).norm() < 1e-2);

  // At 400 nm the strays contribute a small but nonzero correction.
  const Vec3 f_near = field_at_bead(bead, magnet, h_ext, quad, magnet.easy_axis);
  const double stray = (f_near - h_ext).norm();
  CHECK(stray > 0.1);
  CHECK(stray < 100.0);
}

TEST_CASE("full bead perturbation chain at the operating point") {
  // 200 nm bead, 400 nm above the stack, 5 kOe along x: the bead saturates
  // along the field and its dipole field at the free layer opposes it. The
  // magnitude is the transverse dipole value corrected by volume averaging
  // and the electrode strays.
  BeadParams bead;
  MagnetParams magnet;
  QuadratureConfig quad;
  const Vec3 h_ext{oersted_to_si(5000.0), 0.0, 0.0};

  const AveragedBeadField pert = bead_perturbation(bead, magnet, h_ext, quad);
  CHECK(pert.converged);
  CHECK(pert.value.x == doctest::Approx(-2493.0).epsilon(0.01));
  CHECK(std::abs(pert.value.y) < 10.0);
  CHECK(std::abs(pert.value.z) < 10.0);
}

TEST_CASE("quadrature validation") {
  QuadratureConfig quad;
  quad.grid_points = 1;
  CHECK_THROWS_AS(quad.validate(), std::domain_error);
  quad = QuadratureConfig{};
  quad.circumference_segments = 1;
  CHECK_THROWS_AS(quad.validate(), std::domain_error);
}
