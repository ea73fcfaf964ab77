#include "stno/transducer.hpp"

#include <cmath>
#include <stdexcept>

namespace stno {

double resistance(double cos_theta, const ResistancePair& pair, TmrConvention convention) {
  pair.validate();
  if (std::abs(cos_theta) > 1.0 + 1e-9) {
    throw std::domain_error("resistance: |cos(theta)| exceeds 1");
  }
  const double c = std::clamp(cos_theta, -1.0, 1.0);
  const double mean = 0.5 * (pair.r_p + pair.r_ap);
  const double half_swing = 0.5 * (pair.r_ap - pair.r_p);
  switch (convention) {
    case TmrConvention::parallel_min:
      return mean - half_swing * c;
    case TmrConvention::literal:
      return mean + half_swing * c;
  }
  throw std::logic_error("resistance: unknown convention");
}

std::vector<double> voltage_series(const Trajectory& traj, const Vec3& m_p,
                                   const ResistancePair& pair, TmrConvention convention) {
  pair.validate();
  std::vector<double> v;
  v.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double r = resistance(traj.m[k].dot(m_p), pair, convention);
    v.push_back(traj.current[k] * r);
  }
  return v;
}

}  // namespace stno
