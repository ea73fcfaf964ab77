#pragma once

#include <numbers>

namespace stno {

// Physical constants, SI. Everything downstream assumes fields and
// magnetizations in A/m, lengths in meters, energies in joules.
inline constexpr double kMu0 = 4.0 * std::numbers::pi * 1.0e-7;  // T*m/A
inline constexpr double kBoltzmann = 1.380649e-23;               // J/K
inline constexpr double kElementaryCharge = 1.602176634e-19;     // C
inline constexpr double kHbar = 1.054571817e-34;                 // J*s

// Room temperature used by the "kT" energy unit in configuration files.
inline constexpr double kReferenceTemperature = 300.0;  // K

// 1 Oe = 1000/(4*pi) A/m
inline constexpr double kOerstedToAmPerM = 1000.0 / (4.0 * std::numbers::pi);

constexpr double oersted_to_si(double oe) { return oe * kOerstedToAmPerM; }
constexpr double si_to_oersted(double am) { return am / kOerstedToAmPerM; }

// 1 emu/cc = 1000 A/m
constexpr double emu_cc_to_si(double emu_cc) { return emu_cc * 1000.0; }
constexpr double si_to_emu_cc(double am) { return am / 1000.0; }

constexpr double energy_in_kt(double kt_multiple, double temperature = kReferenceTemperature) {
  return kt_multiple * kBoltzmann * temperature;
}

}  // namespace stno
