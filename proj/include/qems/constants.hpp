#pragma once

// CODATA 2018 values, SI units. h, e and k_B are exact in the 2019 SI.

#include <numbers>

namespace qems::constants {

inline constexpr double planck = 6.62607015e-34;          // J s
inline constexpr double hbar = 1.054571817e-34;           // J s
inline constexpr double boltzmann = 1.380649e-23;         // J / K
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F / m
inline constexpr double atomic_mass_unit = 1.66053906660e-27;    // kg
inline constexpr double speed_of_light = 299792458.0;           // m / s
inline constexpr double vacuum_permeability = 1.25663706212e-6;  // N / A^2

/// k = 1 / (4 pi epsilon_0).
inline constexpr double coulomb = 1.0 / (4.0 * std::numbers::pi * vacuum_permittivity);

inline constexpr double two_pi = 2.0 * std::numbers::pi;

}  // namespace qems::constants
