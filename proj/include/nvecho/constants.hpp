#pragma once

#include <cmath>
#include <numbers>

namespace nvecho {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// CODATA 2018 exact values.
inline constexpr double kHbar = 1.054571817e-34;     // J s
inline constexpr double kBoltzmann = 1.380649e-23;   // J / K

inline constexpr double kMilliwatt = 1.0e-3;         // W

/// Ordinary frequency (Hz) to angular frequency (rad/s).
constexpr double angular(double hz) { return kTwoPi * hz; }

/// Angular frequency (rad/s) to ordinary frequency (Hz).
constexpr double ordinary(double rad_s) { return rad_s / kTwoPi; }

}  // namespace nvecho
