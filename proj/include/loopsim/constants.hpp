#pragma once

namespace loopsim {

/// Speed of light in vacuum [m/s], CODATA exact value.
inline constexpr double kLightSpeed = 2.99792458e8;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 6.28318530717958647692;

} // namespace loopsim
