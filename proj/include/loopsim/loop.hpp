#pragma once

#include <cmath>

#include "loopsim/errors.hpp"
#include "loopsim/spectral.hpp"

namespace loopsim {

/// @brief Fiber-loop geometry: total length, pair-generation point, pump-axis
/// birefringence and the static phase offset between the two pump components.
struct LoopConfig {
    double length_m = 0.0;  ///< loop length L [m]
    double x_m = 0.0;       ///< generation point, distance along the H (CW pump) direction [m]
    double delta_n = 0.0;   ///< pump-axis index split n_V - n_H, in [0, 1e-3)
    double varphi = 0.0;    ///< injected phase offset between pump components [rad]
    SpectralConfig spectral;

    void validate() const {
        if (!(length_m > 0.0) || !std::isfinite(length_m))
            throw invalid_config("loop: length_m must be positive finite");
        if (!(x_m >= 0.0) || !(x_m <= length_m))
            throw invalid_config("loop: x_m must lie in [0, length_m]");
        if (!(delta_n >= 0.0) || !(delta_n < 1e-3))
            throw invalid_config("loop: delta_n must lie in [0, 1e-3)");
        if (!std::isfinite(varphi))
            throw invalid_config("loop: varphi must be finite");
        spectral.validate();
    }
};

/// @brief Pump splitting amplitudes: alpha into the H (CW) path, beta into
/// the V (CCW) path. Real, non-negative, alpha^2 + beta^2 == 1 (1e-12).
struct PumpConfig {
    double alpha = 0.0;
    double beta = 0.0;

    void validate() const {
        if (!(alpha >= 0.0) || !(beta >= 0.0))
            throw invalid_config("pump: amplitudes must be non-negative");
        if (std::fabs(alpha * alpha + beta * beta - 1.0) > 1e-12)
            throw invalid_config("pump: alpha^2 + beta^2 must equal 1 (1e-12)");
    }
};

} // namespace loopsim
