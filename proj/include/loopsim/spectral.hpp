#pragma once

#include <cmath>
#include <limits>

#include "loopsim/compensated.hpp"
#include "loopsim/constants.hpp"
#include "loopsim/errors.hpp"

namespace loopsim {

/// @brief Angular frequencies and wavenumbers of pump, signal and idler for
/// both loop polarizations.
///
/// Frequencies must satisfy omega_s + omega_i == 2*omega_p (relative 1e-12).
/// Wavenumbers are free; the phase-matching residues delta_k_H/V are derived
/// quantities and may be nonzero.
struct SpectralConfig {
    double omega_p = 0.0; ///< pump angular frequency [rad/s]
    double omega_s = 0.0;
    double omega_i = 0.0;
    double k_ph = 0.0; ///< pump wavenumber, H (clockwise-injected) axis [rad/m]
    double k_pv = 0.0;
    double k_sh = 0.0;
    double k_sv = 0.0;
    double k_ih = 0.0;
    double k_iv = 0.0;

    void validate() const {
        const double ks[] = {omega_p, omega_s, omega_i, k_ph, k_pv, k_sh, k_sv, k_ih, k_iv};
        for (double v : ks)
            if (!(v > 0.0) || !std::isfinite(v))
                throw invalid_config("spectral: frequencies and wavenumbers must be positive finite");
        double mismatch = std::fabs((omega_s - omega_p) + (omega_i - omega_p));
        if (mismatch > 1e-12 * 2.0 * omega_p)
            throw invalid_config("spectral: omega_s + omega_i must equal 2*omega_p (rel 1e-12)");
    }

    /// 2*k_pX - (k_sX + k_iX), evaluated exactly over the stored doubles.
    double delta_k_h() const {
        dd::Dd r = dd::two_sum(2.0 * k_ph, -k_sh); // 2*k is exact
        return dd::value(dd::add(r, -k_ih));
    }
    double delta_k_v() const {
        dd::Dd r = dd::two_sum(2.0 * k_pv, -k_sv);
        return dd::value(dd::add(r, -k_iv));
    }

    /// k_pV - k_pH; exact (Sterbenz) since the two lie within a factor of 2.
    double pump_k_split() const { return k_pv - k_ph; }
};

namespace detail {

/// Quantum such that k +/- any multiple of it is exactly representable for
/// k in the source binade and both neighbors.
inline double lattice_quantum(double k) {
    return 2.0 * (std::nextafter(k, std::numeric_limits<double>::infinity()) - k);
}

inline double snap_to_lattice(double d, double quantum) {
    return std::rint(d / quantum) * quantum;
}

} // namespace detail

/// @brief Build a phase-matched SpectralConfig from fiber parameters.
///
/// Wavenumbers follow k = n*omega/c with the V axis seeing n + delta_n.
/// Signal/idler are placed symmetrically around the pump on a float lattice
/// so that k_sX + k_iX == 2*k_pX holds exactly over the stored doubles
/// (detunings are snapped to multiples of 2 ulp of k_pH, a shift of at most
/// half a quantum, ~1e-9 rad/m). Without the snap the residue delta_k*L
/// would be of order 1e-6 rad and would mask the real loop physics.
inline SpectralConfig phase_matched_spectral(double lambda_pump_m, double lambda_signal_m,
                                             double n, double delta_n) {
    if (!(lambda_pump_m > 0.0) || !(lambda_signal_m > 0.0))
        throw invalid_config("spectral: wavelengths must be positive");
    if (!(n > 0.0) || !(delta_n >= 0.0))
        throw invalid_config("spectral: refractive index must be positive, delta_n >= 0");

    SpectralConfig s;
    s.omega_p = kTwoPi * kLightSpeed / lambda_pump_m;
    s.omega_s = kTwoPi * kLightSpeed / lambda_signal_m;
    s.omega_i = 2.0 * s.omega_p - s.omega_s;

    s.k_ph = n * s.omega_p / kLightSpeed;
    const double q = detail::lattice_quantum(s.k_ph);
    const double split = detail::snap_to_lattice(delta_n * s.omega_p / kLightSpeed, q);
    s.k_pv = s.k_ph + split;

    const double dh = detail::snap_to_lattice(n * (s.omega_s - s.omega_p) / kLightSpeed, q);
    const double dv = detail::snap_to_lattice((n + delta_n) * (s.omega_s - s.omega_p) / kLightSpeed, q);
    s.k_sh = s.k_ph + dh;
    s.k_ih = s.k_ph - dh;
    s.k_sv = s.k_pv + dv;
    s.k_iv = s.k_pv - dv;

    s.validate();
    return s;
}

} // namespace loopsim
