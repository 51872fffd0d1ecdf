#pragma once

#include <cmath>

#include "loopsim/compensated.hpp"
#include "loopsim/errors.hpp"
#include "loopsim/loop.hpp"

namespace loopsim {

/// @brief How the doubled pump phase at the generation point is split between
/// the signal and idler photons. Any split satisfies the sum rule
/// phi_sX + phi_iX == 2*phi_pX; only the sum is physical.
struct PhaseSplitRule {
    double signal_share = 0.5; ///< phi_sX = 2*share*phi_pX; the idler carries the remainder

    void validate() const {
        if (!(signal_share >= 0.0) || !(signal_share <= 1.0))
            throw invalid_config("phase split: signal_share must lie in [0, 1]");
    }
};

/// @brief Propagation phases of all waves, reduced into (-pi, pi].
///
/// Generation phases are taken at the pair-creation point x; output phases
/// include the remaining travel to the loop coupler. H-axis photons are
/// created x into the loop and travel length-x further; V-axis photons
/// inherit the counter-propagating pump and travel the remaining x.
struct PhaseLedger {
    double pump_h = 0.0;
    double pump_v = 0.0;
    double signal_h = 0.0;
    double signal_v = 0.0;
    double idler_h = 0.0;
    double idler_v = 0.0;
    double out_signal_h = 0.0;
    double out_signal_v = 0.0;
    double out_idler_h = 0.0;
    double out_idler_v = 0.0;

    /// Residue of the sum rule phi_sX + phi_iX - 2*phi_pX on one axis, wrapped.
    static double sum_rule_residue(double s, double i, double p) {
        dd::Dd r = dd::two_sum(s, i);
        r = dd::add(r, dd::mul(-2.0, dd::Dd{p, 0.0}));
        return dd::wrap_pi(r);
    }

    void validate() const {
        const double all[] = {pump_h, pump_v, signal_h, signal_v, idler_h, idler_v,
                              out_signal_h, out_signal_v, out_idler_h, out_idler_v};
        for (double v : all)
            if (!std::isfinite(v) || v > kPi + 1e-15 || v < -kPi - 1e-15)
                throw invalid_config("phase ledger: phases must be reduced into (-pi, pi]");
        if (std::fabs(sum_rule_residue(signal_h, idler_h, pump_h)) > 1e-9 ||
            std::fabs(sum_rule_residue(signal_v, idler_v, pump_v)) > 1e-9)
            throw invalid_config("phase ledger: generation phases violate the pump sum rule");
    }
};

/// @brief Propagate pump phases to the generation point, split them onto the
/// pair, and carry the pair to the loop output. All sums are compensated;
/// fields are reduced at the boundary.
inline PhaseLedger phase_ledger(const LoopConfig& loop, const PhaseSplitRule& rule = {}) {
    loop.validate();
    rule.validate();
    const SpectralConfig& sp = loop.spectral;

    const dd::Dd rest = dd::two_sum(loop.length_m, -loop.x_m); // L - x, exact

    const dd::Dd pump_h = dd::two_prod(sp.k_ph, loop.x_m);
    const dd::Dd pump_v = dd::add(dd::mul(sp.k_pv, rest), loop.varphi);

    // The idler is defined as the remainder so the pair sum equals the
    // doubled pump phase to working precision for any share.
    const double wsig = 2.0 * rule.signal_share;
    const dd::Dd sig_h = dd::mul(wsig, pump_h);
    const dd::Dd idl_h = dd::add(dd::mul(2.0, pump_h), dd::neg(sig_h));
    const dd::Dd sig_v = dd::mul(wsig, pump_v);
    const dd::Dd idl_v = dd::add(dd::mul(2.0, pump_v), dd::neg(sig_v));

    PhaseLedger led;
    led.pump_h = dd::wrap_pi(pump_h);
    led.pump_v = dd::wrap_pi(pump_v);
    led.signal_h = dd::wrap_pi(sig_h);
    led.signal_v = dd::wrap_pi(sig_v);
    led.idler_h = dd::wrap_pi(idl_h);
    led.idler_v = dd::wrap_pi(idl_v);
    led.out_signal_h = dd::wrap_pi(dd::add(sig_h, dd::mul(sp.k_sh, rest)));
    led.out_idler_h = dd::wrap_pi(dd::add(idl_h, dd::mul(sp.k_ih, rest)));
    led.out_signal_v = dd::wrap_pi(dd::add(sig_v, dd::two_prod(sp.k_sv, loop.x_m)));
    led.out_idler_v = dd::wrap_pi(dd::add(idl_v, dd::two_prod(sp.k_iv, loop.x_m)));
    return led;
}

namespace detail {

inline dd::Dd delta_k_h_dd(const SpectralConfig& sp) {
    return dd::add(dd::two_sum(2.0 * sp.k_ph, -sp.k_sh), -sp.k_ih);
}

inline dd::Dd delta_k_v_dd(const SpectralConfig& sp) {
    return dd::add(dd::two_sum(2.0 * sp.k_pv, -sp.k_sv), -sp.k_iv);
}

} // namespace detail

/// @brief Relative phase between the |VV> and |HH> pair components at the
/// loop output:
///
///   phi_r = 2*(k_pV - k_pH)*L - dk_V*x + dk_H*(L - x) + 2*varphi
///
/// with dk_X = 2*k_pX - (k_sX + k_iX). Reduced into (-pi, pi]. When both
/// dk_X vanish over the stored doubles the result is exactly independent
/// of the generation point x.
inline double relative_phase_full(const LoopConfig& loop) {
    loop.validate();
    const SpectralConfig& sp = loop.spectral;

    const dd::Dd rest = dd::two_sum(loop.length_m, -loop.x_m);
    dd::Dd phi = dd::two_prod(2.0 * sp.pump_k_split(), loop.length_m);
    phi = dd::add(phi, dd::neg(dd::mul(loop.x_m, detail::delta_k_v_dd(sp))));
    phi = dd::add(phi, dd::mul(detail::delta_k_h_dd(sp), rest));
    phi = dd::add(phi, dd::two_prod(2.0, loop.varphi));
    return dd::wrap_pi(phi);
}

/// @brief Phase-matched shortcut phi_r = 2*(varphi + omega_p*delta_n*L/c).
///
/// Preconditions: |dk_H| and |dk_V| <= 1e-9 rad/m, otherwise the dropped
/// terms are not negligible and this raises.
inline double relative_phase_reduced(const LoopConfig& loop) {
    loop.validate();
    const SpectralConfig& sp = loop.spectral;
    if (std::fabs(dd::value(detail::delta_k_h_dd(sp))) > 1e-9 ||
        std::fabs(dd::value(detail::delta_k_v_dd(sp))) > 1e-9)
        throw precondition_error("relative_phase_reduced: phase mismatch nonzero (|dk| > 1e-9 rad/m)");

    dd::Dd t = dd::mul(loop.length_m, dd::two_prod(sp.omega_p, loop.delta_n));
    t = dd::div(t, kLightSpeed);
    t = dd::add(t, loop.varphi);
    return dd::wrap_pi(dd::mul(2.0, t));
}

/// @brief Loop factory keeping delta_n and the stored pump wavenumber split
/// consistent: the split is snapped to the float lattice, and delta_n is
/// re-derived from the snapped value, so relative_phase_full and
/// relative_phase_reduced agree to ~1e-11 rad.
inline LoopConfig make_loop(double length_m, double x_m, double lambda_pump_m,
                            double lambda_signal_m, double n, double delta_n,
                            double varphi) {
    LoopConfig loop;
    loop.length_m = length_m;
    loop.x_m = x_m;
    loop.varphi = varphi;
    loop.spectral = phase_matched_spectral(lambda_pump_m, lambda_signal_m, n, delta_n);
    loop.delta_n = loop.spectral.pump_k_split() * kLightSpeed / loop.spectral.omega_p;
    loop.validate();
    return loop;
}

} // namespace loopsim
