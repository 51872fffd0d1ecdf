#pragma once

#include <cmath>
#include <complex>

#include "loopsim/errors.hpp"
#include "loopsim/loop.hpp"
#include "loopsim/phase.hpp"

namespace loopsim {

/// @brief Two-photon polarization state in the product basis
/// {|HH>, |HV>, |VH>, |VV>} (signal first). Unit norm within 1e-12,
/// enforced at construction.
class TwoPhotonState {
  public:
    TwoPhotonState(std::complex<double> hh, std::complex<double> hv,
                   std::complex<double> vh, std::complex<double> vv)
        : hh_(hh), hv_(hv), vh_(vh), vv_(vv) {
        if (std::fabs(norm2() - 1.0) > 1e-12)
            throw invalid_config("two-photon state: amplitudes must have unit norm (1e-12)");
    }

    /// Normalize arbitrary amplitudes; rejects the zero vector.
    static TwoPhotonState normalized(std::complex<double> hh, std::complex<double> hv,
                                     std::complex<double> vh, std::complex<double> vv) {
        double n2 = std::norm(hh) + std::norm(hv) + std::norm(vh) + std::norm(vv);
        if (!(n2 > 0.0) || !std::isfinite(n2))
            throw invalid_config("two-photon state: cannot normalize zero or non-finite amplitudes");
        double s = 1.0 / std::sqrt(n2);
        return TwoPhotonState(hh * s, hv * s, vh * s, vv * s);
    }

    static TwoPhotonState phi_plus() {
        const double r = 1.0 / std::sqrt(2.0);
        return TwoPhotonState(r, 0.0, 0.0, r);
    }

    static TwoPhotonState product_hh() { return TwoPhotonState(1.0, 0.0, 0.0, 0.0); }
    static TwoPhotonState product_vv() { return TwoPhotonState(0.0, 0.0, 0.0, 1.0); }

    std::complex<double> amp_hh() const { return hh_; }
    std::complex<double> amp_hv() const { return hv_; }
    std::complex<double> amp_vh() const { return vh_; }
    std::complex<double> amp_vv() const { return vv_; }

    double norm2() const {
        return std::norm(hh_) + std::norm(hv_) + std::norm(vh_) + std::norm(vv_);
    }

  private:
    std::complex<double> hh_, hv_, vh_, vv_;
};

/// @brief Loop output state alpha*|HH> + e^{i phi_r} beta*|VV> for a pump
/// split (alpha, beta) and the loop's relative phase.
inline TwoPhotonState build_output_state(const PumpConfig& pump, const LoopConfig& loop) {
    pump.validate();
    const double phi_r = relative_phase_full(loop);
    return TwoPhotonState::normalized(pump.alpha, 0.0, 0.0,
                                      pump.beta * std::exp(std::complex<double>(0.0, phi_r)));
}

/// Overload taking a precomputed relative phase.
inline TwoPhotonState build_output_state(const PumpConfig& pump, double phi_r) {
    pump.validate();
    return TwoPhotonState::normalized(pump.alpha, 0.0, 0.0,
                                      pump.beta * std::exp(std::complex<double>(0.0, phi_r)));
}

} // namespace loopsim
