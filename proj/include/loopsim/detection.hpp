#pragma once

#include <cmath>
#include <cstdint>

#include "loopsim/errors.hpp"
#include "loopsim/measurement.hpp"

namespace loopsim {

/// @brief Imperfections of the gated detection chain, per gate.
///
/// A gate sees a Poisson number of generated pairs (mean mu). Each photon
/// that passes its analyzer reaches the detector with probability
/// trans * eta; blocked photons are absorbed. Noise photons arrive
/// unpolarized (analyzer passes them with probability 1/2) and are subject
/// to the same arm transmittance and detector efficiency. Dark counts fire
/// independently of any light. A detector click is any detection; per-gate
/// multiplicities are not resolved.
struct DetectionConfig {
    double mu = 0.01;     ///< mean generated pairs per gate
    double trans_s = 1.0; ///< signal-arm transmittance (fiber, filters)
    double trans_i = 1.0;
    double eta = 1.0;     ///< detector quantum efficiency, both arms
    double noise_s = 0.0; ///< mean unpolarized noise photons per gate, signal arm
    double noise_i = 0.0;
    double dark_s = 0.0;  ///< dark count probability per gate
    double dark_i = 0.0;
    double p_depol = 0.0; ///< per-photon depolarization probability
    uint32_t acc_offset = 1; ///< gate lag of the delayed-window accidental estimate

    void validate() const {
        if (!(mu >= 0.0) || !(mu <= 50.0))
            throw invalid_config("detection: mu must lie in [0, 50]");
        for (double t : {trans_s, trans_i, eta})
            if (!(t >= 0.0) || !(t <= 1.0))
                throw invalid_config("detection: transmittances and eta must lie in [0, 1]");
        for (double v : {noise_s, noise_i})
            if (!(v >= 0.0) || !(v <= 1e3))
                throw invalid_config("detection: noise means must lie in [0, 1e3]");
        for (double d : {dark_s, dark_i})
            if (!(d >= 0.0) || !(d < 1.0))
                throw invalid_config("detection: dark probabilities must lie in [0, 1)");
        if (!(p_depol >= 0.0) || !(p_depol <= 1.0))
            throw invalid_config("detection: p_depol must lie in [0, 1]");
        if (acc_offset < 1 || acc_offset > 4096)
            throw invalid_config("detection: acc_offset must lie in [1, 4096]");
    }

    double survival_s() const { return trans_s * eta; }
    double survival_i() const { return trans_i * eta; }
};

/// @brief Mix independent per-photon depolarization into the joint analyzer
/// outcome probabilities. A depolarized photon forgets its polarization
/// (passes any analyzer with probability 1/2) while its partner keeps the
/// reduced state, so the correlation scales by (1-p_s)*(1-p_i) and the
/// singles marginals shrink toward 1/2.
inline JointProbabilities depolarize_outcomes(const JointProbabilities& jp,
                                              double p_s, double p_i) {
    if (!(p_s >= 0.0) || !(p_s <= 1.0) || !(p_i >= 0.0) || !(p_i <= 1.0))
        throw invalid_config("depolarize: probabilities must lie in [0, 1]");
    const double m_s = jp.p_pp + jp.p_pb; // P(signal passes)
    const double m_i = jp.p_pp + jp.p_bp;
    const double a = (1.0 - p_s) * (1.0 - p_i);
    const double bs = p_s * (1.0 - p_i); // signal depolarized only
    const double bi = (1.0 - p_s) * p_i;
    const double c = p_s * p_i;

    JointProbabilities out;
    out.p_pp = a * jp.p_pp + bs * 0.5 * m_i + bi * 0.5 * m_s + c * 0.25;
    out.p_pb = a * jp.p_pb + bs * 0.5 * (1.0 - m_i) + bi * 0.5 * m_s + c * 0.25;
    out.p_bp = a * jp.p_bp + bs * 0.5 * m_i + bi * 0.5 * (1.0 - m_s) + c * 0.25;
    out.p_bb = a * jp.p_bb + bs * 0.5 * (1.0 - m_i) + bi * 0.5 * (1.0 - m_s) + c * 0.25;
    out.validate();
    return out;
}

/// @brief Per-pair detection categories: probabilities that one generated
/// pair yields a detection on the signal arm only, idler arm only, or both.
/// Only analyzer-passing photons can be detected.
struct PairCategories {
    double s_only = 0.0;
    double i_only = 0.0;
    double both = 0.0;

    double any() const { return s_only + i_only + both; }
};

inline PairCategories pair_categories(const JointProbabilities& jp, const DetectionConfig& det) {
    const double ts = det.survival_s(), ti = det.survival_i();
    PairCategories pc;
    pc.both = jp.p_pp * ts * ti;
    pc.s_only = std::fmax(0.0, (jp.p_pp + jp.p_pb) * ts - pc.both);
    pc.i_only = std::fmax(0.0, (jp.p_pp + jp.p_bp) * ti - pc.both);
    return pc;
}

/// Mean detected noise photons per gate on each arm (unpolarized: the
/// analyzer halves them, then arm survival applies).
inline double detected_noise_s(const DetectionConfig& det) {
    return det.noise_s * 0.5 * det.survival_s();
}
inline double detected_noise_i(const DetectionConfig& det) {
    return det.noise_i * 0.5 * det.survival_i();
}

/// @brief Exact per-gate click statistics implied by the model. All pair,
/// noise and dark processes are independent, so no-click probabilities
/// factor into exponentials.
struct ClickProbabilities {
    double click_s = 0.0;      ///< P(signal detector clicks)
    double click_i = 0.0;
    double coincidence = 0.0;  ///< P(both click in the same gate)
    double pair_coincidence = 0.0; ///< P(some single pair had both photons detected)

    /// Expected delayed-window rate: clicks in gates offset apart are
    /// independent, so the estimate is unbiased for the product.
    double accidental_rate() const { return click_s * click_i; }
};

inline ClickProbabilities click_probabilities(const JointProbabilities& jp,
                                              const DetectionConfig& det) {
    const PairCategories pc = pair_categories(jp, det);
    const double ns = detected_noise_s(det), ni = detected_noise_i(det);
    const double as = det.mu * (pc.s_only + pc.both) + ns;
    const double ai = det.mu * (pc.i_only + pc.both) + ni;
    const double aa = det.mu * pc.any() + ns + ni;

    ClickProbabilities cp;
    const double no_s = std::exp(-as) * (1.0 - det.dark_s);
    const double no_i = std::exp(-ai) * (1.0 - det.dark_i);
    const double no_any = std::exp(-aa) * (1.0 - det.dark_s) * (1.0 - det.dark_i);
    cp.click_s = 1.0 - no_s;
    cp.click_i = 1.0 - no_i;
    cp.coincidence = 1.0 - no_s - no_i + no_any;
    cp.pair_coincidence = -std::expm1(-det.mu * pc.both);
    return cp;
}

/// @brief Raw tallies of one simulated run at a fixed analyzer setting.
struct CountRecord {
    uint64_t gates = 0;
    uint64_t clicks_s = 0;
    uint64_t clicks_i = 0;
    uint64_t coincidences = 0;        ///< gates where both arms clicked
    uint64_t pair_coincidences = 0;   ///< coincident gates containing a fully detected pair
    uint64_t accidental_estimate = 0; ///< delayed-window pairs (g, g + acc_offset)

    /// Coincident gates not explained by any single pair.
    uint64_t accidental_coincidences() const { return coincidences - pair_coincidences; }

    CountRecord& operator+=(const CountRecord& o) {
        gates += o.gates;
        clicks_s += o.clicks_s;
        clicks_i += o.clicks_i;
        coincidences += o.coincidences;
        pair_coincidences += o.pair_coincidences;
        accidental_estimate += o.accidental_estimate;
        return *this;
    }
};

} // namespace loopsim
