#pragma once

#include <cmath>
#include <complex>

#include "loopsim/constants.hpp"
#include "loopsim/errors.hpp"
#include "loopsim/state.hpp"

namespace loopsim {

/// Whether the idler analyzer angle is measured in the same rotational sense
/// as the signal analyzer or mirrored (theta_2 -> -theta_2).
enum class Orientation { same_handed, mirrored };

/// @brief One polarizer setting per arm, in degrees. A polarizer at theta and
/// theta + 180 are the same element; angles are normalized into [0, 180).
struct AnalyzerSetting {
    double theta1_deg = 0.0; ///< signal analyzer
    double theta2_deg = 0.0; ///< idler analyzer
    Orientation orientation = Orientation::same_handed;

    static double normalize_deg(double a) {
        if (!std::isfinite(a)) throw invalid_config("analyzer: angle must be finite");
        double r = std::fmod(a, 180.0);
        if (r < 0.0) r += 180.0;
        return r == 180.0 ? 0.0 : r;
    }

    AnalyzerSetting normalized() const {
        return {normalize_deg(theta1_deg), normalize_deg(theta2_deg), orientation};
    }

    void validate() const {
        if (!std::isfinite(theta1_deg) || !std::isfinite(theta2_deg))
            throw invalid_config("analyzer: angles must be finite");
    }
};

/// @brief Probabilities of the four joint polarizer outcomes: pass/pass,
/// pass/block, block/pass, block/block. Sums to 1 within 1e-12 for a
/// normalized input state.
struct JointProbabilities {
    double p_pp = 0.0;
    double p_pb = 0.0;
    double p_bp = 0.0;
    double p_bb = 0.0;

    double sum() const { return p_pp + p_pb + p_bp + p_bb; }

    void validate() const {
        const double all[] = {p_pp, p_pb, p_bp, p_bb};
        for (double p : all)
            if (!(p >= -1e-12) || !(p <= 1.0 + 1e-12))
                throw invalid_config("joint probabilities: entries must lie in [0, 1]");
        if (std::fabs(sum() - 1.0) > 1e-12)
            throw invalid_config("joint probabilities: outcomes must sum to 1 (1e-12)");
    }
};

namespace detail {

inline double project_prob(const TwoPhotonState& st, double t1_rad, double t2_rad) {
    const double c1 = std::cos(t1_rad), s1 = std::sin(t1_rad);
    const double c2 = std::cos(t2_rad), s2 = std::sin(t2_rad);
    const std::complex<double> amp = st.amp_hh() * (c1 * c2) + st.amp_hv() * (c1 * s2) +
                                     st.amp_vh() * (s1 * c2) + st.amp_vv() * (s1 * s2);
    return std::norm(amp);
}

} // namespace detail

/// @brief Project a two-photon state onto the four outcomes of a pair of
/// linear polarizers; the blocked outcome of each arm is the analyzer
/// rotated by 90 degrees.
inline JointProbabilities joint_probabilities(const TwoPhotonState& state,
                                              const AnalyzerSetting& setting) {
    setting.validate();
    if (std::fabs(state.norm2() - 1.0) > 1e-9)
        throw precondition_error("joint_probabilities: state is not normalized (1e-9)");

    const double sign2 = setting.orientation == Orientation::mirrored ? -1.0 : 1.0;
    const double t1 = setting.theta1_deg * kPi / 180.0;
    const double t2 = sign2 * setting.theta2_deg * kPi / 180.0;
    const double o1 = t1 + kPi / 2.0;
    const double o2 = t2 + sign2 * kPi / 2.0;

    JointProbabilities jp;
    jp.p_pp = detail::project_prob(state, t1, t2);
    jp.p_pb = detail::project_prob(state, t1, o2);
    jp.p_bp = detail::project_prob(state, o1, t2);
    jp.p_bb = detail::project_prob(state, o1, o2);

    // The four projectors are a complete orthonormal product basis; renorm
    // residue is the only reason the sum can drift from 1.
    double s = jp.sum();
    if (std::fabs(s - 1.0) > 1e-12) {
        jp.p_pp /= s;
        jp.p_pb /= s;
        jp.p_bp /= s;
        jp.p_bb /= s;
    }
    jp.validate();
    return jp;
}

/// @brief Ideal pass/pass coincidence fringe of |Phi+>: cos^2(t1 - t2)/2
/// for same-handed analyzers.
inline double fringe(double theta1_deg, double theta2_deg,
                     Orientation orientation = Orientation::same_handed) {
    const double sign2 = orientation == Orientation::mirrored ? -1.0 : 1.0;
    const double d = (theta1_deg - sign2 * theta2_deg) * kPi / 180.0;
    const double c = std::cos(d);
    return 0.5 * c * c;
}

/// @brief Polarization correlation E = p_pp + p_bb - p_pb - p_bp.
inline double correlation_e_ideal(const TwoPhotonState& state, const AnalyzerSetting& setting) {
    JointProbabilities jp = joint_probabilities(state, setting);
    return jp.p_pp + jp.p_bb - jp.p_pb - jp.p_bp;
}

} // namespace loopsim
