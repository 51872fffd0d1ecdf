#pragma once

#include <cmath>
#include <string>

#include "loopsim/detection.hpp"
#include "loopsim/errors.hpp"
#include "loopsim/measurement.hpp"
#include "loopsim/montecarlo.hpp"
#include "loopsim/state.hpp"

namespace loopsim {

/// Observed per-gate rates a calibration must reproduce. The coincidence
/// target is taken at the fringe maximum (aligned analyzers).
struct RateTargets {
    double singles_s = 0.0;
    double singles_i = 0.0;
    double coincidence_peak = 0.0;

    void validate() const {
        for (double r : {singles_s, singles_i, coincidence_peak})
            if (!(r > 0.0) || !(r < 1.0))
                throw invalid_config("rate targets: rates must lie in (0, 1)");
        if (coincidence_peak > singles_s || coincidence_peak > singles_i)
            throw invalid_config("rate targets: coincidences cannot exceed either singles rate");
    }
};

/// @brief Fixed properties of the apparatus during a rate calibration. The
/// free parameters are the pair mean and the two arm transmittances; noise
/// follows the pair rate through noise_ratio (detected noise clicks per
/// detected pair click, per arm).
struct CalibrationSettings {
    double eta = 0.1;
    double dark_s = 1.0e-5;
    double dark_i = 1.0e-5;
    double p_depol = 0.0;
    double noise_ratio = 1.0;
    double phi_r = 0.0; ///< residual state phase; does not move the fringe peak
    Orientation orientation = Orientation::same_handed;
    uint32_t acc_offset = 1;

    void validate() const {
        if (!(eta > 0.0) || !(eta <= 1.0))
            throw invalid_config("calibration: eta must lie in (0, 1]");
        for (double d : {dark_s, dark_i})
            if (!(d >= 0.0) || !(d < 1.0))
                throw invalid_config("calibration: dark probabilities must lie in [0, 1)");
        if (!(p_depol >= 0.0) || !(p_depol < 1.0))
            throw invalid_config("calibration: p_depol must lie in [0, 1)");
        if (!(noise_ratio >= 0.0) || !(noise_ratio <= 1e3))
            throw invalid_config("calibration: noise_ratio must lie in [0, 1e3]");
        if (!std::isfinite(phi_r)) throw invalid_config("calibration: phi_r must be finite");
    }
};

struct CalibrationResult {
    DetectionConfig detection;  ///< fitted mu, trans_s, trans_i, noise plus the fixed constants
    ClickProbabilities model;   ///< the exact model rates at the solution
    double residual = 0.0;      ///< largest relative miss across the three targets
    unsigned iterations = 0;
};

namespace detail {

inline DetectionConfig calibration_config(double mu, double trans_s, double trans_i,
                                          const CalibrationSettings& s) {
    DetectionConfig det;
    det.mu = mu;
    det.trans_s = trans_s;
    det.trans_i = trans_i;
    det.eta = s.eta;
    det.noise_s = s.noise_ratio * mu;
    det.noise_i = s.noise_ratio * mu;
    det.dark_s = s.dark_s;
    det.dark_i = s.dark_i;
    det.p_depol = s.p_depol;
    det.acc_offset = s.acc_offset;
    return det;
}

inline ClickProbabilities calibration_rates(const DetectionConfig& det,
                                            const CalibrationSettings& s) {
    const double r = 1.0 / std::sqrt(2.0);
    const TwoPhotonState st = build_output_state(PumpConfig{r, r}, s.phi_r);
    const JointProbabilities jp = outcome_probabilities(st, {0.0, 0.0, s.orientation}, det);
    return click_probabilities(jp, det);
}

} // namespace detail

/// @brief Solve for the pair mean and arm transmittances that reproduce the
/// target rates under the exact click model: a closed-form seed from the
/// small-rate expansion, then Newton iteration with finite-difference
/// derivatives in log-parameter space. Throws fit_failure when no physical
/// parameter set reaches the targets within 5 percent.
inline CalibrationResult calibrate_rates(const RateTargets& targets,
                                         const CalibrationSettings& settings) {
    targets.validate();
    settings.validate();

    // Accidental floor: independent singles coincide at the product rate, so
    // only the excess above it can come from detected pairs.
    const double floor = targets.singles_s * targets.singles_i;
    if (!(targets.coincidence_peak > floor))
        throw fit_failure("calibration: coincidence target does not exceed the accidental floor");
    if (!(settings.dark_s < targets.singles_s) || !(settings.dark_i < targets.singles_i))
        throw fit_failure("calibration: dark rate alone exceeds its singles target");

    // Seed: singles invert exactly; the coincidence excess fixes the product
    // mu * survival_s * survival_i through the aligned-analyzer pair term
    // mu * Ts * Ti * (1 + f) / 4 with f the depolarization-scaled correlation.
    const double rho = settings.noise_ratio;
    const double a_s = -std::log((1.0 - targets.singles_s) / (1.0 - settings.dark_s)) / (1.0 + rho);
    const double a_i = -std::log((1.0 - targets.singles_i) / (1.0 - settings.dark_i)) / (1.0 + rho);
    const double f = (1.0 - settings.p_depol) * (1.0 - settings.p_depol);
    const double w = 4.0 * (targets.coincidence_peak - floor) / (1.0 + f);
    double mu = 4.0 * a_s * a_i / w;
    double trans_s = 2.0 * a_s / (mu * settings.eta);
    double trans_i = 2.0 * a_i / (mu * settings.eta);

    const double t[3] = {targets.singles_s, targets.singles_i, targets.coincidence_peak};
    auto miss = [&](const ClickProbabilities& m, double out[3]) {
        out[0] = (m.click_s - t[0]) / t[0];
        out[1] = (m.click_i - t[1]) / t[1];
        out[2] = (m.coincidence - t[2]) / t[2];
        return std::fmax(std::fabs(out[0]), std::fmax(std::fabs(out[1]), std::fabs(out[2])));
    };
    auto rates_at = [&](const double x[3]) {
        return detail::calibration_rates(
            detail::calibration_config(std::exp(x[0]), std::exp(x[1]), std::exp(x[2]), settings),
            settings);
    };

    double x[3] = {std::log(mu), std::log(trans_s), std::log(trans_i)};
    for (double v : x)
        if (!std::isfinite(v)) throw fit_failure("calibration: seed left the physical region");

    double fx[3];
    double best = miss(rates_at(x), fx);
    unsigned iter = 0;
    for (; iter < 60 && best > 1e-12; ++iter) {
        // finite-difference Jacobian d miss / d x
        double jac[3][3];
        const double h = 1e-6;
        for (int col = 0; col < 3; ++col) {
            double xp[3] = {x[0], x[1], x[2]}, xm[3] = {x[0], x[1], x[2]};
            xp[col] += h;
            xm[col] -= h;
            double fp[3], fm[3];
            miss(rates_at(xp), fp);
            miss(rates_at(xm), fm);
            for (int row = 0; row < 3; ++row) jac[row][col] = (fp[row] - fm[row]) / (2.0 * h);
        }
        const double det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1]) -
                           jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0]) +
                           jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
        if (!(std::fabs(det) > 1e-300)) break;
        auto solve_col = [&](int k) {
            double a[3][3];
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) a[r][c] = (c == k) ? fx[r] : jac[r][c];
            return (a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                    a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                    a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])) /
                   det;
        };
        const double dx[3] = {solve_col(0), solve_col(1), solve_col(2)};

        // damped step: shrink until the miss improves
        double scale = 1.0;
        bool improved = false;
        for (int attempt = 0; attempt < 12; ++attempt, scale *= 0.5) {
            double xn[3] = {x[0] - scale * dx[0], x[1] - scale * dx[1], x[2] - scale * dx[2]};
            double fn[3];
            const double m = miss(rates_at(xn), fn);
            if (m < best) {
                for (int k = 0; k < 3; ++k) {
                    x[k] = xn[k];
                    fx[k] = fn[k];
                }
                best = m;
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }

    CalibrationResult out;
    out.iterations = iter;
    mu = std::exp(x[0]);
    trans_s = std::exp(x[1]);
    trans_i = std::exp(x[2]);
    // a hair above unity is Newton roundoff; anything more is unphysical
    if (trans_s > 1.0 && trans_s < 1.0 + 1e-9) trans_s = 1.0;
    if (trans_i > 1.0 && trans_i < 1.0 + 1e-9) trans_i = 1.0;
    out.detection = detail::calibration_config(mu, trans_s, trans_i, settings);
    try {
        out.detection.validate();
    } catch (const invalid_config& e) {
        throw fit_failure(std::string("calibration: no physical fit: ") + e.what());
    }
    out.model = detail::calibration_rates(out.detection, settings);
    double fr[3];
    out.residual = miss(out.model, fr);
    if (!(out.residual <= 0.05))
        throw fit_failure("calibration: targets unreachable within 5 percent");
    return out;
}

} // namespace loopsim
