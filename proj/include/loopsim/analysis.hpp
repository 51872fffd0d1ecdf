#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "loopsim/detection.hpp"
#include "loopsim/errors.hpp"
#include "loopsim/measurement.hpp"
#include "loopsim/montecarlo.hpp"

namespace loopsim {

/// A measured quantity with a 1-sigma counting uncertainty.
struct ValueWithError {
    double value = 0.0;
    double sigma = 0.0;
};

/// @brief Accidental-corrected coincidence rate of one run. The delayed
/// window estimates the accidental rate from the same data, so the
/// corrected count is C - A with variance C + A (both are counts).
inline ValueWithError subtract_accidentals(const CountRecord& r) {
    if (r.gates == 0) throw invalid_config("subtract: record has no gates");
    const double g = static_cast<double>(r.gates);
    ValueWithError out;
    out.value = (static_cast<double>(r.coincidences) - static_cast<double>(r.accidental_estimate)) / g;
    out.sigma = std::sqrt(static_cast<double>(r.coincidences) +
                          static_cast<double>(r.accidental_estimate)) / g;
    return out;
}

/// Raw coincidence rate of one run with Poisson uncertainty.
inline ValueWithError coincidence_rate(const CountRecord& r) {
    if (r.gates == 0) throw invalid_config("rate: record has no gates");
    const double g = static_cast<double>(r.gates);
    return {static_cast<double>(r.coincidences) / g,
            std::sqrt(static_cast<double>(r.coincidences)) / g};
}

/// @brief Correlation E from the four joint-outcome coincidence counts
/// (pass/pass, pass/block, block/pass, block/block), with the multinomial
/// counting uncertainty sigma_E = sqrt((1 - E^2) / N).
inline ValueWithError correlation_e_counts(double n_pp, double n_pb, double n_bp, double n_bb) {
    const double n = n_pp + n_pb + n_bp + n_bb;
    if (!(n > 0.0)) throw invalid_config("correlation: total count must be positive");
    ValueWithError e;
    e.value = (n_pp + n_bb - n_pb - n_bp) / n;
    e.sigma = std::sqrt(std::fmax(1.0 - e.value * e.value, 0.0) / n);
    return e;
}

/// @brief Correlation E from four rate estimates carrying their own
/// uncertainties (e.g. accidental-subtracted rates). First-order error
/// propagation through E = (a + d - b - c) / (a + b + c + d).
inline ValueWithError correlation_e(const ValueWithError& pp, const ValueWithError& pb,
                                    const ValueWithError& bp, const ValueWithError& bb) {
    const double n = pp.value + pb.value + bp.value + bb.value;
    if (!(n > 0.0)) throw invalid_config("correlation: total rate must be positive");
    const double e = (pp.value + bb.value - pb.value - bp.value) / n;
    // dE/dx = (+-1 - E) / n with + for pp, bb and - for pb, bp
    const double gp = (1.0 - e) / n, gm = (-1.0 - e) / n;
    const double var = gp * gp * (pp.sigma * pp.sigma + bb.sigma * bb.sigma) +
                       gm * gm * (pb.sigma * pb.sigma + bp.sigma * bp.sigma);
    return {e, std::sqrt(var)};
}

/// @brief Result of a sinusoidal fringe fit r(theta) = c0 + c1 cos 2theta
/// + c2 sin 2theta, i.e. a mean level with a 180-degree-periodic fringe.
struct FringeFit {
    double mean = 0.0;       ///< c0
    double amplitude = 0.0;  ///< sqrt(c1^2 + c2^2)
    double peak_deg = 0.0;   ///< fringe maximum position, in [0, 180)
    double visibility = 0.0; ///< amplitude / mean
    double sigma_visibility = 0.0;
    double chi2 = 0.0;
    unsigned dof = 0;
};

/// @brief Weighted least-squares fringe fit. The model is linear in
/// (c0, c1, c2), so the fit is exact (no iteration). Throws fit_failure
/// when the angle coverage is degenerate, the mean is non-positive, or
/// chi^2/dof exceeds 10.
inline FringeFit fit_visibility(const std::vector<double>& theta_deg,
                                const std::vector<double>& rate,
                                const std::vector<double>& sigma) {
    const size_t n = theta_deg.size();
    if (rate.size() != n || sigma.size() != n)
        throw invalid_config("fringe fit: inputs must have equal lengths");
    if (n < 3) throw invalid_config("fringe fit: need at least 3 points");
    for (double s : sigma)
        if (!(s > 0.0) || !std::isfinite(s))
            throw invalid_config("fringe fit: sigmas must be positive finite");

    // normal equations M c = v for the basis (1, cos 2t, sin 2t)
    double m00 = 0, m01 = 0, m02 = 0, m11 = 0, m12 = 0, m22 = 0;
    double v0 = 0, v1 = 0, v2 = 0;
    for (size_t k = 0; k < n; ++k) {
        const double t = theta_deg[k] * kPi / 180.0;
        const double c = std::cos(2.0 * t), s = std::sin(2.0 * t);
        const double w = 1.0 / (sigma[k] * sigma[k]);
        m00 += w;
        m01 += w * c;
        m02 += w * s;
        m11 += w * c * c;
        m12 += w * c * s;
        m22 += w * s * s;
        v0 += w * rate[k];
        v1 += w * rate[k] * c;
        v2 += w * rate[k] * s;
    }
    const double det = m00 * (m11 * m22 - m12 * m12) - m01 * (m01 * m22 - m12 * m02) +
                       m02 * (m01 * m12 - m11 * m02);
    // scale-free degeneracy guard: compare against the diagonal product
    if (!(std::fabs(det) > 1e-9 * m00 * std::fmax(m11, 1e-30) * std::fmax(m22, 1e-30)))
        throw fit_failure("fringe fit: analyzer angles do not span the fringe basis");

    // inverse via adjugate; M is symmetric
    const double i00 = (m11 * m22 - m12 * m12) / det;
    const double i01 = (m02 * m12 - m01 * m22) / det;
    const double i02 = (m01 * m12 - m02 * m11) / det;
    const double i11 = (m00 * m22 - m02 * m02) / det;
    const double i12 = (m01 * m02 - m00 * m12) / det;
    const double i22 = (m00 * m11 - m01 * m01) / det;
    const double c0 = i00 * v0 + i01 * v1 + i02 * v2;
    const double c1 = i01 * v0 + i11 * v1 + i12 * v2;
    const double c2 = i02 * v0 + i12 * v1 + i22 * v2;

    FringeFit fit;
    fit.mean = c0;
    fit.amplitude = std::hypot(c1, c2);
    fit.dof = n > 3 ? static_cast<unsigned>(n - 3) : 0;
    for (size_t k = 0; k < n; ++k) {
        const double t = theta_deg[k] * kPi / 180.0;
        const double model = c0 + c1 * std::cos(2.0 * t) + c2 * std::sin(2.0 * t);
        const double z = (rate[k] - model) / sigma[k];
        fit.chi2 += z * z;
    }
    if (!(c0 > 0.0)) throw fit_failure("fringe fit: non-positive mean level");
    if (fit.dof > 0 && fit.chi2 / fit.dof > 10.0)
        throw fit_failure("fringe fit: chi2/dof exceeds 10, data is not a fringe");

    fit.visibility = fit.amplitude / c0;
    double peak = 0.5 * std::atan2(c2, c1) * 180.0 / kPi;
    if (peak < 0.0) peak += 180.0;
    fit.peak_deg = peak;

    // error propagation: V = sqrt(c1^2 + c2^2) / c0
    if (fit.amplitude > 0.0) {
        const double g0 = -fit.amplitude / (c0 * c0);
        const double g1 = c1 / (fit.amplitude * c0);
        const double g2 = c2 / (fit.amplitude * c0);
        const double var = g0 * g0 * i00 + g1 * g1 * i11 + g2 * g2 * i22 +
                           2.0 * (g0 * g1 * i01 + g0 * g2 * i02 + g1 * g2 * i12);
        fit.sigma_visibility = std::sqrt(std::fmax(var, 0.0));
    } else {
        fit.sigma_visibility = std::sqrt(std::fmax(i11 + i22, 0.0)) / c0;
    }
    return fit;
}

/// Scan tallies reduced to fit inputs; sigmas follow the counting model of
/// the chosen rate (raw Poisson, or C + A after subtraction).
struct FringeData {
    std::vector<double> theta_deg;
    std::vector<double> rate;
    std::vector<double> sigma;
};

namespace detail {

inline void push_fringe_point(FringeData& d, double theta_deg, const CountRecord& counts,
                              bool subtract) {
    const ValueWithError r = subtract ? subtract_accidentals(counts) : coincidence_rate(counts);
    d.theta_deg.push_back(theta_deg);
    d.rate.push_back(r.value);
    // an empty bin still carries one count of Poisson resolution
    d.sigma.push_back(r.sigma > 0.0 ? r.sigma : 1.0 / static_cast<double>(counts.gates));
}

} // namespace detail

inline FringeData fringe_data(const std::vector<FringePoint>& points, bool subtract) {
    FringeData d;
    for (const FringePoint& p : points)
        detail::push_fringe_point(d, p.theta2_deg, p.counts, subtract);
    return d;
}

/// Which analyzer a scan swept; picks the fit's abscissa.
enum class ScanAxis { theta1, theta2 };

inline FringeData fringe_data(const std::vector<ScanPoint>& points, bool subtract, ScanAxis axis) {
    FringeData d;
    for (const ScanPoint& p : points)
        detail::push_fringe_point(
            d, axis == ScanAxis::theta1 ? p.setting.theta1_deg : p.setting.theta2_deg, p.counts,
            subtract);
    return d;
}

inline FringeFit fit_visibility(const FringeData& d) {
    return fit_visibility(d.theta_deg, d.rate, d.sigma);
}

/// Which of the four correlation terms enters the CHSH sum negated.
/// Terms are ordered E(a,b), E(a,b'), E(a',b), E(a',b').
enum class ChshPlacement { minus_ab = 0, minus_abp = 1, minus_apb = 2, minus_apbp = 3 };

/// S = sum of the four correlations with one term negated.
inline double chsh_value(const std::array<double, 4>& e, ChshPlacement placement) {
    const int p = static_cast<int>(placement);
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += (k == p ? -e[k] : e[k]);
    return s;
}

inline ValueWithError chsh_value(const std::array<ValueWithError, 4>& e, ChshPlacement placement) {
    std::array<double, 4> v{e[0].value, e[1].value, e[2].value, e[3].value};
    double var = 0.0;
    for (const ValueWithError& t : e) var += t.sigma * t.sigma;
    return {chsh_value(v, placement), std::sqrt(var)};
}

/// @brief Combined CHSH estimate from repeated runs: the mean, the
/// counting error propagated from the per-run sigmas, and the run-to-run
/// scatter error. Agreement of the two sigmas is a useful consistency check.
struct ChshEstimate {
    double s = 0.0;
    double sigma_counting = 0.0;
    double sigma_scatter = 0.0;
    unsigned runs = 0;
};

inline ChshEstimate chsh_aggregate(const std::vector<ValueWithError>& per_run) {
    if (per_run.empty()) throw invalid_config("chsh aggregate: no runs");
    ChshEstimate est;
    est.runs = static_cast<unsigned>(per_run.size());
    double var_counting = 0.0;
    for (const ValueWithError& r : per_run) {
        est.s += r.value;
        var_counting += r.sigma * r.sigma;
    }
    est.s /= est.runs;
    est.sigma_counting = std::sqrt(var_counting) / est.runs;
    if (est.runs > 1) {
        double ss = 0.0;
        for (const ValueWithError& r : per_run) ss += (r.value - est.s) * (r.value - est.s);
        est.sigma_scatter = std::sqrt(ss / (est.runs - 1) / est.runs);
    }
    return est;
}

/// @brief The angle quadruple, negated term and value of the largest CHSH
/// sum an ideal measurement of the state can produce.
struct ChshOptimum {
    double s = 0.0;
    double a_deg = 0.0, ap_deg = 0.0, b_deg = 0.0, bp_deg = 0.0;
    ChshPlacement placement = ChshPlacement::minus_apbp;
};

namespace detail {

inline double chsh_best_at(const TwoPhotonState& st, Orientation o, const double ang[4],
                           ChshPlacement* placement = nullptr) {
    const double e_ab = correlation_e_ideal(st, {ang[0], ang[2], o});
    const double e_abp = correlation_e_ideal(st, {ang[0], ang[3], o});
    const double e_apb = correlation_e_ideal(st, {ang[1], ang[2], o});
    const double e_apbp = correlation_e_ideal(st, {ang[1], ang[3], o});
    const std::array<double, 4> e{e_ab, e_abp, e_apb, e_apbp};
    double sum = e_ab + e_abp + e_apb + e_apbp;
    int arg = 0;
    for (int k = 1; k < 4; ++k)
        if (e[k] < e[arg]) arg = k;
    if (placement) *placement = static_cast<ChshPlacement>(arg);
    return sum - 2.0 * e[arg];
}

} // namespace detail

/// @brief Search for the maximal CHSH sum over analyzer quadruples
/// (a, a', b, b') and sign placements: a coarse grid pass over one period
/// followed by local shrinking-step refinement. The negated-term choice is
/// optimized in closed form at every evaluation. Negating three terms
/// instead of one never wins: it is a single negation at shifted angles.
inline ChshOptimum chsh_maximizer(const TwoPhotonState& state,
                                  Orientation orientation = Orientation::same_handed,
                                  double grid_step_deg = 2.0) {
    if (!(grid_step_deg > 0.0) || !(grid_step_deg <= 45.0))
        throw invalid_config("chsh maximizer: grid step must lie in (0, 45] degrees");

    // Correlations depend on each angle with period 180 degrees; tabulate
    // E on the pair grid once, then scan quadruples by lookup.
    const int n = static_cast<int>(std::ceil(180.0 / grid_step_deg));
    std::vector<double> table(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            table[static_cast<size_t>(i) * n + j] = correlation_e_ideal(
                state, {i * grid_step_deg, j * grid_step_deg, orientation});

    double best = -1e300;
    int ba = 0, bap = 0, bb = 0, bbp = 0;
    for (int a = 0; a < n; ++a)
        for (int ap = 0; ap < n; ++ap)
            for (int b = 0; b < n; ++b) {
                const double e_ab = table[static_cast<size_t>(a) * n + b];
                const double e_apb = table[static_cast<size_t>(ap) * n + b];
                for (int bp = 0; bp < n; ++bp) {
                    const double e_abp = table[static_cast<size_t>(a) * n + bp];
                    const double e_apbp = table[static_cast<size_t>(ap) * n + bp];
                    const double sum = e_ab + e_abp + e_apb + e_apbp;
                    double mn = e_ab;
                    if (e_abp < mn) mn = e_abp;
                    if (e_apb < mn) mn = e_apb;
                    if (e_apbp < mn) mn = e_apbp;
                    const double s = sum - 2.0 * mn;
                    if (s > best) {
                        best = s;
                        ba = a;
                        bap = ap;
                        bb = b;
                        bbp = bp;
                    }
                }
            }

    double ang[4] = {ba * grid_step_deg, bap * grid_step_deg, bb * grid_step_deg,
                     bbp * grid_step_deg};
    double step = grid_step_deg;
    for (int round = 0; round < 4000 && step > 1e-7; ++round) {
        bool moved = false;
        for (int k = 0; k < 4; ++k) {
            for (double dir : {-1.0, 1.0}) {
                double trial[4] = {ang[0], ang[1], ang[2], ang[3]};
                trial[k] += dir * step;
                const double s = detail::chsh_best_at(state, orientation, trial);
                if (s > best) {
                    best = s;
                    ang[k] = trial[k];
                    moved = true;
                }
            }
        }
        if (!moved) step *= 0.5;
    }

    ChshOptimum opt;
    opt.s = detail::chsh_best_at(state, orientation, ang, &opt.placement);
    opt.a_deg = AnalyzerSetting::normalize_deg(ang[0]);
    opt.ap_deg = AnalyzerSetting::normalize_deg(ang[1]);
    opt.b_deg = AnalyzerSetting::normalize_deg(ang[2]);
    opt.bp_deg = AnalyzerSetting::normalize_deg(ang[3]);
    return opt;
}

} // namespace loopsim
