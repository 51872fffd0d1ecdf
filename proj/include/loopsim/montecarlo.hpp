#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <thread>
#include <utility>
#include <vector>

#include "loopsim/detection.hpp"
#include "loopsim/errors.hpp"
#include "loopsim/rng.hpp"
#include "loopsim/state.hpp"

namespace loopsim {

/// @brief Size and reproducibility of one simulated run.
struct RunSpec {
    uint64_t gates = 0;
    uint64_t seed = 0;
    unsigned workers_hint = 1; ///< worker threads; never affects the output bits

    void validate() const {
        if (gates > (uint64_t(1) << 50))
            throw invalid_config("run: gates must be at most 2^50");
        if (workers_hint < 1 || workers_hint > 1024)
            throw invalid_config("run: workers_hint must lie in [1, 1024]");
    }
};

namespace detail {

// Gates are tiled into fixed blocks. The grid never depends on worker
// count: block b always covers global gates [b*kBlockGates, ...), each
// block's skip walk has its own stream, and every gate's content comes
// from the gate's own stream. Identical seeds therefore give identical
// counts for any workers_hint.
inline constexpr uint64_t kBlockGates = uint64_t(1) << 20;

// A gate's observable content is seven independent "fired" bits, in fixed
// order: pair detected on signal arm only / idler only / both arms, noise
// detection on signal / idler, dark count on signal / idler. Poisson
// multiplicities collapse to bits because every tally below depends only
// on which classes fired (a click is an OR; a fully detected pair fires
// class 2). Classes 0..2 are the thinned pair components, so their rates
// are exact for any pair multiplicity.
struct GateModel {
    double fire[7] = {};  ///< P(class fires)
    double w_cum[7] = {}; ///< cumulative P(first fired class == j | gate non-empty)
    double log_p0 = 0.0;  ///< log P(no class fires)
    bool dead = true;     ///< nothing can ever fire
    uint32_t acc_offset = 1;
};

inline GateModel build_gate_model(const JointProbabilities& jp, const DetectionConfig& det) {
    jp.validate();
    det.validate();
    const PairCategories pc = pair_categories(jp, det);

    GateModel m;
    m.acc_offset = det.acc_offset;
    const double lam[5] = {det.mu * pc.s_only, det.mu * pc.i_only, det.mu * pc.both,
                           detected_noise_s(det), detected_noise_i(det)};
    double quiet[7];
    for (int j = 0; j < 5; ++j) {
        quiet[j] = std::exp(-lam[j]);
        m.fire[j] = -std::expm1(-lam[j]);
    }
    quiet[5] = 1.0 - det.dark_s;
    quiet[6] = 1.0 - det.dark_i;
    m.fire[5] = det.dark_s;
    m.fire[6] = det.dark_i;

    double p0 = 1.0;
    for (double q : quiet) p0 *= q;
    if (p0 >= 1.0) return m; // all rates zero (or beyond double resolution): dead
    m.dead = false;
    m.log_p0 = std::log(p0);

    // Selector for the first fired class given a non-empty gate:
    // w_j = (prod_{l<j} quiet_l) * fire_j / (1 - p0). The bins sum to 1
    // exactly in real arithmetic; pinning the last live class to 1 keeps
    // rounding from ever routing the selector to a zero-rate class.
    int last = 0;
    for (int j = 0; j < 7; ++j)
        if (m.fire[j] > 0.0) last = j;
    double prefix = 1.0, cum = 0.0;
    for (int j = 0; j < 7; ++j) {
        cum += prefix * m.fire[j] / (1.0 - p0);
        m.w_cum[j] = j >= last ? 1.0 : std::fmin(cum, 1.0);
        prefix *= quiet[j];
    }
    return m;
}

// A per-gate mixture of gate models: each gate independently behaves as
// component k with probability weight[k]. Empty gates are skipped in one
// geometric stride using the mixed empty probability; a non-empty gate
// first resolves its component from the posterior weights given that
// something fired, then draws that component's content.
struct MixtureModel {
    std::vector<GateModel> comp;
    std::vector<double> sel_cum; ///< cumulative P(component | gate non-empty)
    double log_p0 = 0.0;
    bool dead = true;
    uint32_t acc_offset = 1;
};

inline MixtureModel build_mixture_model(std::vector<GateModel> comps,
                                        const std::vector<double>& weights) {
    if (comps.empty() || comps.size() != weights.size())
        throw invalid_config("mixture: needs matching, non-empty components and weights");
    MixtureModel m;
    m.acc_offset = comps.front().acc_offset;
    for (const GateModel& c : comps)
        if (c.acc_offset != m.acc_offset)
            throw invalid_config("mixture: components disagree on acc_offset");
    double wsum = 0.0;
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w))
            throw invalid_config("mixture: weights must be positive finite");
        wsum += w;
    }

    double p0 = 0.0;
    for (size_t k = 0; k < comps.size(); ++k)
        p0 += weights[k] / wsum * (comps[k].dead ? 1.0 : std::exp(comps[k].log_p0));
    m.comp = std::move(comps);
    if (p0 >= 1.0) return m; // nothing can fire in any component
    m.dead = false;
    m.log_p0 = std::log(p0);

    size_t last = 0;
    for (size_t k = 0; k < m.comp.size(); ++k)
        if (!m.comp[k].dead) last = k;
    m.sel_cum.resize(m.comp.size());
    double cum = 0.0;
    for (size_t k = 0; k < m.comp.size(); ++k) {
        const double live = m.comp[k].dead ? 0.0 : -std::expm1(m.comp[k].log_p0);
        cum += weights[k] / wsum * live / (1.0 - p0);
        m.sel_cum[k] = k >= last ? 1.0 : std::fmin(cum, 1.0);
    }
    return m;
}

struct BlockCounts {
    CountRecord rec;
    std::vector<uint32_t> tail_s; ///< signal clicks within acc_offset of the block end
    std::vector<uint32_t> head_i; ///< idler clicks within acc_offset of the block start
};

inline BlockCounts run_block(const MixtureModel& m, uint64_t seed, uint64_t block,
                             uint64_t n_gates) {
    BlockCounts out;
    out.rec.gates = n_gates;
    if (m.dead) return out;

    const uint64_t off = m.acc_offset;
    std::vector<uint32_t> s_list, i_list;
    rng::Stream skip = rng::skip_stream(seed, block);

    uint64_t g = 0;
    while (g < n_gates) {
        // Length of the empty-gate run ahead: geometric in P(empty).
        const double u = skip.next_unit();
        const double run_len = std::log1p(-u) / m.log_p0;
        if (run_len >= static_cast<double>(n_gates - g)) break;
        g += static_cast<uint64_t>(run_len);

        // Gate g is non-empty; draw its content conditioned on that. With
        // several components one draw resolves which fired; a single
        // component consumes no draw so its bit stream is unchanged. Then
        // one selector picks the first fired class, later classes stay
        // unconditioned, earlier ones are quiet by construction.
        rng::Stream gs = rng::gate_stream(seed, block * kBlockGates + g);
        size_t k = 0;
        if (m.comp.size() > 1) {
            const double cu = gs.next_unit();
            while (k + 1 < m.comp.size() && cu >= m.sel_cum[k]) ++k;
        }
        const GateModel& c = m.comp[k];
        const double sel = gs.next_unit();
        int j = 0;
        while (j < 6 && sel >= c.w_cum[j]) ++j;
        bool fired[7] = {};
        fired[j] = true;
        for (int l = j + 1; l < 7; ++l) fired[l] = gs.next_unit() < c.fire[l];

        const bool cs = fired[0] || fired[2] || fired[3] || fired[5];
        const bool ci = fired[1] || fired[2] || fired[4] || fired[6];
        out.rec.clicks_s += cs;
        out.rec.clicks_i += ci;
        if (cs && ci) {
            ++out.rec.coincidences;
            out.rec.pair_coincidences += fired[2] ? 1 : 0;
        }
        if (cs) {
            s_list.push_back(static_cast<uint32_t>(g));
            if (g + off >= n_gates) out.tail_s.push_back(static_cast<uint32_t>(g));
        }
        if (ci) {
            i_list.push_back(static_cast<uint32_t>(g));
            if (g < off) out.head_i.push_back(static_cast<uint32_t>(g));
        }
        ++g;
    }

    // Delayed-window pairs lying fully inside the block; both lists are
    // sorted, so a single forward scan suffices.
    size_t b = 0;
    for (uint32_t s : s_list) {
        const uint64_t want = uint64_t(s) + off;
        if (want >= n_gates) break; // handled by the cross-block stubs
        while (b < i_list.size() && i_list[b] < want) ++b;
        if (b == i_list.size()) break;
        out.rec.accidental_estimate += i_list[b] == want ? 1 : 0;
    }
    return out;
}

/// Pairs (s in block b, i in block b+1) of the delayed window.
inline uint64_t cross_block_pairs(const std::vector<uint32_t>& tail_s,
                                  const std::vector<uint32_t>& head_i,
                                  uint64_t block_gates, uint64_t off) {
    uint64_t n = 0;
    size_t b = 0;
    for (uint32_t s : tail_s) {
        const uint64_t want = uint64_t(s) + off - block_gates;
        while (b < head_i.size() && head_i[b] < want) ++b;
        if (b == head_i.size()) break;
        n += head_i[b] == want ? 1 : 0;
    }
    return n;
}

} // namespace detail

/// @brief One component of a per-gate source mixture: with the given
/// weight, a gate's pairs all carry this outcome table. Weights need not
/// be normalized.
struct MixtureComponent {
    double weight = 1.0;
    JointProbabilities outcomes;
};

namespace detail {

inline CountRecord simulate_model(const MixtureModel& model, uint32_t acc_offset,
                                  const RunSpec& run) {
    run.validate();
    const uint64_t n_blocks = (run.gates + detail::kBlockGates - 1) / detail::kBlockGates;

    CountRecord total;
    std::vector<uint32_t> prev_tail;   // tail stubs of the previous block
    uint64_t prev_tail_gates = 0;

    // Blocks are processed in waves so memory stays bounded on long runs;
    // combination below is in block order either way.
    const uint64_t wave = 1024;
    std::vector<detail::BlockCounts> parts;
    for (uint64_t lo = 0; lo < n_blocks; lo += wave) {
        const uint64_t hi = std::min(n_blocks, lo + wave);
        parts.assign(hi - lo, detail::BlockCounts{});
        auto work = [&](uint64_t first, uint64_t stride) {
            for (uint64_t b = lo + first; b < hi; b += stride) {
                const uint64_t start = b * detail::kBlockGates;
                const uint64_t n = std::min(detail::kBlockGates, run.gates - start);
                parts[b - lo] = detail::run_block(model, run.seed, b, n);
            }
        };
        const unsigned workers =
            std::max<unsigned>(1, std::min<uint64_t>(run.workers_hint, hi - lo));
        if (workers == 1) {
            work(0, 1);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (unsigned w = 0; w < workers; ++w)
                pool.emplace_back(work, w, workers);
            for (auto& t : pool) t.join();
        }
        for (uint64_t b = lo; b < hi; ++b) {
            detail::BlockCounts& part = parts[b - lo];
            if (b > 0)
                total.accidental_estimate += detail::cross_block_pairs(
                    prev_tail, part.head_i, prev_tail_gates, acc_offset);
            total += part.rec;
            prev_tail = std::move(part.tail_s);
            prev_tail_gates = part.rec.gates;
        }
    }
    return total;
}

} // namespace detail

/// @brief Simulate the detection chain over a run of gates for one fixed
/// table of analyzer outcome probabilities. Returns exact integer tallies;
/// byte-identical for identical (probabilities, detection, gates, seed)
/// regardless of workers_hint.
inline CountRecord simulate_counts(const JointProbabilities& outcome_probs,
                                   const DetectionConfig& det, const RunSpec& run) {
    std::vector<detail::GateModel> comps{detail::build_gate_model(outcome_probs, det)};
    return detail::simulate_model(detail::build_mixture_model(std::move(comps), {1.0}),
                                  det.acc_offset, run);
}

/// @brief Simulate a source that emits a different state gate by gate:
/// each gate independently picks a component (by weight), and all its
/// pairs use that component's outcome table. A single component consumes
/// the same random draws as simulate_counts, bit for bit.
inline CountRecord simulate_counts_mixture(const std::vector<MixtureComponent>& components,
                                           const DetectionConfig& det, const RunSpec& run) {
    std::vector<detail::GateModel> comps;
    std::vector<double> weights;
    comps.reserve(components.size());
    weights.reserve(components.size());
    for (const MixtureComponent& c : components) {
        comps.push_back(detail::build_gate_model(c.outcomes, det));
        weights.push_back(c.weight);
    }
    return detail::simulate_model(detail::build_mixture_model(std::move(comps), weights),
                                  det.acc_offset, run);
}

/// Analyzer outcome probabilities of a state as seen through the detection
/// chain's depolarization.
inline JointProbabilities outcome_probabilities(const TwoPhotonState& state,
                                                const AnalyzerSetting& setting,
                                                const DetectionConfig& det) {
    return depolarize_outcomes(joint_probabilities(state, setting), det.p_depol, det.p_depol);
}

/// Simulate one analyzer setting against a two-photon state.
inline CountRecord simulate_setting(const TwoPhotonState& state, const AnalyzerSetting& setting,
                                    const DetectionConfig& det, const RunSpec& run) {
    return simulate_counts(outcome_probabilities(state, setting, det), det, run);
}

/// @brief One point of an analyzer scan: the setting, the derived seed the
/// point ran under, and its tallies.
struct ScanPoint {
    AnalyzerSetting setting;
    uint64_t seed = 0;
    CountRecord counts;
};

/// @brief Run a list of analyzer settings against one state. Point idx runs
/// under child seed child_seed(run.seed, idx), so scans are reproducible
/// and any point can be re-run on its own.
inline std::vector<ScanPoint> scan_settings(const TwoPhotonState& state,
                                            const std::vector<AnalyzerSetting>& settings,
                                            const DetectionConfig& det, const RunSpec& run) {
    std::vector<ScanPoint> points;
    points.reserve(settings.size());
    for (size_t idx = 0; idx < settings.size(); ++idx) {
        ScanPoint p;
        p.setting = settings[idx];
        p.seed = rng::child_seed(run.seed, idx);
        RunSpec child{run.gates, p.seed, run.workers_hint};
        p.counts = simulate_setting(state, p.setting, det, child);
        points.push_back(p);
    }
    return points;
}

/// @brief One point of an idler-analyzer sweep.
struct FringePoint {
    double theta2_deg = 0.0;
    uint64_t seed = 0;
    CountRecord counts;
};

/// @brief Sweep the idler analyzer at a fixed signal analyzer angle; the
/// seed schedule matches scan_settings.
inline std::vector<FringePoint> scan_fringe(const TwoPhotonState& state, double theta1_deg,
                                            const std::vector<double>& theta2_deg,
                                            Orientation orientation, const DetectionConfig& det,
                                            const RunSpec& run) {
    std::vector<AnalyzerSetting> settings;
    settings.reserve(theta2_deg.size());
    for (double t2 : theta2_deg) settings.push_back({theta1_deg, t2, orientation});
    const std::vector<ScanPoint> scan = scan_settings(state, settings, det, run);

    std::vector<FringePoint> points;
    points.reserve(scan.size());
    for (const ScanPoint& s : scan)
        points.push_back({s.setting.theta2_deg, s.seed, s.counts});
    return points;
}

} // namespace loopsim
