#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "loopsim/analysis.hpp"
#include "loopsim/calibrate.hpp"
#include "loopsim/config.hpp"
#include "loopsim/detection.hpp"
#include "loopsim/errors.hpp"
#include "loopsim/loop.hpp"
#include "loopsim/measurement.hpp"
#include "loopsim/montecarlo.hpp"
#include "loopsim/phase.hpp"
#include "loopsim/state.hpp"

namespace loopsim {

/// The primitive quantities a loop is specified by in a config file; the
/// derived LoopConfig is rebuilt from these, so emitting and re-parsing
/// them reproduces the loop bit for bit.
struct LoopInputs {
    double length_m = 2500.0;
    double x_m = 1250.0;
    double lambda_pump_m = 1551.0e-9;
    double lambda_signal_m = 1549.4e-9;
    double group_index = 1.468;
    double delta_n = 0.0;
    double varphi = 0.0;
};

/// Analyzer sweep of the signal arm at a fixed idler angle.
struct ScanSpec {
    double fixed_theta2_deg = 0.0;
    double theta1_start_deg = 0.0;
    double theta1_step_deg = 10.0;
    unsigned theta1_points = 19;

    void validate() const {
        if (!std::isfinite(fixed_theta2_deg) || !std::isfinite(theta1_start_deg) ||
            !std::isfinite(theta1_step_deg))
            throw invalid_config("scan: angles must be finite");
        if (!(theta1_step_deg != 0.0)) throw invalid_config("scan: step must be nonzero");
        if (theta1_points < 1 || theta1_points > 100000)
            throw invalid_config("scan: points must lie in [1, 100000]");
    }

    std::vector<double> theta1_degs() const {
        std::vector<double> t;
        t.reserve(theta1_points);
        for (unsigned k = 0; k < theta1_points; ++k)
            t.push_back(theta1_start_deg + k * theta1_step_deg);
        return t;
    }
};

/// The two analyzer angles per arm and the negated term of the CHSH sum.
struct ChshSpec {
    double a_deg = 0.0;
    double ap_deg = 45.0;
    double b_deg = 22.5;
    double bp_deg = -22.5;
    ChshPlacement negated = ChshPlacement::minus_apbp;
    unsigned runs = 5;

    void validate() const {
        for (double a : {a_deg, ap_deg, b_deg, bp_deg})
            if (!std::isfinite(a)) throw invalid_config("chsh: angles must be finite");
        if (runs < 1 || runs > 1000) throw invalid_config("chsh: runs must lie in [1, 1000]");
    }
};

/// Added-fiber sweep: loss accumulates per km on both arms while the
/// depolarization and the residual phase drift linearly toward their
/// long-distance endpoints.
struct SweepSpec {
    double km_stop = 10.0;
    double km_step = 1.0;
    double db_per_km = 0.2;
    double p_depol_end = 0.05845;
    double varphi_end = 0.0;

    void validate() const {
        if (!(km_stop >= 0.0) || !(km_step > 0.0) || km_stop / km_step > 100000)
            throw invalid_config("sweep: needs km_stop >= 0 and km_step > 0 (at most 1e5 points)");
        if (!(db_per_km >= 0.0)) throw invalid_config("sweep: db_per_km must be non-negative");
        if (!(p_depol_end >= 0.0) || !(p_depol_end < 1.0))
            throw invalid_config("sweep: p_depol_end must lie in [0, 1)");
        if (!std::isfinite(varphi_end)) throw invalid_config("sweep: varphi_end must be finite");
    }
};

/// Rate targets plus the one model choice the calibration cannot infer.
struct CalibrateSpec {
    RateTargets targets{490.0e-6, 380.0e-6, 1.8e-6};
    double noise_ratio = 1.0;
};

/// @brief A full experiment description as read from one config file. Every
/// nested invariant is checked at parse time, and unknown sections or keys
/// are errors rather than silent typos.
struct ExperimentSpec {
    LoopInputs loop_in;
    LoopConfig loop;
    PumpConfig pump{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    DetectionConfig detection = default_detection();
    RunSpec run{1000000, 1, 1};
    Orientation orientation = Orientation::same_handed;
    ScanSpec scan;
    ChshSpec chsh;
    CalibrateSpec calibrate;
    SweepSpec sweep;

    ExperimentSpec() { rebuild_loop(); }

    static DetectionConfig default_detection() { return DetectionConfig{}; }

    void rebuild_loop() {
        loop = make_loop(loop_in.length_m, loop_in.x_m, loop_in.lambda_pump_m,
                         loop_in.lambda_signal_m, loop_in.group_index, loop_in.delta_n,
                         loop_in.varphi);
    }

    double phi_r() const { return relative_phase_full(loop); }

    TwoPhotonState state() const { return build_output_state(pump, loop); }

    static ExperimentSpec from_config(const Config& cfg) {
        check_schema(cfg);
        ExperimentSpec s;

        s.loop_in.length_m = cfg.get_double("loop", "length_m", s.loop_in.length_m);
        s.loop_in.x_m = cfg.get_double("loop", "x_m", s.loop_in.x_m);
        s.loop_in.lambda_pump_m = cfg.get_double("loop", "lambda_pump_m", s.loop_in.lambda_pump_m);
        s.loop_in.lambda_signal_m =
            cfg.get_double("loop", "lambda_signal_m", s.loop_in.lambda_signal_m);
        s.loop_in.group_index = cfg.get_double("loop", "group_index", s.loop_in.group_index);
        s.loop_in.delta_n = cfg.get_double("loop", "delta_n", s.loop_in.delta_n);
        s.loop_in.varphi = cfg.get_double("loop", "varphi", s.loop_in.varphi);
        s.rebuild_loop();

        s.pump.alpha = cfg.get_double("pump", "alpha", s.pump.alpha);
        s.pump.beta = cfg.get_double("pump", "beta", s.pump.beta);
        s.pump.validate();

        DetectionConfig& d = s.detection;
        d.mu = cfg.get_double("detection", "mu", d.mu);
        d.trans_s = cfg.get_double("detection", "trans_s", d.trans_s);
        d.trans_i = cfg.get_double("detection", "trans_i", d.trans_i);
        d.eta = cfg.get_double("detection", "eta", d.eta);
        d.noise_s = cfg.get_double("detection", "noise_s", d.noise_s);
        d.noise_i = cfg.get_double("detection", "noise_i", d.noise_i);
        d.dark_s = cfg.get_double("detection", "dark_s", d.dark_s);
        d.dark_i = cfg.get_double("detection", "dark_i", d.dark_i);
        d.p_depol = cfg.get_double("detection", "p_depol", d.p_depol);
        d.acc_offset = parse_u32(cfg, "detection", "acc_offset", d.acc_offset);
        d.validate();

        s.run.gates = cfg.get_uint("run", "gates", s.run.gates);
        s.run.seed = cfg.get_uint("run", "seed", s.run.seed);
        s.run.workers_hint = parse_u32(cfg, "run", "workers", s.run.workers_hint);
        s.run.validate();
        s.orientation = parse_orientation(cfg.get_string("run", "orientation", "same_handed"));

        s.scan.fixed_theta2_deg = cfg.get_double("scan", "fixed_theta2_deg", 0.0);
        s.scan.theta1_start_deg = cfg.get_double("scan", "theta1_start_deg", 0.0);
        s.scan.theta1_step_deg = cfg.get_double("scan", "theta1_step_deg", 10.0);
        s.scan.theta1_points = parse_u32(cfg, "scan", "theta1_points", 19);
        s.scan.validate();

        s.chsh.a_deg = cfg.get_double("chsh", "a_deg", s.chsh.a_deg);
        s.chsh.ap_deg = cfg.get_double("chsh", "ap_deg", s.chsh.ap_deg);
        s.chsh.b_deg = cfg.get_double("chsh", "b_deg", s.chsh.b_deg);
        s.chsh.bp_deg = cfg.get_double("chsh", "bp_deg", s.chsh.bp_deg);
        s.chsh.negated = parse_placement(cfg.get_string("chsh", "negated", "apbp"));
        s.chsh.runs = parse_u32(cfg, "chsh", "runs", s.chsh.runs);
        s.chsh.validate();

        s.calibrate.targets.singles_s =
            cfg.get_double("calibrate", "singles_s", s.calibrate.targets.singles_s);
        s.calibrate.targets.singles_i =
            cfg.get_double("calibrate", "singles_i", s.calibrate.targets.singles_i);
        s.calibrate.targets.coincidence_peak =
            cfg.get_double("calibrate", "coincidence_peak", s.calibrate.targets.coincidence_peak);
        s.calibrate.noise_ratio = cfg.get_double("calibrate", "noise_ratio", 1.0);
        s.calibrate.targets.validate();

        s.sweep.km_stop = cfg.get_double("sweep", "km_stop", s.sweep.km_stop);
        s.sweep.km_step = cfg.get_double("sweep", "km_step", s.sweep.km_step);
        s.sweep.db_per_km = cfg.get_double("sweep", "db_per_km", s.sweep.db_per_km);
        s.sweep.p_depol_end = cfg.get_double("sweep", "p_depol_end", s.sweep.p_depol_end);
        s.sweep.varphi_end = cfg.get_double("sweep", "varphi_end", s.sweep.varphi_end);
        s.sweep.validate();
        return s;
    }

    /// Canonical emission: every section, every key, 17-digit numbers.
    Config to_config() const {
        Config c;
        c.set_double("loop", "length_m", loop_in.length_m);
        c.set_double("loop", "x_m", loop_in.x_m);
        c.set_double("loop", "lambda_pump_m", loop_in.lambda_pump_m);
        c.set_double("loop", "lambda_signal_m", loop_in.lambda_signal_m);
        c.set_double("loop", "group_index", loop_in.group_index);
        c.set_double("loop", "delta_n", loop_in.delta_n);
        c.set_double("loop", "varphi", loop_in.varphi);
        c.set_double("pump", "alpha", pump.alpha);
        c.set_double("pump", "beta", pump.beta);
        c.set_double("detection", "mu", detection.mu);
        c.set_double("detection", "trans_s", detection.trans_s);
        c.set_double("detection", "trans_i", detection.trans_i);
        c.set_double("detection", "eta", detection.eta);
        c.set_double("detection", "noise_s", detection.noise_s);
        c.set_double("detection", "noise_i", detection.noise_i);
        c.set_double("detection", "dark_s", detection.dark_s);
        c.set_double("detection", "dark_i", detection.dark_i);
        c.set_double("detection", "p_depol", detection.p_depol);
        c.set_uint("detection", "acc_offset", detection.acc_offset);
        c.set_uint("run", "gates", run.gates);
        c.set_uint("run", "seed", run.seed);
        c.set_uint("run", "workers", run.workers_hint);
        c.set("run", "orientation",
              orientation == Orientation::same_handed ? "same_handed" : "mirrored");
        c.set_double("scan", "fixed_theta2_deg", scan.fixed_theta2_deg);
        c.set_double("scan", "theta1_start_deg", scan.theta1_start_deg);
        c.set_double("scan", "theta1_step_deg", scan.theta1_step_deg);
        c.set_uint("scan", "theta1_points", scan.theta1_points);
        c.set_double("chsh", "a_deg", chsh.a_deg);
        c.set_double("chsh", "ap_deg", chsh.ap_deg);
        c.set_double("chsh", "b_deg", chsh.b_deg);
        c.set_double("chsh", "bp_deg", chsh.bp_deg);
        c.set("chsh", "negated", placement_name(chsh.negated));
        c.set_uint("chsh", "runs", chsh.runs);
        c.set_double("calibrate", "singles_s", calibrate.targets.singles_s);
        c.set_double("calibrate", "singles_i", calibrate.targets.singles_i);
        c.set_double("calibrate", "coincidence_peak", calibrate.targets.coincidence_peak);
        c.set_double("calibrate", "noise_ratio", calibrate.noise_ratio);
        c.set_double("sweep", "km_stop", sweep.km_stop);
        c.set_double("sweep", "km_step", sweep.km_step);
        c.set_double("sweep", "db_per_km", sweep.db_per_km);
        c.set_double("sweep", "p_depol_end", sweep.p_depol_end);
        c.set_double("sweep", "varphi_end", sweep.varphi_end);
        return c;
    }

    static Orientation parse_orientation(const std::string& s) {
        if (s == "same_handed") return Orientation::same_handed;
        if (s == "mirrored") return Orientation::mirrored;
        throw invalid_config("run: orientation must be same_handed or mirrored, got '" + s + "'");
    }

    static ChshPlacement parse_placement(const std::string& s) {
        if (s == "ab") return ChshPlacement::minus_ab;
        if (s == "abp") return ChshPlacement::minus_abp;
        if (s == "apb") return ChshPlacement::minus_apb;
        if (s == "apbp") return ChshPlacement::minus_apbp;
        throw invalid_config("chsh: negated must be one of ab, abp, apb, apbp; got '" + s + "'");
    }

    static std::string placement_name(ChshPlacement p) {
        switch (p) {
        case ChshPlacement::minus_ab: return "ab";
        case ChshPlacement::minus_abp: return "abp";
        case ChshPlacement::minus_apb: return "apb";
        default: return "apbp";
        }
    }

  private:
    static uint32_t parse_u32(const Config& cfg, const std::string& sec, const std::string& key,
                              uint32_t fallback) {
        const uint64_t v = cfg.get_uint(sec, key, fallback);
        if (v > 0xffffffffull)
            throw invalid_config("config: [" + sec + "] " + key + " does not fit in 32 bits");
        return static_cast<uint32_t>(v);
    }

    struct SectionSchema {
        const char* name;
        std::initializer_list<const char*> keys;
    };

    static void check_schema(const Config& cfg) {
        static const SectionSchema schema[] = {
            {"loop",
             {"length_m", "x_m", "lambda_pump_m", "lambda_signal_m", "group_index", "delta_n",
              "varphi"}},
            {"pump", {"alpha", "beta"}},
            {"detection",
             {"mu", "trans_s", "trans_i", "eta", "noise_s", "noise_i", "dark_s", "dark_i",
              "p_depol", "acc_offset"}},
            {"run", {"gates", "seed", "workers", "orientation"}},
            {"scan", {"fixed_theta2_deg", "theta1_start_deg", "theta1_step_deg", "theta1_points"}},
            {"chsh", {"a_deg", "ap_deg", "b_deg", "bp_deg", "negated", "runs"}},
            {"calibrate", {"singles_s", "singles_i", "coincidence_peak", "noise_ratio"}},
            {"sweep", {"km_stop", "km_step", "db_per_km", "p_depol_end", "varphi_end"}},
        };
        for (const std::string& sec : cfg.sections()) {
            const SectionSchema* found = nullptr;
            for (const SectionSchema& s : schema)
                if (sec == s.name) {
                    found = &s;
                    break;
                }
            if (!found) throw invalid_config("config: unknown section [" + sec + "]");
            for (const std::string& key : cfg.keys(sec)) {
                bool ok = false;
                for (const char* k : found->keys)
                    if (key == k) {
                        ok = true;
                        break;
                    }
                if (!ok)
                    throw invalid_config("config: unknown key '" + key + "' in section [" + sec +
                                         "]");
            }
        }
    }
};

} // namespace loopsim
