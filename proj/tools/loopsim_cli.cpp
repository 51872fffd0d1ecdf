// Command line front end. Reads one sectioned key = value config file,
// runs a named command against the simulator and writes '#'-commented CSV
// files that plot directly.
//
// Commands:
//   state           print pump split, relative phase and output amplitudes
//   fringe          sweep analyzer 1 at fixed analyzer 2, fit visibility
//   chsh            measure the four correlation terms, aggregate S over runs
//   calibrate       fit mu and arm transmissions to target rates, emit a config
//   sweep-distance  visibilities and S while fiber is added to both arms
//   maximize        search analyzer angles for the largest CHSH value
//
// Exit codes: 0 success, 2 bad arguments or config, 3 fit failure, 4 I/O
// failure. Same config + seed gives byte-identical output files.

#include <array>
#include <cinttypes>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "loopsim/experiment.hpp"
#include "loopsim/rng.hpp"

namespace {

using namespace loopsim;

// 17 significant digits round-trip a double exactly, which is what makes
// re-running a config byte-identical.
std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string cnum(std::complex<double> z) {
    std::string s = num(z.real());
    s += std::signbit(z.imag()) ? " - " : " + ";
    s += num(std::fabs(z.imag()));
    s += "i";
    return s;
}

std::string hex_hash(uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "0x%016" PRIx64, h);
    return buf;
}

std::ofstream open_out(const std::string& dir, const std::string& name, std::string* path_out) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create output directory '" + dir + "': " + ec.message());
    const fs::path p = fs::path(dir) / name;
    std::ofstream f(p);
    if (!f) throw io_error("cannot open '" + p.string() + "' for writing");
    *path_out = p.string();
    return f;
}

void close_checked(std::ofstream& f, const std::string& path) {
    f.flush();
    if (!f) throw io_error("write failed for '" + path + "'");
}

void write_preamble(std::ostream& os, const char* cmd, const ExperimentSpec& spec) {
    os << "# loopsim " << cmd << "\n";
    os << "# config_hash = " << hex_hash(spec.to_config().hash()) << "\n";
    os << "# seed = " << spec.run.seed << "\n";
}

ValueWithError point_rate(const CountRecord& c, bool subtract) {
    return subtract ? subtract_accidentals(c) : coincidence_rate(c);
}

void cmd_state(const ExperimentSpec& spec) {
    const TwoPhotonState st = spec.state();
    std::cout << "alpha  = " << num(spec.pump.alpha) << "\n";
    std::cout << "beta   = " << num(spec.pump.beta) << "\n";
    std::cout << "phi_r  = " << num(spec.phi_r()) << " rad\n";
    std::cout << "amp_hh = " << cnum(st.amp_hh()) << "\n";
    std::cout << "amp_hv = " << cnum(st.amp_hv()) << "\n";
    std::cout << "amp_vh = " << cnum(st.amp_vh()) << "\n";
    std::cout << "amp_vv = " << cnum(st.amp_vv()) << "\n";
}

void write_fit_line(std::ostream& os, const char* label, const FringeFit& fit) {
    os << "# " << label << ": V = " << num(fit.visibility) << " +/- "
       << num(fit.sigma_visibility) << ", mean = " << num(fit.mean) << ", peak_deg = "
       << num(fit.peak_deg) << ", chi2 = " << num(fit.chi2) << ", dof = " << fit.dof << "\n";
}

void cmd_fringe(const ExperimentSpec& spec, bool subtract, const std::string& out_dir) {
    const TwoPhotonState st = spec.state();
    std::vector<AnalyzerSetting> settings;
    for (double t1 : spec.scan.theta1_degs())
        settings.push_back({t1, spec.scan.fixed_theta2_deg, spec.orientation});
    const std::vector<ScanPoint> points = scan_settings(st, settings, spec.detection, spec.run);

    std::string path;
    std::ofstream f = open_out(out_dir, "fringe.csv", &path);
    write_preamble(f, "fringe", spec);
    f << "# theta2_deg = " << num(spec.scan.fixed_theta2_deg) << ", subtract = "
      << (subtract ? "on" : "off") << "\n";
    f << "theta1_deg,rate_raw,rate_subtracted,sigma\n";
    for (const ScanPoint& p : points) {
        const ValueWithError raw = coincidence_rate(p.counts);
        const ValueWithError sub = subtract_accidentals(p.counts);
        f << num(p.setting.theta1_deg) << ',' << num(raw.value) << ',' << num(sub.value) << ','
          << num(subtract ? sub.sigma : raw.sigma) << "\n";
    }

    // Fit both analyses for the summary block; only a failure of the
    // selected one is fatal.
    FringeFit fit_sel{};
    bool have_sel = false;
    std::string sel_err;
    const char* sel_label = subtract ? "fit_subtracted" : "fit_raw";
    try {
        fit_sel = fit_visibility(fringe_data(points, subtract, ScanAxis::theta1));
        have_sel = true;
        write_fit_line(f, sel_label, fit_sel);
    } catch (const fit_failure& e) {
        sel_err = e.what();
        f << "# " << sel_label << ": failed (" << sel_err << ")\n";
    }
    if (subtract) {
        try {
            write_fit_line(f, "fit_raw", fit_visibility(fringe_data(points, false, ScanAxis::theta1)));
        } catch (const fit_failure& e) {
            f << "# fit_raw: failed (" << e.what() << ")\n";
        }
    }
    close_checked(f, path);

    std::cout << "fringe: wrote " << path << "\n";
    if (!have_sel) throw fit_failure(sel_err);
    std::cout << "fringe: V" << (subtract ? "_subtracted" : "_raw") << " = "
              << num(fit_sel.visibility) << " +/- " << num(fit_sel.sigma_visibility)
              << " (peak at " << num(fit_sel.peak_deg) << " deg)\n";
}

struct ChshTerm {
    const char* name;
    double t1;
    double t2;
};

// The four correlation terms in placement order, each measured through the
// four outcome complements (pass/block on either arm via +90 deg).
std::array<ChshTerm, 4> chsh_terms(const ChshSpec& c) {
    return {{{"ab", c.a_deg, c.b_deg},
             {"abp", c.a_deg, c.bp_deg},
             {"apb", c.ap_deg, c.b_deg},
             {"apbp", c.ap_deg, c.bp_deg}}};
}

std::vector<AnalyzerSetting> chsh_settings(const ChshSpec& c, Orientation orientation) {
    std::vector<AnalyzerSetting> settings;
    settings.reserve(16);
    for (const ChshTerm& t : chsh_terms(c)) {
        settings.push_back({t.t1, t.t2, orientation});
        settings.push_back({t.t1, t.t2 + 90.0, orientation});
        settings.push_back({t.t1 + 90.0, t.t2, orientation});
        settings.push_back({t.t1 + 90.0, t.t2 + 90.0, orientation});
    }
    return settings;
}

// Correlation terms from one 16-setting scan, in placement order.
std::array<ValueWithError, 4> chsh_correlations(const std::vector<ScanPoint>& points,
                                                bool subtract) {
    std::array<ValueWithError, 4> e;
    for (size_t k = 0; k < 4; ++k) {
        const ValueWithError pp = point_rate(points[4 * k + 0].counts, subtract);
        const ValueWithError pb = point_rate(points[4 * k + 1].counts, subtract);
        const ValueWithError bp = point_rate(points[4 * k + 2].counts, subtract);
        const ValueWithError bb = point_rate(points[4 * k + 3].counts, subtract);
        e[k] = correlation_e(pp, pb, bp, bb);
    }
    return e;
}

void cmd_chsh(const ExperimentSpec& spec, bool subtract, const std::string& out_dir) {
    const TwoPhotonState st = spec.state();
    const std::vector<AnalyzerSetting> settings = chsh_settings(spec.chsh, spec.orientation);
    const std::array<ChshTerm, 4> terms = chsh_terms(spec.chsh);
    static const char* const outcome[4] = {"pp", "pb", "bp", "bb"};

    std::string path;
    std::ofstream f = open_out(out_dir, "chsh.csv", &path);
    write_preamble(f, "chsh", spec);
    f << "# negated = " << ExperimentSpec::placement_name(spec.chsh.negated) << ", subtract = "
      << (subtract ? "on" : "off") << "\n";
    f << "run,term,outcome,theta1_deg,theta2_deg,gates,clicks_s,clicks_i,coincidences,"
         "accidentals,rate,sigma\n";

    std::vector<ValueWithError> per_run;
    std::vector<std::array<ValueWithError, 4>> per_run_e;
    for (unsigned r = 0; r < spec.chsh.runs; ++r) {
        const RunSpec run{spec.run.gates, rng::child_seed(spec.run.seed, r),
                          spec.run.workers_hint};
        const std::vector<ScanPoint> points = scan_settings(st, settings, spec.detection, run);
        for (size_t j = 0; j < points.size(); ++j) {
            const ScanPoint& p = points[j];
            const ValueWithError rate = point_rate(p.counts, subtract);
            f << r << ',' << terms[j / 4].name << ',' << outcome[j % 4] << ','
              << num(p.setting.theta1_deg) << ',' << num(p.setting.theta2_deg) << ','
              << p.counts.gates << ',' << p.counts.clicks_s << ',' << p.counts.clicks_i << ','
              << p.counts.coincidences << ',' << p.counts.accidental_estimate << ','
              << num(rate.value) << ',' << num(rate.sigma) << "\n";
        }
        per_run_e.push_back(chsh_correlations(points, subtract));
        per_run.push_back(chsh_value(per_run_e.back(), spec.chsh.negated));
    }

    for (unsigned r = 0; r < per_run.size(); ++r) {
        f << "# run " << r << ":";
        for (size_t k = 0; k < 4; ++k)
            f << " E_" << terms[k].name << " = " << num(per_run_e[r][k].value) << " +/- "
              << num(per_run_e[r][k].sigma) << ",";
        f << " S = " << num(per_run[r].value) << " +/- " << num(per_run[r].sigma) << "\n";
    }

    const ChshEstimate est = chsh_aggregate(per_run);
    const bool scatter = est.runs > 1;
    const double sigma = scatter ? est.sigma_scatter : est.sigma_counting;
    f << "# S = " << num(est.s) << " +/- " << num(sigma) << " (" << est.runs << " runs, "
      << (scatter ? "run-to-run scatter" : "counting") << ")\n";
    f << "# sigma_scatter = " << num(est.sigma_scatter) << ", sigma_counting = "
      << num(est.sigma_counting) << "\n";
    close_checked(f, path);

    std::cout << "chsh: wrote " << path << "\n";
    std::cout << "chsh: S = " << num(est.s) << " +/- " << num(sigma) << " (" << est.runs
              << " runs, " << (scatter ? "run-to-run scatter" : "counting") << ")\n";
}

void cmd_calibrate(const ExperimentSpec& spec, const std::string& out_dir) {
    CalibrationSettings cs;
    cs.eta = spec.detection.eta;
    cs.dark_s = spec.detection.dark_s;
    cs.dark_i = spec.detection.dark_i;
    cs.p_depol = spec.detection.p_depol;
    cs.noise_ratio = spec.calibrate.noise_ratio;
    cs.phi_r = spec.phi_r();
    cs.orientation = spec.orientation;
    cs.acc_offset = spec.detection.acc_offset;
    const CalibrationResult res = calibrate_rates(spec.calibrate.targets, cs);

    ExperimentSpec fitted = spec;
    fitted.detection = res.detection;
    const Config out = fitted.to_config();

    std::string path;
    std::ofstream f = open_out(out_dir, "calibrated.cfg", &path);
    f << "# loopsim calibrate\n";
    f << "# config_hash = " << hex_hash(out.hash()) << "\n";
    f << "# targets: singles_s = " << num(spec.calibrate.targets.singles_s) << ", singles_i = "
      << num(spec.calibrate.targets.singles_i) << ", coincidence_peak = "
      << num(spec.calibrate.targets.coincidence_peak) << " per gate\n";
    f << "# fitted: mu = " << num(res.detection.mu) << ", trans_s = " << num(res.detection.trans_s)
      << ", trans_i = " << num(res.detection.trans_i) << ", noise_s = "
      << num(res.detection.noise_s) << ", noise_i = " << num(res.detection.noise_i) << "\n";
    f << "# residual = " << num(res.residual) << " after " << res.iterations << " iterations\n";
    f << out.serialize();
    close_checked(f, path);

    std::cout << "calibrate: wrote " << path << "\n";
    std::cout << "calibrate: mu = " << num(res.detection.mu) << ", trans_s = "
              << num(res.detection.trans_s) << ", trans_i = " << num(res.detection.trans_i)
              << "\n";
    std::cout << "calibrate: model rates singles_s = " << num(res.model.click_s)
              << ", singles_i = " << num(res.model.click_i) << ", coincidence = "
              << num(res.model.coincidence) << " (residual " << num(res.residual) << ", "
              << res.iterations << " iterations)\n";
}

void cmd_sweep(const ExperimentSpec& spec, bool subtract, const std::string& out_dir) {
    const SweepSpec& sw = spec.sweep;
    std::string path;
    std::ofstream f = open_out(out_dir, "sweep.csv", &path);
    write_preamble(f, "sweep-distance", spec);
    f << "# " << num(sw.db_per_km) << " dB/km added to each arm, subtract = "
      << (subtract ? "on" : "off") << "\n";
    f << "distance_km,added_db_per_arm,p_depol,varphi,v_theta2_0,sigma_v_0,v_theta2_45,"
         "sigma_v_45,peak_rate_raw,s_value,sigma_s\n";

    const int last = static_cast<int>(sw.km_stop / sw.km_step + 1e-9);
    FringeFit first0{}, first45{}, last0{}, last45{};
    for (int k = 0; k <= last; ++k) {
        const double d = k * sw.km_step;
        const double frac = sw.km_stop > 0.0 ? d / sw.km_stop : 0.0;
        const double t_added = std::pow(10.0, -sw.db_per_km * d / 10.0);

        DetectionConfig det = spec.detection;
        det.trans_s *= t_added;
        det.trans_i *= t_added;
        det.p_depol = spec.detection.p_depol + frac * (sw.p_depol_end - spec.detection.p_depol);
        LoopInputs li = spec.loop_in;
        li.varphi = spec.loop_in.varphi + frac * (sw.varphi_end - spec.loop_in.varphi);
        const LoopConfig loop = make_loop(li.length_m, li.x_m, li.lambda_pump_m,
                                          li.lambda_signal_m, li.group_index, li.delta_n,
                                          li.varphi);
        const TwoPhotonState st = build_output_state(spec.pump, loop);
        const uint64_t dseed = rng::child_seed(spec.run.seed, static_cast<uint64_t>(k));

        std::array<FringeFit, 2> fit{};
        double peak_raw = 0.0;
        const double theta2[2] = {0.0, 45.0};
        for (int j = 0; j < 2; ++j) {
            std::vector<AnalyzerSetting> settings;
            for (double t1 : spec.scan.theta1_degs())
                settings.push_back({t1, theta2[j], spec.orientation});
            const RunSpec run{spec.run.gates, rng::child_seed(dseed, static_cast<uint64_t>(j)),
                              spec.run.workers_hint};
            const std::vector<ScanPoint> points = scan_settings(st, settings, det, run);
            try {
                fit[j] = fit_visibility(fringe_data(points, subtract, ScanAxis::theta1));
            } catch (const fit_failure& e) {
                f << "# fit failed at distance_km = " << num(d) << ", theta2 = "
                  << num(theta2[j]) << ": " << e.what() << "\n";
                close_checked(f, path);
                throw;
            }
            if (j == 0) {
                // Detected peak rate before subtraction; used for loss checks.
                try {
                    const FringeFit raw = fit_visibility(fringe_data(points, false,
                                                                     ScanAxis::theta1));
                    peak_raw = raw.mean + raw.amplitude;
                } catch (const fit_failure&) {
                    for (const ScanPoint& p : points)
                        peak_raw = std::max(peak_raw, coincidence_rate(p.counts).value);
                }
            }
        }

        const RunSpec run{spec.run.gates, rng::child_seed(dseed, 2), spec.run.workers_hint};
        const std::vector<ScanPoint> points =
            scan_settings(st, chsh_settings(spec.chsh, spec.orientation), det, run);
        const ValueWithError s =
            chsh_value(chsh_correlations(points, subtract), spec.chsh.negated);

        f << num(d) << ',' << num(sw.db_per_km * d) << ',' << num(det.p_depol) << ','
          << num(li.varphi) << ',' << num(fit[0].visibility) << ','
          << num(fit[0].sigma_visibility) << ',' << num(fit[1].visibility) << ','
          << num(fit[1].sigma_visibility) << ',' << num(peak_raw) << ',' << num(s.value) << ','
          << num(s.sigma) << "\n";
        if (k == 0) {
            first0 = fit[0];
            first45 = fit[1];
        }
        last0 = fit[0];
        last45 = fit[1];
    }
    close_checked(f, path);

    std::cout << "sweep-distance: wrote " << path << " (" << (last + 1) << " distances)\n";
    std::cout << "sweep-distance: V(theta2=0) " << num(first0.visibility) << " -> "
              << num(last0.visibility) << ", V(theta2=45) " << num(first45.visibility) << " -> "
              << num(last45.visibility) << "\n";
}

void cmd_maximize(const ExperimentSpec& spec, const std::string& out_dir) {
    const ChshOptimum opt = chsh_maximizer(spec.state(), spec.orientation);

    std::string path;
    std::ofstream f = open_out(out_dir, "maximize.csv", &path);
    write_preamble(f, "maximize", spec);
    f << "s,a_deg,ap_deg,b_deg,bp_deg,negated\n";
    f << num(opt.s) << ',' << num(opt.a_deg) << ',' << num(opt.ap_deg) << ',' << num(opt.b_deg)
      << ',' << num(opt.bp_deg) << ',' << ExperimentSpec::placement_name(opt.placement) << "\n";
    close_checked(f, path);

    std::cout << "maximize: wrote " << path << "\n";
    std::cout << "maximize: S = " << num(opt.s) << " at a = " << num(opt.a_deg) << ", a' = "
              << num(opt.ap_deg) << ", b = " << num(opt.b_deg) << ", b' = " << num(opt.bp_deg)
              << " deg (negated " << ExperimentSpec::placement_name(opt.placement) << ")\n";
}

ExperimentSpec load_spec(const std::string& path) {
    if (path.empty()) return ExperimentSpec{};
    return ExperimentSpec::from_config(Config::load(path));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fiber loop photon pair source: simulation and analysis"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    uint64_t seed = 0;
    unsigned runs = 0;
    bool no_subtract = false;
    app.add_option("--config", config_path, "experiment config file")
        ->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "override [run] seed");
    app.add_option("--out", out_dir, "directory for output files (default .)");
    app.add_option("--runs", runs, "override [chsh] runs");
    app.add_flag("--no-subtract", no_subtract,
                 "analyze raw coincidence rates, skipping accidental subtraction");

    CLI::App* c_state = app.add_subcommand("state", "print the configured output state");
    CLI::App* c_fringe =
        app.add_subcommand("fringe", "coincidence fringe vs analyzer 1 angle, with fitted V");
    CLI::App* c_chsh = app.add_subcommand("chsh", "measure S from the four correlation terms");
    CLI::App* c_calibrate =
        app.add_subcommand("calibrate", "fit mu and transmissions to the target rates");
    CLI::App* c_sweep =
        app.add_subcommand("sweep-distance", "visibilities and S vs added fiber length");
    CLI::App* c_maximize =
        app.add_subcommand("maximize", "best CHSH angles and sign for the configured state");
    // Shared flags live on the parent; let them appear after the subcommand too.
    for (CLI::App* c : {c_state, c_fringe, c_chsh, c_calibrate, c_sweep, c_maximize})
        c->fallthrough(true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        ExperimentSpec spec = load_spec(config_path);
        if (app.count("--seed") > 0) spec.run.seed = seed;
        if (app.count("--runs") > 0) {
            spec.chsh.runs = runs;
            spec.chsh.validate();
        }
        const bool subtract = !no_subtract;

        if (app.got_subcommand(c_state)) cmd_state(spec);
        else if (app.got_subcommand(c_fringe)) cmd_fringe(spec, subtract, out_dir);
        else if (app.got_subcommand(c_chsh)) cmd_chsh(spec, subtract, out_dir);
        else if (app.got_subcommand(c_calibrate)) cmd_calibrate(spec, out_dir);
        else if (app.got_subcommand(c_sweep)) cmd_sweep(spec, subtract, out_dir);
        else if (app.got_subcommand(c_maximize)) cmd_maximize(spec, out_dir);
        return 0;
    } catch (const fit_failure& e) {
        std::cerr << "loopsim: fit failure: " << e.what() << "\n";
        return 3;
    } catch (const io_error& e) {
        std::cerr << "loopsim: i/o error: " << e.what() << "\n";
        return 4;
    } catch (const invalid_config& e) {
        std::cerr << "loopsim: config error: " << e.what() << "\n";
        return 2;
    } catch (const precondition_error& e) {
        std::cerr << "loopsim: config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "loopsim: error: " << e.what() << "\n";
        return 1;
    }
}
