#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "loopsim/config.hpp"
#include "loopsim/experiment.hpp"

using namespace loopsim;
using Catch::Matchers::WithinAbs;

TEST_CASE("config parsing handles sections, comments and whitespace") {
    const Config cfg = Config::parse_string("# leading comment\n"
                                            "[run]\n"
                                            "gates = 1000   # trailing comment\n"
                                            "\n"
                                            "  seed=0xDEADBEEF\n"
                                            "[scan]\n"
                                            "theta1_step_deg =  -7.5\n");
    CHECK(cfg.has_section("run"));
    CHECK(cfg.has("run", "gates"));
    CHECK_FALSE(cfg.has("run", "missing"));
    CHECK(cfg.get_uint("run", "gates") == 1000);
    CHECK(cfg.get_uint("run", "seed") == 0xDEADBEEFull);
    CHECK(cfg.get_double("scan", "theta1_step_deg") == -7.5);
    CHECK(cfg.get_double("scan", "absent", 4.25) == 4.25);
    CHECK(cfg.get_string("scan", "absent", "dflt") == "dflt");
    CHECK(cfg.sections() == std::vector<std::string>{"run", "scan"});
    CHECK(cfg.keys("run") == std::vector<std::string>{"gates", "seed"});
}

TEST_CASE("config parsing rejects malformed input") {
    CHECK_THROWS_AS(Config::parse_string("[run\ngates = 1\n"), invalid_config);
    CHECK_THROWS_AS(Config::parse_string("gates = 1\n"), invalid_config); // outside any section
    CHECK_THROWS_AS(Config::parse_string("[run]\ngates\n"), invalid_config);
    CHECK_THROWS_AS(Config::parse_string("[run]\ngates =\n"), invalid_config);
    CHECK_THROWS_AS(Config::parse_string("[run]\nbad key = 1\n"), invalid_config);
    CHECK_THROWS_AS(Config::parse_string("[run]\ngates = 1\ngates = 2\n"), invalid_config);
    CHECK_THROWS_AS(Config::parse_string("[]\n"), invalid_config);
    CHECK_THROWS_AS(Config::load("/nonexistent/path/x.cfg"), io_error);
}

TEST_CASE("config numeric accessors reject junk") {
    const Config cfg = Config::parse_string("[a]\nx = 1.5pt\ny = -3\nz = 1e999\nw = 12\n");
    CHECK_THROWS_AS(cfg.get_double("a", "x"), invalid_config);
    CHECK_THROWS_AS(cfg.get_uint("a", "y"), invalid_config);
    CHECK_THROWS_AS(cfg.get_double("a", "z"), invalid_config);
    CHECK_THROWS_AS(cfg.get_double("a", "missing"), invalid_config);
    CHECK_THROWS_AS(cfg.get_double("missing", "x"), invalid_config);
    CHECK(cfg.get_uint("a", "w") == 12);
    CHECK(cfg.get_double("a", "w") == 12.0);
}

TEST_CASE("doubles round-trip through serialization exactly") {
    Config cfg;
    const double values[] = {0.1, 1.0 / 3.0, 1e300, -2.5e-7, 3.141592653589793, 490e-6};
    for (size_t k = 0; k < std::size(values); ++k)
        cfg.set_double("v", "k" + std::to_string(k), values[k]);
    const Config back = Config::parse_string(cfg.serialize());
    for (size_t k = 0; k < std::size(values); ++k)
        CHECK(back.get_double("v", "k" + std::to_string(k)) == values[k]);
}

TEST_CASE("config hash tracks values, not formatting") {
    const Config a = Config::parse_string("[run]\ngates = 10\nseed = 3\n");
    const Config b = Config::parse_string("# comment\n[run]\n  gates=10\n\nseed =\t3\n");
    const Config c = Config::parse_string("[run]\ngates = 11\nseed = 3\n");
    CHECK(a.hash() == b.hash());
    CHECK(a.hash() != c.hash());
    CHECK(a.serialize() == b.serialize());

    // canonical form is a fixed point of parse . serialize
    CHECK(Config::parse_string(a.serialize()).serialize() == a.serialize());
}

TEST_CASE("an empty config yields the baseline experiment") {
    const ExperimentSpec s = ExperimentSpec::from_config(Config{});
    CHECK_THAT(s.phi_r(), WithinAbs(0.0, 1e-12));
    const TwoPhotonState st = s.state();
    CHECK_THAT(st.amp_hh().real(), WithinAbs(1.0 / std::sqrt(2.0), 1e-12));
    CHECK_THAT(st.amp_vv().real(), WithinAbs(1.0 / std::sqrt(2.0), 1e-12));
    CHECK_THAT(st.amp_vv().imag(), WithinAbs(0.0, 1e-12));
    CHECK(s.detection.mu == 0.01);
    CHECK(s.detection.trans_s == 1.0);
    CHECK(s.run.gates == 1000000);
    CHECK(s.orientation == Orientation::same_handed);
    CHECK(s.scan.theta1_points == 19);
    CHECK(s.chsh.negated == ChshPlacement::minus_apbp);
}

TEST_CASE("experiment round-trips through its config form byte for byte") {
    Config cfg = Config::parse_string("[loop]\nvarphi = 0.1\ndelta_n = 1e-7\n"
                                      "[detection]\nmu = 0.0534\ntrans_s = 0.0899\n"
                                      "[run]\ngates = 200000000\nseed = 42\nworkers = 8\n"
                                      "orientation = mirrored\n"
                                      "[chsh]\nnegated = abp\nruns = 5\n");
    const ExperimentSpec s = ExperimentSpec::from_config(cfg);
    CHECK(s.run.workers_hint == 8);
    CHECK(s.orientation == Orientation::mirrored);
    CHECK(s.chsh.negated == ChshPlacement::minus_abp);

    const std::string once = s.to_config().serialize();
    const ExperimentSpec again = ExperimentSpec::from_config(Config::parse_string(once));
    CHECK(again.to_config().serialize() == once);
    CHECK(again.loop.varphi == s.loop.varphi);
    CHECK(again.detection.mu == s.detection.mu);
    CHECK(again.phi_r() == s.phi_r());
}

TEST_CASE("loop keys feed the phase model") {
    const Config cfg = Config::parse_string("[loop]\nvarphi = 0.1\n");
    const ExperimentSpec s = ExperimentSpec::from_config(cfg);
    CHECK_THAT(s.phi_r(), WithinAbs(0.2, 1e-12));
}

TEST_CASE("unknown sections and keys are rejected") {
    CHECK_THROWS_AS(ExperimentSpec::from_config(Config::parse_string("[loops]\nx_m = 1\n")),
                    invalid_config);
    CHECK_THROWS_AS(ExperimentSpec::from_config(Config::parse_string("[loop]\nxm = 1\n")),
                    invalid_config);
    CHECK_THROWS_AS(ExperimentSpec::from_config(Config::parse_string("[run]\ngate = 5\n")),
                    invalid_config);
}

TEST_CASE("experiment validation catches bad values at parse time") {
    CHECK_THROWS_AS(
        ExperimentSpec::from_config(Config::parse_string("[pump]\nalpha = 0.9\nbeta = 0.9\n")),
        invalid_config);
    CHECK_THROWS_AS(
        ExperimentSpec::from_config(Config::parse_string("[run]\norientation = upside_down\n")),
        invalid_config);
    CHECK_THROWS_AS(ExperimentSpec::from_config(Config::parse_string("[run]\nworkers = 0\n")),
                    invalid_config);
    CHECK_THROWS_AS(ExperimentSpec::from_config(Config::parse_string("[chsh]\nnegated = aa\n")),
                    invalid_config);
    CHECK_THROWS_AS(
        ExperimentSpec::from_config(Config::parse_string("[scan]\ntheta1_step_deg = 0\n")),
        invalid_config);
    CHECK_THROWS_AS(
        ExperimentSpec::from_config(Config::parse_string("[detection]\nmu = -0.5\n")),
        invalid_config);
    CHECK_THROWS_AS(
        ExperimentSpec::from_config(Config::parse_string("[detection]\nacc_offset = 4294967296\n")),
        invalid_config);
    CHECK_THROWS_AS(
        ExperimentSpec::from_config(Config::parse_string("[calibrate]\nsingles_s = -1e-6\n")),
        invalid_config);
    CHECK_THROWS_AS(ExperimentSpec::from_config(Config::parse_string("[sweep]\nkm_step = 0\n")),
                    invalid_config);
}
