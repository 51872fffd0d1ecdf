#include <catch2/catch_amalgamated.hpp>

#include <loopsim/state.hpp>

#include <limits>
#include <random>

using namespace loopsim;
using Catch::Matchers::WithinAbs;

namespace {
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
}

TEST_CASE("output state carries the loop phase on the VV component", "[state]") {
    const PumpConfig pump{kInvSqrt2, kInvSqrt2};

    SECTION("zero relative phase gives the symmetric Bell state") {
        TwoPhotonState st = build_output_state(pump, 0.0);
        CHECK_THAT(st.amp_hh().real(), WithinAbs(kInvSqrt2, 1e-15));
        CHECK_THAT(st.amp_vv().real(), WithinAbs(kInvSqrt2, 1e-15));
        CHECK(st.amp_hh().imag() == 0.0);
        CHECK_THAT(st.amp_vv().imag(), WithinAbs(0.0, 1e-15));
        CHECK(st.amp_hv() == std::complex<double>(0.0));
        CHECK(st.amp_vh() == std::complex<double>(0.0));
    }
    SECTION("pi relative phase gives the antisymmetric Bell state") {
        TwoPhotonState st = build_output_state(pump, kPi);
        CHECK_THAT(st.amp_vv().real(), WithinAbs(-kInvSqrt2, 1e-12));
        CHECK_THAT(st.amp_vv().imag(), WithinAbs(0.0, 1e-12));
    }
    SECTION("generic phase") {
        const double phi = -0.1468509216134519851607; // frozen loop value
        TwoPhotonState st = build_output_state(pump, phi);
        const std::complex<double> want = std::polar(kInvSqrt2, phi);
        CHECK_THAT(st.amp_vv().real(), WithinAbs(want.real(), 1e-12));
        CHECK_THAT(st.amp_vv().imag(), WithinAbs(want.imag(), 1e-12));
        CHECK_THAT(st.norm2(), WithinAbs(1.0, 1e-13));
    }
}

TEST_CASE("output state built from the loop uses its relative phase", "[state]") {
    const PumpConfig pump{kInvSqrt2, kInvSqrt2};
    LoopConfig loop = make_loop(2500.0, 777.5, 1551e-9, 1552.7e-9, 1.468, 1e-6, kPi / 4.0);
    TwoPhotonState st = build_output_state(pump, loop);
    const std::complex<double> want = std::polar(kInvSqrt2, relative_phase_full(loop));
    CHECK_THAT(st.amp_vv().real(), WithinAbs(want.real(), 1e-13));
    CHECK_THAT(st.amp_vv().imag(), WithinAbs(want.imag(), 1e-13));
}

TEST_CASE("one-sided pump gives a product state", "[state]") {
    TwoPhotonState st = build_output_state(PumpConfig{1.0, 0.0}, 0.7);
    CHECK(st.amp_hh() == std::complex<double>(1.0));
    CHECK(st.amp_vv() == std::complex<double>(0.0));

    TwoPhotonState sv = build_output_state(PumpConfig{0.0, 1.0}, 0.7);
    CHECK_THAT(std::abs(sv.amp_vv()), WithinAbs(1.0, 1e-15));
    CHECK(sv.amp_hh() == std::complex<double>(0.0));
}

TEST_CASE("state normalization", "[state]") {
    SECTION("constructor rejects non-unit amplitudes") {
        CHECK_THROWS_AS(TwoPhotonState(0.5, 0.5, 0.5, 0.6), invalid_config);
        CHECK_THROWS_AS(TwoPhotonState(1.0, 1.0, 0.0, 0.0), invalid_config);
    }
    SECTION("normalized() rescales and preserves ratios") {
        TwoPhotonState st = TwoPhotonState::normalized(3.0, 0.0, 0.0, 4.0);
        CHECK_THAT(st.norm2(), WithinAbs(1.0, 1e-14));
        CHECK_THAT(st.amp_hh().real(), WithinAbs(0.6, 1e-14));
        CHECK_THAT(st.amp_vv().real(), WithinAbs(0.8, 1e-14));
    }
    SECTION("normalized() rejects the zero vector and non-finite input") {
        CHECK_THROWS_AS(TwoPhotonState::normalized(0.0, 0.0, 0.0, 0.0), invalid_config);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(TwoPhotonState::normalized(nan, 0.0, 0.0, 1.0), invalid_config);
    }
    SECTION("random states from normalized() satisfy the norm invariant") {
        std::mt19937_64 g(0x5eed0011);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int i = 0; i < 100; ++i) {
            TwoPhotonState st = TwoPhotonState::normalized(
                {u(g), u(g)}, {u(g), u(g)}, {u(g), u(g)}, {u(g), u(g)});
            CHECK_THAT(st.norm2(), WithinAbs(1.0, 1e-13));
        }
    }
}

TEST_CASE("pump validation happens before state construction", "[state]") {
    CHECK_THROWS_AS(build_output_state(PumpConfig{0.8, 0.7}, 0.0), invalid_config);
    CHECK_THROWS_AS(build_output_state(PumpConfig{-0.6, 0.8}, 0.0), invalid_config);
}

TEST_CASE("named states", "[state]") {
    TwoPhotonState bell = TwoPhotonState::phi_plus();
    CHECK_THAT(bell.amp_hh().real(), WithinAbs(kInvSqrt2, 1e-15));
    CHECK_THAT(bell.amp_vv().real(), WithinAbs(kInvSqrt2, 1e-15));
    CHECK_THAT(bell.norm2(), WithinAbs(1.0, 1e-13));
    CHECK(TwoPhotonState::product_hh().amp_hh() == std::complex<double>(1.0));
    CHECK(TwoPhotonState::product_vv().amp_vv() == std::complex<double>(1.0));
}
