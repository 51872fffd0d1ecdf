#include <catch2/catch_amalgamated.hpp>

#include <loopsim/phase.hpp>

#include <random>

#include "oracle_f128.hpp"

using namespace loopsim;
using Catch::Matchers::WithinAbs;

namespace {

struct Uni {
    std::mt19937_64 g;
    explicit Uni(uint64_t seed) : g(seed) {}
    double operator()(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(g);
    }
};

// Random loop in the regime the library targets: km-scale fiber, telecom
// wavelengths, weak birefringence.
LoopConfig random_loop(Uni& u, bool with_split) {
    const double L = u(1.0, 5000.0);
    const double lam_p = u(1.2e-6, 1.8e-6);
    const double lam_s = lam_p * (1.0 + u(-2e-3, 2e-3));
    const double dn = with_split ? u(0.0, 1e-5) : 0.0;
    return make_loop(L, u(0.0, 1.0) * L, lam_p, lam_s, u(1.3, 1.7), dn, u(-10.0, 10.0));
}

double wrapped(oracle::f128 v) { return (double)oracle::wrap_q(v); }

} // namespace

TEST_CASE("phase ledger reproduces reference values", "[phase]") {
    // Degenerate 1551 nm pump in a 2.5 km loop, no birefringence, pair
    // created 1 km in. Values frozen from a 60-digit evaluation.
    LoopConfig loop = make_loop(2500.0, 1000.0, 1551e-9, 1551e-9, 1.468, 0.0, 0.0);
    REQUIRE(loop.spectral.k_ph == 0x1.6af90f2eabaffp+22);

    PhaseLedger led = phase_ledger(loop);
    const double pump_h = -0.1539405715126232142015;
    const double pump_v = -0.2309108572689348213022;
    const double out = -0.3848514287815580355036;

    CHECK_THAT(led.pump_h, WithinAbs(pump_h, 1e-12));
    CHECK_THAT(led.pump_v, WithinAbs(pump_v, 1e-12));
    // Equal split: each photon inherits exactly the pump phase.
    CHECK_THAT(led.signal_h, WithinAbs(pump_h, 1e-12));
    CHECK_THAT(led.idler_h, WithinAbs(pump_h, 1e-12));
    CHECK_THAT(led.signal_v, WithinAbs(pump_v, 1e-12));
    CHECK_THAT(led.idler_v, WithinAbs(pump_v, 1e-12));
    // Every output phase is k*L regardless of polarization here.
    CHECK_THAT(led.out_signal_h, WithinAbs(out, 1e-12));
    CHECK_THAT(led.out_idler_h, WithinAbs(out, 1e-12));
    CHECK_THAT(led.out_signal_v, WithinAbs(out, 1e-12));
    CHECK_THAT(led.out_idler_v, WithinAbs(out, 1e-12));
    CHECK(led.out_signal_h == led.out_idler_h);

    led.validate();
}

TEST_CASE("ledger matches a quad-precision evaluation on random configs", "[phase]") {
    Uni u(0x5eed0001);
    for (int i = 0; i < 200; ++i) {
        LoopConfig loop = random_loop(u, i % 2 == 0);
        const double share = u(0.0, 1.0);
        PhaseLedger led = phase_ledger(loop, PhaseSplitRule{share});
        REQUIRE_NOTHROW(led.validate());

        oracle::LedgerQ q = oracle::raw_ledger(loop, share);
        CHECK(oracle::circ_dist(led.pump_h, wrapped(q.pump_h)) < 1e-10);
        CHECK(oracle::circ_dist(led.pump_v, wrapped(q.pump_v)) < 1e-10);
        CHECK(oracle::circ_dist(led.signal_h, wrapped(q.signal_h)) < 1e-10);
        CHECK(oracle::circ_dist(led.signal_v, wrapped(q.signal_v)) < 1e-10);
        CHECK(oracle::circ_dist(led.idler_h, wrapped(q.idler_h)) < 1e-10);
        CHECK(oracle::circ_dist(led.idler_v, wrapped(q.idler_v)) < 1e-10);
        CHECK(oracle::circ_dist(led.out_signal_h, wrapped(q.out_signal_h)) < 1e-10);
        CHECK(oracle::circ_dist(led.out_signal_v, wrapped(q.out_signal_v)) < 1e-10);
        CHECK(oracle::circ_dist(led.out_idler_h, wrapped(q.out_idler_h)) < 1e-10);
        CHECK(oracle::circ_dist(led.out_idler_v, wrapped(q.out_idler_v)) < 1e-10);

        CHECK(std::fabs(PhaseLedger::sum_rule_residue(led.signal_h, led.idler_h, led.pump_h)) < 1e-9);
        CHECK(std::fabs(PhaseLedger::sum_rule_residue(led.signal_v, led.idler_v, led.pump_v)) < 1e-9);
    }
}

TEST_CASE("split rule moves phase between the photons, not out of the pair", "[phase]") {
    Uni u(0x5eed0002);
    for (int i = 0; i < 50; ++i) {
        LoopConfig loop = random_loop(u, true);
        PhaseLedger a = phase_ledger(loop, PhaseSplitRule{0.3});
        PhaseLedger b = phase_ledger(loop, PhaseSplitRule{0.7});
        // Only the per-axis output sums are physical; they must not depend
        // on how the doubled pump phase was apportioned.
        const double sum_ah = oracle::wrap(a.out_signal_h + a.out_idler_h);
        const double sum_bh = oracle::wrap(b.out_signal_h + b.out_idler_h);
        const double sum_av = oracle::wrap(a.out_signal_v + a.out_idler_v);
        const double sum_bv = oracle::wrap(b.out_signal_v + b.out_idler_v);
        CHECK(oracle::circ_dist(sum_ah, sum_bh) < 1e-10);
        CHECK(oracle::circ_dist(sum_av, sum_bv) < 1e-10);
    }
}

TEST_CASE("relative phase agrees with the output-phase route", "[phase]") {
    Uni u(0x5eed0003);
    for (int i = 0; i < 200; ++i) {
        LoopConfig loop = random_loop(u, i % 2 == 0);
        if (i % 3 == 0) {
            // Also exercise imperfect phase matching: detune signal/idler off
            // the matched lattice so the delta_k terms are nonzero.
            const double q = detail::lattice_quantum(loop.spectral.k_ph);
            loop.spectral.k_sh += q * std::floor(u(-3.0, 4.0));
            loop.spectral.k_sv += q * std::floor(u(-3.0, 4.0));
        }
        const double phi = relative_phase_full(loop);
        const double ref = oracle::relative_phase(loop);
        CHECK(oracle::circ_dist(phi, ref) < 1e-10);
    }
}

TEST_CASE("relative phase is independent of the generation point when matched", "[phase]") {
    Uni u(0x5eed0004);
    for (int i = 0; i < 50; ++i) {
        LoopConfig loop = random_loop(u, true);
        loop.x_m = 0.0;
        const double ref = relative_phase_full(loop);
        for (int j = 1; j <= 8; ++j) {
            loop.x_m = (j == 8) ? loop.length_m : u(0.0, 1.0) * loop.length_m;
            CHECK(oracle::circ_dist(relative_phase_full(loop), ref) < 1e-12);
        }
    }
}

TEST_CASE("reduced relative phase", "[phase]") {
    SECTION("agrees with the full expression when phase matched") {
        Uni u(0x5eed0005);
        for (int i = 0; i < 100; ++i) {
            LoopConfig loop = random_loop(u, true);
            const double full = relative_phase_full(loop);
            const double red = relative_phase_reduced(loop);
            CHECK(oracle::circ_dist(full, red) < 1e-9);
        }
    }
    SECTION("reference values, 2.5 km loop with delta_n = 1e-6") {
        LoopConfig loop = make_loop(2500.0, 777.5, 1551e-9, 1552.7e-9, 1.468, 1e-6, kPi / 4.0);
        // The stored split snaps to the float lattice; both frozen from a
        // 60-digit evaluation of the respective expressions.
        REQUIRE(loop.spectral.pump_k_split() == 0x1.0344797e00000p+2);
        REQUIRE(loop.delta_n == 0x1.0c6f7a0b53655p-20);
        CHECK_THAT(relative_phase_full(loop), WithinAbs(-0.1468509216134519851607, 1e-12));
        CHECK_THAT(relative_phase_reduced(loop), WithinAbs(-0.1468509216132630526652, 1e-12));
    }
    SECTION("half-wave birefringence lands on pi") {
        const double om = phase_matched_spectral(1551e-9, 1551e-9, 1.468, 0.0).omega_p;
        const double dn = kLightSpeed * kPi / (2.0 * om * 2500.0);
        LoopConfig loop = make_loop(2500.0, 1000.0, 1551e-9, 1551e-9, 1.468, dn, 0.0);
        const double red = relative_phase_reduced(loop);
        // Lattice snapping shifts such a tiny delta_n by a relative 1.7e-7,
        // so pi is only reached to ~5e-7.
        CHECK(oracle::circ_dist(red, kPi) < 1e-5);
        CHECK_THAT(red, WithinAbs(-3.141592119132177570887, 1e-12));
        CHECK_THAT(relative_phase_full(loop), WithinAbs(-3.141592119132177570887, 1e-11));
    }
    SECTION("rejects spectra that are not phase matched") {
        LoopConfig loop = make_loop(2500.0, 777.5, 1551e-9, 1552.7e-9, 1.468, 1e-6, 0.0);
        loop.spectral.k_sh += detail::lattice_quantum(loop.spectral.k_ph);
        CHECK_THROWS_AS(relative_phase_reduced(loop), precondition_error);
        CHECK_NOTHROW(relative_phase_full(loop));
    }
}

TEST_CASE("pi/2 pump offset alone gives an antisymmetric pair phase", "[phase]") {
    // With no birefringence phi_r = 2*varphi exactly, for any geometry.
    Uni u(0x5eed0006);
    for (int i = 0; i < 20; ++i) {
        LoopConfig loop = random_loop(u, false);
        loop.varphi = kPi / 2.0;
        CHECK(oracle::circ_dist(relative_phase_full(loop), kPi) < 1e-12);
        loop.varphi = 0.25;
        CHECK_THAT(relative_phase_full(loop), WithinAbs(0.5, 1e-12));
    }
}

TEST_CASE("compensated wrap matches quad precision on large phases", "[phase]") {
    Uni u(0x5eed0007);
    for (int i = 0; i < 500; ++i) {
        const double k = u(1e6, 1e7);
        const double x = u(0.0, 1e5); // up to 1e12 rad
        dd::Dd p = dd::two_prod(k, x);
        const double w = dd::wrap_pi(p);
        const double ref = (double)oracle::wrap_q(oracle::f128(k) * oracle::f128(x));
        CHECK(oracle::circ_dist(w, ref) < 1e-10);
        CHECK(w <= kPi + 1e-15);
        CHECK(w > -kPi - 1e-15);
    }
    CHECK(dd::wrap_pi(dd::Dd{0.0, 0.0}) == 0.0);
    CHECK(dd::wrap_pi(dd::Dd{kPi, 0.0}) == kPi);
    CHECK(dd::wrap_pi(dd::Dd{-kPi, 0.0}) == -kPi);
}

TEST_CASE("configuration validation", "[phase][config]") {
    SECTION("loop geometry") {
        CHECK_THROWS_AS(make_loop(2500.0, 2600.0, 1551e-9, 1551e-9, 1.468, 0.0, 0.0),
                        invalid_config);
        CHECK_THROWS_AS(make_loop(-1.0, 0.0, 1551e-9, 1551e-9, 1.468, 0.0, 0.0),
                        invalid_config);
        CHECK_THROWS_AS(make_loop(2500.0, 0.0, 1551e-9, 1551e-9, 1.468, 2e-3, 0.0),
                        invalid_config);
    }
    SECTION("spectral inputs") {
        CHECK_THROWS_AS(phase_matched_spectral(-1551e-9, 1551e-9, 1.468, 0.0), invalid_config);
        CHECK_THROWS_AS(phase_matched_spectral(1551e-9, 1551e-9, 1.468, -1e-6), invalid_config);
        SpectralConfig s = phase_matched_spectral(1551e-9, 1552.7e-9, 1.468, 0.0);
        s.omega_s *= 1.0001; // breaks energy conservation
        CHECK_THROWS_AS(s.validate(), invalid_config);
    }
    SECTION("pump split") {
        CHECK_THROWS_AS((PumpConfig{0.5, 0.5}.validate()), invalid_config);
        CHECK_THROWS_AS((PumpConfig{-0.6, 0.8}.validate()), invalid_config);
        CHECK_NOTHROW((PumpConfig{0.6, 0.8}.validate()));
    }
    SECTION("split rule") {
        LoopConfig loop = make_loop(2500.0, 1000.0, 1551e-9, 1551e-9, 1.468, 0.0, 0.0);
        CHECK_THROWS_AS(phase_ledger(loop, PhaseSplitRule{1.5}), invalid_config);
        CHECK_THROWS_AS(phase_ledger(loop, PhaseSplitRule{-0.1}), invalid_config);
    }
    SECTION("ledger invariants") {
        PhaseLedger led; // all zero: consistent
        CHECK_NOTHROW(led.validate());
        led.signal_h = 0.5; // breaks the sum rule
        CHECK_THROWS_AS(led.validate(), invalid_config);
        led = PhaseLedger{};
        led.pump_v = 4.0; // not reduced
        CHECK_THROWS_AS(led.validate(), invalid_config);
    }
}
