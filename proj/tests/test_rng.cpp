#include <catch2/catch_amalgamated.hpp>

#include <loopsim/rng.hpp>

#include <cmath>
#include <set>

using namespace loopsim;

TEST_CASE("draws reproduce the published SplitMix64 sequence", "[rng]") {
    // Reference outputs for seed 0 from the original splitmix64.c.
    CHECK(rng::bits_at(0, 0) == 0xe220a8397b1dcdafull);
    CHECK(rng::bits_at(0, 1) == 0x6e789e6aa1b965f4ull);
    CHECK(rng::bits_at(0, 2) == 0x06c45d188009454full);
}

TEST_CASE("unit mapping lands on the 2^-53 grid in [0, 1)", "[rng]") {
    CHECK(rng::to_unit(0) == 0.0);
    CHECK(rng::to_unit(~0ull) == 1.0 - 0x1.0p-53);
    for (uint64_t k = 0; k < 1000; ++k) {
        const double u = rng::to_unit(rng::bits_at(42, k));
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(u * 0x1.0p53 == std::floor(u * 0x1.0p53));
    }
}

TEST_CASE("streams are pure functions of their coordinates", "[rng]") {
    rng::Stream a = rng::gate_stream(7, 123456789);
    rng::Stream b = rng::gate_stream(7, 123456789);
    for (int k = 0; k < 16; ++k) CHECK(a.next_bits() == b.next_bits());

    CHECK(rng::gate_stream(7, 1).base != rng::gate_stream(7, 2).base);
    CHECK(rng::gate_stream(7, 1).base != rng::gate_stream(8, 1).base);
    CHECK(rng::gate_stream(7, 1).base != rng::skip_stream(7, 1).base);
}

TEST_CASE("child seeds are distinct and decorrelated from the parent", "[rng]") {
    std::set<uint64_t> seen;
    seen.insert(99);
    for (uint64_t i = 0; i < 1000; ++i)
        CHECK(seen.insert(rng::child_seed(99, i)).second);
}

TEST_CASE("uniform moments", "[rng]") {
    const int n = 1 << 20;
    rng::Stream s = rng::gate_stream(0xABCDEF, 0);
    double sum = 0.0, sum2 = 0.0, lag = 0.0, prev = 0.0;
    for (int k = 0; k < n; ++k) {
        const double u = s.next_unit();
        sum += u;
        sum2 += u * u;
        if (k > 0) lag += (prev - 0.5) * (u - 0.5);
        prev = u;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    // mean sigma = 1/sqrt(12 n); allow 6 sigma
    CHECK(std::fabs(mean - 0.5) < 6.0 / std::sqrt(12.0 * n));
    CHECK(std::fabs(var - 1.0 / 12.0) < 6.0 * 0.0745 / std::sqrt((double)n));
    // lag-1 covariance of independent uniforms: mean 0, sigma = (1/12)/sqrt(n)
    CHECK(std::fabs(lag / n) < 6.0 / (12.0 * std::sqrt((double)n)));
}
