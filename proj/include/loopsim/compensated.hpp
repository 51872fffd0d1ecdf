#pragma once

#include <cmath>

#include "loopsim/constants.hpp"

// Double-double (compensated) arithmetic for phase accumulation.
//
// Optical path phases here are of order k*L ~ 1.5e10 rad while the physics
// lives in their residues mod 2*pi, so plain double sums lose the residue
// entirely (ulp at 1.5e10 is ~2e-6 rad). Every phase in this library is
// accumulated as an unevaluated hi+lo pair and reduced mod 2*pi at operation
// boundaries; the reduction error is ~1e-22 rad.

namespace loopsim::dd {

struct Dd {
    double hi = 0.0;
    double lo = 0.0;
};

/// Error-free sum: hi+lo == a+b exactly (Knuth two-sum).
inline Dd two_sum(double a, double b) {
    double s = a + b;
    double bb = s - a;
    double err = (a - (s - bb)) + (b - bb);
    return {s, err};
}

/// Error-free product: hi+lo == a*b exactly (fma split).
inline Dd two_prod(double a, double b) {
    double p = a * b;
    double err = std::fma(a, b, -p);
    return {p, err};
}

inline Dd renorm(double hi, double lo) {
    Dd s = two_sum(hi, lo);
    return s;
}

inline Dd add(const Dd& a, const Dd& b) {
    Dd s = two_sum(a.hi, b.hi);
    double lo = s.lo + a.lo + b.lo;
    return renorm(s.hi, lo);
}

inline Dd add(const Dd& a, double b) {
    Dd s = two_sum(a.hi, b);
    return renorm(s.hi, s.lo + a.lo);
}

inline Dd sub(const Dd& a, const Dd& b) {
    return add(a, Dd{-b.hi, -b.lo});
}

inline Dd neg(const Dd& a) { return {-a.hi, -a.lo}; }

/// a*b with a a plain double and b a double-double.
inline Dd mul(double a, const Dd& b) {
    Dd p = two_prod(a, b.hi);
    return renorm(p.hi, p.lo + a * b.lo);
}

/// Full product of two double-doubles (lo*lo term dropped).
inline Dd mul(const Dd& a, const Dd& b) {
    Dd p = two_prod(a.hi, b.hi);
    return renorm(p.hi, p.lo + a.hi * b.lo + a.lo * b.hi);
}

inline Dd div(const Dd& a, double b) {
    double q1 = a.hi / b;
    double r = std::fma(-q1, b, a.hi) + a.lo;
    return renorm(q1, r / b);
}

inline double value(const Dd& a) { return a.hi + a.lo; }

/// 2*pi to ~32 significant digits.
inline constexpr Dd kTwoPiDd{6.283185307179586232e+00, 2.449293598294706414e-16};
/// pi to ~32 significant digits.
inline constexpr Dd kPiDd{3.141592653589793116e+00, 1.224646799147353207e-16};

inline bool greater(const Dd& a, const Dd& b) {
    if (a.hi != b.hi) return a.hi > b.hi;
    return a.lo > b.lo;
}

/// Reduce a into (-pi, pi]; exact for |a| up to ~1e15 rad.
inline double wrap_pi(Dd a) {
    double n = std::rint(a.hi / kTwoPi);
    if (n != 0.0) {
        Dd m = mul(n, kTwoPiDd);
        a = sub(a, m);
    }
    // One ulp of slack can remain after the division-based guess.
    while (greater(a, kPiDd)) a = sub(a, kTwoPiDd);
    while (!greater(a, neg(kPiDd))) a = add(a, kTwoPiDd);
    return value(a);
}

inline double wrap_pi(double a) { return wrap_pi(Dd{a, 0.0}); }

} // namespace loopsim::dd
