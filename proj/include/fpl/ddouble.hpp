#pragma once

#include <cmath>
#include <cstdint>

namespace fpl {

// Unevaluated sum hi + lo with |lo| <= ulp(hi)/2; about 106 bits of mantissa.
struct DoubleDouble {
    double hi = 0.0;
    double lo = 0.0;

    constexpr DoubleDouble() = default;
    constexpr DoubleDouble(double h) : hi(h), lo(0.0) {}
    constexpr DoubleDouble(double h, double l) : hi(h), lo(l) {}

    double to_double() const noexcept { return hi + lo; }
};

namespace dd_detail {

inline DoubleDouble two_sum(double a, double b) noexcept {
    const double s = a + b;
    const double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

inline DoubleDouble quick_two_sum(double a, double b) noexcept {
    const double s = a + b;
    return {s, b - (s - a)};
}

inline DoubleDouble two_prod(double a, double b) noexcept {
    const double p = a * b;
    return {p, std::fma(a, b, -p)};
}

}  // namespace dd_detail

inline DoubleDouble operator+(DoubleDouble a, DoubleDouble b) noexcept {
    DoubleDouble s = dd_detail::two_sum(a.hi, b.hi);
    DoubleDouble t = dd_detail::two_sum(a.lo, b.lo);
    s.lo += t.hi;
    s = dd_detail::quick_two_sum(s.hi, s.lo);
    s.lo += t.lo;
    return dd_detail::quick_two_sum(s.hi, s.lo);
}

inline DoubleDouble operator-(DoubleDouble a) noexcept { return {-a.hi, -a.lo}; }
inline DoubleDouble operator-(DoubleDouble a, DoubleDouble b) noexcept { return a + (-b); }

inline DoubleDouble operator*(DoubleDouble a, DoubleDouble b) noexcept {
    DoubleDouble p = dd_detail::two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return dd_detail::quick_two_sum(p.hi, p.lo);
}

inline DoubleDouble operator/(DoubleDouble a, DoubleDouble b) noexcept {
    const double q1 = a.hi / b.hi;
    DoubleDouble r = a - b * DoubleDouble(q1);
    const double q2 = r.hi / b.hi;
    r = r - b * DoubleDouble(q2);
    const double q3 = r.hi / b.hi;
    return dd_detail::quick_two_sum(q1, q2) + DoubleDouble(q3);
}

inline DoubleDouble ldexp(DoubleDouble a, int e) noexcept { return {std::ldexp(a.hi, e), std::ldexp(a.lo, e)}; }

DoubleDouble dd_exp(DoubleDouble x) noexcept;
DoubleDouble dd_log(DoubleDouble x) noexcept;  // x > 0

// Exact conversion of a 64-bit integer into double-double.
inline DoubleDouble dd_from_u64(std::uint64_t n) noexcept {
    const double hi = static_cast<double>(n);
    const auto back = static_cast<std::int64_t>(n - static_cast<std::uint64_t>(hi));
    return dd_detail::quick_two_sum(hi, static_cast<double>(back));
}

// frac(scale * n^exponent) in [0, 1). Plain double arithmetic while the phase
// stays below 2^16, double-double above: past that the integer part of the
// phase eats enough mantissa to cost more than 1e-11 of a turn.
double power_phase_frac(std::int64_t scale, std::uint64_t n, double exponent) noexcept;

// The double-double route, always (exposed for testing).
double power_phase_frac_dd(std::int64_t scale, std::uint64_t n, double exponent) noexcept;

}  // namespace fpl
