#include "fpl/ddouble.hpp"

#include <cmath>

namespace fpl {

namespace {

constexpr DoubleDouble kLn2{6.931471805599452862e-01, 2.319046813846299558e-17};
constexpr double kPhaseSwitch = 65536.0;  // 2^16: keeps the plain path within ~1e-11 of a turn

double frac_of(DoubleDouble x) noexcept {
    const double f = std::floor(x.hi);
    DoubleDouble r = x - DoubleDouble(f);
    double v = r.hi + r.lo;
    v -= std::floor(v);
    if (v >= 1.0) v = 0.0;
    return v;
}

}  // namespace

DoubleDouble dd_exp(DoubleDouble x) noexcept {
    if (x.hi == 0.0) return DoubleDouble(1.0);
    const double k = std::nearbyint(x.hi / kLn2.hi);
    DoubleDouble r = x - kLn2 * DoubleDouble(k);
    constexpr int kHalvings = 10;
    r = ldexp(r, -kHalvings);

    // Taylor series of exp(r) - 1, |r| < 2^-10 * ln2 / 2.
    DoubleDouble term = r;
    DoubleDouble sum = r;
    for (int i = 2; i <= 12; ++i) {
        term = term * r / DoubleDouble(static_cast<double>(i));
        sum = sum + term;
        if (std::abs(term.hi) < 1e-36) break;
    }
    // (1 + s)^2 - 1 = s * (2 + s), repeated.
    for (int i = 0; i < kHalvings; ++i) sum = sum * (DoubleDouble(2.0) + sum);
    sum = sum + DoubleDouble(1.0);
    return ldexp(sum, static_cast<int>(k));
}

DoubleDouble dd_log(DoubleDouble x) noexcept {
    // Newton on exp(y) = x:  y <- y + x * exp(-y) - 1
    DoubleDouble y(std::log(x.hi));
    for (int i = 0; i < 2; ++i) y = y + x * dd_exp(-y) - DoubleDouble(1.0);
    return y;
}

double power_phase_frac_dd(std::int64_t scale, std::uint64_t n, double exponent) noexcept {
    if (n == 0 || scale == 0) return 0.0;
    const DoubleDouble pw = dd_exp(DoubleDouble(exponent) * dd_log(dd_from_u64(n)));
    DoubleDouble phase = pw * DoubleDouble(static_cast<double>(scale));
    return frac_of(phase);
}

double power_phase_frac(std::int64_t scale, std::uint64_t n, double exponent) noexcept {
    if (n == 0 || scale == 0) return 0.0;
    const double pw = std::pow(static_cast<double>(n), exponent);
    const double phase = static_cast<double>(scale) * pw;
    if (std::abs(phase) > kPhaseSwitch) return power_phase_frac_dd(scale, n, exponent);
    double f = phase - std::floor(phase);
    if (f >= 1.0) f = 0.0;
    return f;
}

}  // namespace fpl
