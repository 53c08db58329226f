#include <cmath>
#include <complex>
#include <random>

extern "C" {
#include <quadmath.h>
}

#include "doctest.h"
#include "fpl/ddouble.hpp"
#include "fpl/error.hpp"
#include "fpl/numdiff.hpp"

using namespace fpl;

namespace {

// Circular distance between two fractional parts, in turns.
double turn_distance(double a, double b) {
    const double d = std::abs(a - b);
    return std::min(d, 1.0 - d);
}

double quad_phase_frac(std::int64_t h, std::uint64_t n, double alpha) {
    const __float128 phase = static_cast<__float128>(h) * powq(static_cast<__float128>(n), static_cast<__float128>(alpha));
    return static_cast<double>(phase - floorq(phase));
}

}  // namespace

TEST_CASE("double-double arithmetic against quad precision") {
    const DoubleDouble third = DoubleDouble(1.0) / DoubleDouble(3.0);
    const __float128 q = static_cast<__float128>(third.hi) + static_cast<__float128>(third.lo);
    CHECK(static_cast<double>(fabsq(q - 1.0Q / 3.0Q)) < 1e-31);

    for (double x : {-5.0, -0.3, 0.7, 1.0, 12.5, 40.0}) {
        const DoubleDouble e = dd_exp(DoubleDouble(x));
        const __float128 ref = expq(static_cast<__float128>(x));
        const __float128 got = static_cast<__float128>(e.hi) + static_cast<__float128>(e.lo);
        CHECK(static_cast<double>(fabsq(got / ref - 1.0Q)) < 1e-30);
    }
    for (std::uint64_t n : {2ull, 3ull, 1000003ull, (1ull << 48) - 59}) {
        const DoubleDouble l = dd_log(dd_from_u64(n));
        const __float128 ref = logq(static_cast<__float128>(n));
        const __float128 got = static_cast<__float128>(l.hi) + static_cast<__float128>(l.lo);
        CHECK(static_cast<double>(fabsq(got - ref)) < 1e-29);
    }
}

TEST_CASE("dd_from_u64 is exact above 2^53") {
    const std::uint64_t n = (1ull << 60) + 12345;
    const DoubleDouble d = dd_from_u64(n);
    const __float128 got = static_cast<__float128>(d.hi) + static_cast<__float128>(d.lo);
    CHECK(got == static_cast<__float128>(n));
}

TEST_CASE("power phase within 1e-10 turns on 10^4 random inputs") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> alpha_dist(1e-6, 1.0 - 1e-6);
    double worst = 0.0;
    for (int i = 0; i < 10'000; ++i) {
        const std::uint64_t n = 1 + rng() % (1ull << 48);
        const std::int64_t h = static_cast<std::int64_t>(rng() % 20'001) - 10'000;
        const double alpha = alpha_dist(rng);
        const double ref = quad_phase_frac(h, n, alpha);
        worst = std::max(worst, turn_distance(power_phase_frac(h, n, alpha), ref));
        worst = std::max(worst, turn_distance(power_phase_frac_dd(h, n, alpha), ref));
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("power phase small arguments") {
    CHECK(power_phase_frac(1, 4, 0.5) == 0.0);
    CHECK(power_phase_frac(3, 1, 0.3) == 0.0);
    CHECK(turn_distance(power_phase_frac(1, 2, 0.5), std::sqrt(2.0) - 1.0) < 1e-15);
    CHECK(turn_distance(power_phase_frac(-1, 2, 0.5), 2.0 - std::sqrt(2.0)) < 1e-15);
    CHECK(power_phase_frac(0, 17, 0.5) == 0.0);
}

TEST_CASE("central stencils") {
    const auto d1 = central_stencil(1, 1);
    CHECK(d1[0] == doctest::Approx(-0.5));
    CHECK(d1[1] == doctest::Approx(0.0));
    CHECK(d1[2] == doctest::Approx(0.5));
    const auto d2 = central_stencil(2, 1);
    CHECK(d2[0] == doctest::Approx(1.0));
    CHECK(d2[1] == doctest::Approx(-2.0));
    CHECK(d2[2] == doctest::Approx(1.0));
    const auto d4 = central_stencil(4, 2);
    const double want[] = {1, -4, 6, -4, 1};
    for (int i = 0; i < 5; ++i) CHECK(d4[i] == doctest::Approx(want[i]));
    // weights annihilate constants for every positive order
    for (int order = 1; order <= 6; ++order) {
        double s = 0.0;
        for (double c : central_stencil(order, minimal_half_width(order))) s += c;
        CHECK(std::abs(s) < 1e-12);
    }
    CHECK_THROWS_AS(central_stencil(3, 1), Error);
}

TEST_CASE("richardson derivative of sin up to order 6") {
    auto f = [](double t) { return std::sin(t); };
    const double x = 0.7;
    for (int j = 0; j <= 6; ++j) {
        double exact = 0.0;
        switch (j % 4) {
            case 0: exact = std::sin(x); break;
            case 1: exact = std::cos(x); break;
            case 2: exact = -std::sin(x); break;
            case 3: exact = -std::cos(x); break;
        }
        const auto est = richardson_derivative(f, x, j, 0.4, 4);
        CHECK(std::abs(est.value - exact) < 1e-6);
    }
}

TEST_CASE("richardson derivative of a complex exponential") {
    auto f = [](double t) { return std::exp(std::complex<double>(0.0, 3.0 * t)); };
    const auto est = richardson_derivative(f, 0.2, 2, 0.1, 4);
    const std::complex<double> exact = -9.0 * std::exp(std::complex<double>(0.0, 0.6));
    CHECK(std::abs(est.value - exact) < 1e-7);
}
