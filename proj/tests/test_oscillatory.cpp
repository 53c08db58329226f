#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "doctest.h"
#include "fpl/charkloost.hpp"
#include "fpl/error.hpp"
#include "fpl/oscillatory.hpp"

using namespace fpl;

namespace {

constexpr double kPi = std::numbers::pi;
using ld = long double;
using lcplx = std::complex<long double>;

template <typename E>
ErrorKind kind_of(E&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an fpl::Error");
    return ErrorKind::io;
}

// Central differences of order 1..4 in long double, one Richardson step.
template <typename F>
auto fd(const F& f, ld x, int order, ld h) {
    auto raw = [&](ld s) {
        switch (order) {
        case 1: return (f(x + s) - f(x - s)) / (2 * s);
        case 2: return (f(x + s) - ld(2) * f(x) + f(x - s)) / (s * s);
        case 3: return (f(x + 2 * s) - ld(2) * f(x + s) + ld(2) * f(x - s) - f(x - 2 * s)) / (2 * s * s * s);
        default:
            return (f(x + 2 * s) - ld(4) * f(x + s) + ld(6) * f(x) - ld(4) * f(x - s) + f(x - 2 * s)) /
                   (s * s * s * s);
        }
    };
    return (ld(4) * raw(h / 2) - raw(h)) / ld(3);
}

cplx e_of(double x) { return std::polar(1.0, 2.0 * kPi * x); }

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// GSL adaptive quadrature of a real function on [a, b].
template <typename F>
double gsl_integrate(const F& f, double a, double b, double epsabs) {
    gsl_set_error_handler_off();
    gsl_integration_workspace* ws = gsl_integration_workspace_alloc(20000);
    gsl_function gf;
    gf.function = [](double x, void* p) { return (*static_cast<const F*>(p))(x); };
    gf.params = const_cast<F*>(&f);
    double result = 0.0, err = 0.0;
    const int status = gsl_integration_qag(&gf, a, b, epsabs, 0.0, 20000, GSL_INTEG_GAUSS61, ws, &result, &err);
    gsl_integration_workspace_free(ws);
    REQUIRE(status == GSL_SUCCESS);
    return result;
}

// The example phase with stationary point t0 = 2.25.
FirstPhaseParams example_first() { return {1.0, 100.0, 0.5, 3.0, 1.0, 2.0, 5.0, 1.0}; }

}  // namespace

// ---------------------------------------------------------------------------

TEST_CASE("alpha_constants") {
    const AlphaConstants c = alpha_constants(0.1);
    CHECK(std::abs(c.beta - 19.0 / 9.0) <= 1e-15);
    CHECK(std::abs(c.gamma - 1.0 / 9.0) <= 1e-15);
    CHECK(std::abs(c.delta - 10.0 / 9.0) <= 1e-15);
    CHECK(std::abs(c.xi - 9.0 / 8.0) <= 1e-15);
    CHECK(std::abs(c.eta - 1.0 / 8.0) <= 1e-15);
    CHECK(std::abs(c.omega - 17.0 / 8.0) <= 1e-15);

    const AlphaConstants z = alpha_constants(1e-13);
    CHECK(std::abs(z.beta - 2.0) < 1e-12);
    CHECK(std::abs(z.gamma) < 1e-12);
    CHECK(std::abs(z.delta - 1.0) < 1e-12);
    CHECK(std::abs(z.xi - 1.0) < 1e-12);
    CHECK(std::abs(z.eta) < 1e-12);
    CHECK(std::abs(z.omega - 2.0) < 1e-12);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ua(0.001, 0.499);
    for (int i = 0; i < 1000; ++i) {
        const double a = i == 0 ? 0.07 : ua(rng);
        const AlphaConstants k = alpha_constants(a);
        // identities evaluated in long double so only the library's rounding counts
        const ld gm = ld(a) / (1 - ld(a));
        const ld xi = 1 / (1 - gm);
        CHECK(std::abs(k.xi - double(xi)) <= 1e-15 * k.xi);
        CHECK(std::abs(k.omega - double(xi * (2 - gm))) <= 1e-15 * k.omega);
    }
    CHECK(kind_of([] { alpha_constants(0.5); }) == ErrorKind::argument);
    CHECK(kind_of([] { alpha_constants(0.7); }) == ErrorKind::argument);
    CHECK(kind_of([] { alpha_constants(0.0); }) == ErrorKind::argument);
}

TEST_CASE("phase derivatives agree with long double differences") {
    const FirstPhaseParams fp{30.0, 1e4, 0.1, 5.0, 1.0, 2.0, 3.0, 7.0};
    const PhaseModel g1 = PhaseModel::first(fp);
    auto g1_ld = [&](ld t) {
        return ld(fp.h) * std::pow(ld(fp.x) * t, ld(fp.alpha)) - ld(fp.x) * ld(fp.s) * t / ld(30.0);
    };
    const SecondPhaseParams sp{40.0, 1e4, 0.1, 5.0, 1.0, 2.0, 1.0, 3.0};
    const PhaseModel g2 = PhaseModel::second(sp);
    auto g2_ld = [&](ld t) {
        const ld gamma = ld(0.1) / ld(0.9);
        return ld(0.9) * ld(40.0) * std::pow(ld(1e4), ld(0.1)) * std::pow(t, gamma) -
               std::pow(ld(1e4), ld(0.9)) * ld(3.0) * t / (ld(0.1) * ld(40.0) * ld(25.0) * ld(2.0));
    };
    for (double t : {0.95, 1.3, 1.7, 2.05}) {
        CHECK(rel(g1.value(t), double(g1_ld(t))) < 1e-13);
        CHECK(rel(g2.value(t), double(g2_ld(t))) < 1e-13);
        for (int k = 1; k <= 4; ++k) {
            const ld h = ld(0.02) * t;
            CHECK(rel(g1.derivative(t, k), double(fd(g1_ld, t, k, h))) < 1e-6);
            CHECK(rel(g2.derivative(t, k), double(fd(g2_ld, t, k, h))) < 1e-6);
        }
    }

    const PhaseModel poly = PhaseModel::polynomial({1.0, -2.0, 0.5, 3.0});
    CHECK(poly.value(2.0) == doctest::Approx(1.0 - 4.0 + 2.0 + 24.0));
    CHECK(poly.derivative(2.0, 1) == doctest::Approx(-2.0 + 2.0 + 36.0));
    CHECK(poly.derivative(2.0, 3) == doctest::Approx(18.0));
    CHECK(poly.derivative(2.0, 4) == 0.0);

    const PhaseModel gen = PhaseModel::generic([](double t) { return std::sin(t); }, 1.0);
    for (int k = 1; k <= 4; ++k) {
        const double exact = std::sin(0.7 + k * kPi / 2.0);
        CHECK(std::abs(gen.derivative(0.7, k) - exact) < 1e-6);
    }
    CHECK(kind_of([&] { gen.derivative(0.7, 5); }) == ErrorKind::unsupported);
    CHECK(std::string(to_string(g1.kind())) == "first-poisson");
}

// ---------------------------------------------------------------------------

TEST_CASE("quad_osc without oscillation integrates the window") {
    const BumpWindow b = make_bump(2.0, 0.1);
    const WindowModel w = bump_window_model(b);
    const OscIntegralResult r = quad_osc(w, PhaseModel::polynomial({0.0}), 0.0, 3.0, 1e-12);
    auto f = [&](double t) { return eval_bump(b, t); };
    const double oracle = gsl_integrate(f, 0.9, 1.0, 1e-13) + gsl_integrate(f, 1.0, 2.0, 1e-13) +
                          gsl_integrate(f, 2.0, 2.1, 1e-13);
    CHECK(r.value.real() > 0.0);
    CHECK(std::abs(r.value.imag()) < 1e-15);
    CHECK(std::abs(r.value.real() - oracle) < 1e-12);
    CHECK(r.method == OscMethod::quadrature);
}

TEST_CASE("quad_osc decays with the slope of a linear phase") {
    const WindowModel w = bump_window_model(make_bump(2.0, 0.1));
    // Integration by parts: |int w e(R t)| <= TV(w) / (2 pi R), TV = 2.
    double prev = 1e300;
    for (double r : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
        const double v = std::abs(quad_osc(w, PhaseModel::polynomial({0.0, r}), w.lo, w.hi, 1e-12).value);
        CHECK(v <= 2.0 / (2.0 * kPi * r));
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("quad_osc agrees with GSL on a first-phase integral") {
    const BumpWindow b = make_bump(2.0, 0.1);
    const WindowModel w = bump_window_model(b);
    for (double s : {0.0, 2.0, 5.0}) {
        const FirstPhaseParams p{50.0, 1e4, 0.1, 5.0, 1.0, 2.0, 3.0, s};
        const PhaseModel g = PhaseModel::first(p);
        const OscIntegralResult r = quad_osc(w, g, w.lo, w.hi, 1e-12);
        auto re = [&](double t) { return eval_bump(b, t) * std::cos(2.0 * kPi * g.value(t)); };
        auto im = [&](double t) { return eval_bump(b, t) * std::sin(2.0 * kPi * g.value(t)); };
        double ore = 0.0, oim = 0.0;
        for (auto [a, c] : {std::pair{0.9, 1.0}, {1.0, 2.0}, {2.0, 2.1}}) {
            ore += gsl_integrate(re, a, c, 1e-13);
            oim += gsl_integrate(im, a, c, 1e-13);
        }
        CHECK(std::abs(r.value - cplx(ore, oim)) < 1e-10);
        CHECK(r.error_estimate < 1e-9);
    }
}

TEST_CASE("quad_osc: halving tol moves the value by less than the error estimate") {
    const WindowModel bump = bump_window_model(make_bump(2.0, 0.1));
    const WindowModel plateau = plateau_window_model(-0.5, 0.5, 0.05);
    const std::vector<std::pair<const WindowModel*, PhaseModel>> cases{
        {&bump, PhaseModel::first({300.0, 1e4, 0.1, 5.0, 1.0, 2.0, 3.0, 4.0})},
        {&bump, PhaseModel::second({50.0, 1e4, 0.1, 5.0, 1.0, 2.0, 1.0, 2.0})},
        {&plateau, PhaseModel::polynomial({0.0, 3.0, -100.0})},
        {&plateau, PhaseModel::generic([](double t) { return 7.0 * std::cos(3.0 * t); }, 0.5)},
    };
    for (const auto& [w, g] : cases) {
        double tol = 1e-4;
        OscIntegralResult prev = quad_osc(*w, g, w->lo, w->hi, tol);
        while (tol > 2e-12) {
            tol /= 2.0;
            const OscIntegralResult cur = quad_osc(*w, g, w->lo, w->hi, tol);
            CHECK(std::abs(cur.value - prev.value) <= prev.error_estimate + 1e-15);
            prev = cur;
        }
    }
}

TEST_CASE("quad_osc errors") {
    const WindowModel w = bump_window_model(make_bump(2.0, 0.1));
    CHECK(kind_of([&] { quad_osc(w, PhaseModel::polynomial({0.0}), 0.0, 3.0, 1e-13); }) == ErrorKind::argument);
    CHECK(kind_of([&] { quad_osc(w, PhaseModel::polynomial({0.0}), 2.0, 1.0); }) == ErrorKind::argument);
    // Interval outside the support: zero, not an error.
    CHECK(quad_osc(w, PhaseModel::polynomial({0.0}), 5.0, 6.0).value == cplx(0.0, 0.0));

    // An unannounced jump cannot be resolved by bisection.
    WindowModel jump;
    jump.f = [](double t) { return t < 0.5 + 1e-3 * kPi ? 1.0 : 2.0; };
    jump.lo = 0.0;
    jump.hi = 1.0;
    try {
        quad_osc(jump, PhaseModel::polynomial({0.0}), 0.0, 1.0, 1e-12);
        FAIL("expected an accuracy error");
    } catch (const NumericError& e) {
        CHECK(e.kind() == ErrorKind::accuracy);
        CHECK(std::abs(e.best_re() - (1.5 - 1e-3 * kPi)) < 1e-6);
        CHECK(e.bound() > 0.0);
    }
}

// ---------------------------------------------------------------------------

TEST_CASE("lemma2_bound") {
    // Delta_1 = Q R / sqrt(Y) = 2, Delta_2 = R V = 2.
    CHECK(lemma2_bound(1.0, 1.0, 1.0, 1.0, 2.0, 10.0, 1.0) == doctest::Approx(2.0 * std::pow(2.0, -10.0)));
    CHECK(lemma2_bound(1.0, 1.0, 1.0, 1.0, 2.0, 10.0, 1.0) == doctest::Approx(1.953125e-3));
    CHECK(lemma2_bound(1.0, 1.0, 1.0, 1.0, 2.0, 10.0, 1.0, 3.0) == doctest::Approx(3.0 * 1.953125e-3));
    CHECK(lemma2_bound(2.0, 1.0, 1.0, 1.0, 2.0, 10.0, 0.5) == doctest::Approx(1.953125e-3));
    double prev = 1e300;
    for (double a = 1.0; a <= 20.0; a += 1.0) {
        const double v = lemma2_bound(1.0, 0.7, 4.0, 3.0, 2.5, a, 1.0);  // Delta_1 = 3.75, Delta_2 = 1.75
        CHECK(v < prev);
        prev = v;
    }
    CHECK(kind_of([] { lemma2_bound(1.0, 1.0, 0.5, 1.0, 2.0, 10.0, 1.0); }) == ErrorKind::argument);
    CHECK(kind_of([] { lemma2_bound(1.0, 1.0, 1.0, 1.0, 0.0, 10.0, 1.0); }) == ErrorKind::argument);
}

TEST_CASE("non-stationary branch: |g'| >= (alpha / 6) h X^alpha for -T2 <= s < T1") {
    const double alpha = 0.1, h = 1.0, x = 1e6;
    const BumpWindow b = make_bump(2.0, 0.1);
    for (auto [q, u, m, n] : {std::array{3.0, 1.0, 2.0, 5.0}, {7.0, 2.0, 3.0, 1.0}, {12.0, 1.0, 1.0, 1.0}}) {
        const TruncationWindows tw = truncation_windows({alpha, h, u, m, n, q, x, 1.0});
        const double yi = h * std::pow(x, alpha);
        for (int is = 0; is <= 40; ++is) {
            const double s = -tw.t2 + (tw.t1 + tw.t2) * is / 41.0;
            const PhaseModel g = PhaseModel::first({h, x, alpha, q, u, m, n, s});
            double rmin = 1e300;
            for (int i = 0; i <= 400; ++i) {
                const double t = (1.0 - b.delta) + (b.y - 1.0 + 2.0 * b.delta) * i / 400.0;
                rmin = std::min(rmin, std::abs(g.derivative(t, 1)));
            }
            CHECK(rmin >= alpha / 6.0 * yi);
            // Delta_1 = Q_I R_I / sqrt(Y_I) with Q_I = 1
            CHECK(rmin / std::sqrt(yi) >= alpha / 6.0 * std::pow(x, alpha / 2.0));
        }
    }
}

// ---------------------------------------------------------------------------

TEST_CASE("stationary_point closed forms") {
    const PhaseModel g = PhaseModel::first(example_first());
    const double t0 = stationary_point(g, 0.5, 3.0);
    CHECK(std::abs(t0 - 2.25) < 1e-14);
    // g'(t) = 5 / sqrt(t) - 10 / 3
    CHECK(std::abs(5.0 / std::sqrt(2.25) - 10.0 / 3.0) < 1e-15);
    CHECK(std::abs(g.derivative(t0, 1)) <= 1e-10 * std::abs(g.derivative(t0, 2)) * t0);

    // s = alpha h q u m n / X^(1 - alpha) puts t0 at 1.
    FirstPhaseParams p = example_first();
    p.s = 0.5 * 30.0 / 10.0;
    CHECK(std::abs(stationary_point(PhaseModel::first(p), 0.5, 3.0) - 1.0) < 1e-14);

    CHECK(std::abs(stationary_point(PhaseModel::polynomial({-4.0, 4.0, -1.0}), 0.0, 5.0) - 2.0) < 1e-10);
    const PhaseModel gq = PhaseModel::generic([](double t) { return -(t - 2.0) * (t - 2.0); }, 1.0);
    CHECK(std::abs(stationary_point(gq, 0.3, 4.1) - 2.0) < 1e-10);

    CHECK(kind_of([&] { stationary_point(g, 0.5, 2.0); }) == ErrorKind::not_found);
    p.s = -1.0;
    CHECK(kind_of([&] { stationary_point(PhaseModel::first(p), 0.5, 3.0); }) == ErrorKind::not_found);
    CHECK(kind_of([&] { stationary_point(PhaseModel::polynomial({0.0, 1.0}), 0.0, 1.0); }) == ErrorKind::not_found);
    const PhaseModel wave = PhaseModel::generic([](double t) { return std::sin(2.0 * kPi * t); }, 0.1);
    CHECK(kind_of([&] { stationary_point(wave, 0.1, 2.9); }) == ErrorKind::decomposition);
}

TEST_CASE("stationary_point residual on every grid phase") {
    int checked = 0;
    for (const PoissonGridCase& c : poisson_grid()) {
        const FirstPoissonCase& f = c.first;
        const TruncationWindows tw = truncation_windows(
            {f.alpha, f.h, double(f.u), double(f.m), double(f.n), double(c.q), f.x, 1.0});
        for (int s = 1; s < tw.t2; ++s) {
            const PhaseModel g = PhaseModel::first(
                {f.h, f.x, f.alpha, double(c.q), double(f.u), double(f.m), double(f.n), double(s)});
            const double t0 = stationary_point(g, 1e-6, 1e6);
            CHECK(std::abs(g.derivative(t0, 1)) <= 1e-10 * std::abs(g.derivative(t0, 2)) * t0);
            ++checked;
        }
        const SecondPoissonCase& sc = c.second;
        const TruncationWindows tw2 =
            truncation_windows({sc.alpha, sc.h, double(sc.u), double(sc.m), 1.0, double(c.q), sc.x, double(sc.s)});
        for (int sg = 1; sg < tw2.t4; ++sg) {
            const PhaseModel g = PhaseModel::second(
                {sc.h, sc.x, sc.alpha, double(c.q), double(sc.u), double(sc.m), double(sc.s), double(sg)});
            const double t0 = stationary_point(g, 1e-6, 1e6);
            CHECK(std::abs(g.derivative(t0, 1)) <= 1e-10 * std::abs(g.derivative(t0, 2)) * t0);
            ++checked;
        }
    }
    CHECK(checked > 80);
}

TEST_CASE("stationary_values match direct evaluation") {
    const PhaseModel g = PhaseModel::first(example_first());
    const StationaryValues v = stationary_values(g, 0.5, 3.0);
    CHECK(std::abs(v.value - g.value(2.25)) <= 1e-10 * std::abs(v.value));
    auto g_ld = [](ld t) { return std::sqrt(ld(100) * t) - ld(100) * t / ld(30); };
    CHECK(rel(std::abs(v.second), std::abs(double(fd(g_ld, 2.25L, 2, 0.05L)))) < 1e-6);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ua(0.02, 0.45), uh(1.0, 500.0), us(1.0, 20.0);
    for (int i = 0; i < 200; ++i) {
        const double a = ua(rng), h = uh(rng);
        const PhaseModel f = PhaseModel::first({h, 1e4, a, 7.0, 1.0, 2.0, 3.0, us(rng)});
        const StationaryValues fv = stationary_values(f, 1e-9, 1e9);
        CHECK(rel(fv.value, f.value(fv.t0)) < 1e-9);
        CHECK(rel(fv.second, f.derivative(fv.t0, 2)) < 1e-9);

        const PhaseModel s = PhaseModel::second({h, 1e4, a, 7.0, 1.0, 2.0, 3.0, us(rng)});
        const StationaryValues sv = stationary_values(s, 1e-300, 1e300);
        CHECK(rel(sv.value, s.value(sv.t0)) < 1e-9);
        CHECK(rel(sv.second, s.derivative(sv.t0, 2)) < 1e-9);
        CHECK(sv.second < 0.0);
    }
}

// ---------------------------------------------------------------------------

TEST_CASE("stationary expansion on the Gaussian family") {
    const WindowModel w = plateau_window_model(-0.5, 0.5, 0.05);
    double prev_rel = 1e300, prev_scaled = 1e300;
    for (double y : {50.0, 200.0, 800.0}) {
        const PhaseModel g = PhaseModel::polynomial({0.0, 0.0, -y / 2.0});
        const OscIntegralResult lead = stationary_expand(w, g, w.lo, w.hi, 1);
        CHECK(lead.method == OscMethod::lemma3_expansion);
        CHECK(std::abs(lead.value - std::polar(1.0, -kPi / 4.0) / std::sqrt(y)) < 1e-14);
        const OscIntegralResult quad = quad_osc(w, g, w.lo, w.hi, 1e-12);
        const double err = std::abs(lead.value - quad.value);
        const double r = err / std::abs(quad.value);
        if (y == 50.0) CHECK(r <= 0.05);
        if (y == 200.0) CHECK(r <= 0.02);
        CHECK(r < prev_rel);
        CHECK(err * std::sqrt(y) < prev_scaled);
        CHECK(lead.error_estimate >= err);
        prev_rel = r;
        prev_scaled = err * std::sqrt(y);
    }
}

TEST_CASE("H vanishes to second order at t0") {
    const PhaseModel g = PhaseModel::first(example_first());
    const double t0 = stationary_point(g, 0.5, 3.0);
    const auto H = stationary_remainder(g, t0);
    auto hl = [&](ld t) { return ld(H(double(t))); };
    CHECK(std::abs(H(t0)) <= 1e-8);
    CHECK(std::abs(double(fd(hl, t0, 1, 0.01L))) <= 1e-8);
    CHECK(std::abs(double(fd(hl, t0, 2, 0.01L))) <= 1e-8);
    // and H''' = g''' is not removed
    CHECK(rel(double(fd(hl, t0, 3, 0.02L)), g.derivative(t0, 3)) < 1e-4);
}

TEST_CASE("stationary expansion on first-poisson phases") {
    const BumpWindow b = make_bump(2.0, 0.1);
    const WindowModel w = bump_window_model(b);
    // s chosen so the stationary point stays at t0 while h grows
    auto phase = [](double h, double t0) {
        const double s = 0.1 * h * 30.0 / std::pow(1e4 * t0, 0.9);
        return PhaseModel::first({h, 1e4, 0.1, 5.0, 1.0, 2.0, 3.0, s});
    };
    // On the ramp, away from its inflection point, w'' != 0 and the second term
    // is a genuine correction.
    std::vector<double> corrections;
    for (double h : {400.0, 1600.0, 6400.0}) {
        const PhaseModel g = phase(h, 2.03);
        CHECK(std::abs(stationary_point(g, w.lo, w.hi) - 2.03) < 1e-12);
        const OscIntegralResult one = stationary_expand(w, g, w.lo, w.hi, 1);
        const OscIntegralResult two = stationary_expand(w, g, w.lo, w.hi, 2);
        corrections.push_back(std::abs(two.value - one.value) / std::abs(one.value));

        // Leading term through the c_0 normalisation.
        const StationaryValues sv = stationary_values(g, w.lo, w.hi);
        const auto& p = g.first_params();
        const AlphaConstants ac = alpha_constants(p.alpha);
        const cplx via_c0 = e_of(sv.value) * expansion_constant_c(p.alpha, 0) / std::sqrt(p.h * p.x * p.x) *
                            std::pow(p.h * p.q * p.u * p.m * p.n / p.s, ac.beta / 2.0) * eval_bump(b, sv.t0);
        CHECK(std::abs(via_c0 - one.value) <= 1e-10 * std::abs(one.value));
    }
    CHECK(corrections[1] / corrections[0] < 1.0);
    CHECK(corrections[2] / corrections[1] < 1.0);

    // The error estimate bounds the true error everywhere in the window,
    // including where the expansion is outside its hypotheses.
    for (double t0 : {0.93, 0.97, 1.02, 1.5, 1.98, 2.01, 2.05, 2.09})
        for (double h : {100.0, 1600.0, 6400.0})
            for (int n = 1; n <= 3; ++n) {
                const PhaseModel g = phase(h, t0);
                const OscIntegralResult e = stationary_expand(w, g, w.lo, w.hi, n);
                const OscIntegralResult quad = quad_osc(w, g, w.lo, w.hi, 1e-12);
                INFO("t0 = " << t0 << ", h = " << h << ", terms = " << n);
                CHECK(e.error_estimate >= std::abs(e.value - quad.value));
            }
    // Deep in the plateau the expansion is sharp.
    const PhaseModel g = phase(6400.0, 1.5);
    const OscIntegralResult e = stationary_expand(w, g, w.lo, w.hi, 1);
    CHECK(std::abs(e.value - quad_osc(w, g, w.lo, w.hi, 1e-12).value) < 1e-5 * std::abs(e.value));
}

TEST_CASE("expansion constants") {
    for (double a : {0.05, 0.1, 0.3}) {
        const AlphaConstants c = alpha_constants(a);
        const cplx c0 = expansion_constant_c(a, 0);
        CHECK(std::abs(std::arg(c0) + kPi / 4.0) < 1e-15);
        CHECK(rel(std::abs(c0), std::pow(a, c.beta / 2.0) / std::sqrt(a * (1.0 - a))) < 1e-14);
        CHECK(std::abs(expansion_constant_b(a, 0) - c0 / std::pow(a, c.beta / 2.0)) < 1e-14);
        // c_2 / c_1 = (2i)^-1 / (2 2 pi) alpha^beta / (alpha (1 - alpha))
        const cplx ratio = expansion_constant_c(a, 2) / expansion_constant_c(a, 1);
        const cplx expect = cplx(0.0, -0.5) / (2.0 * 2.0 * kPi) * std::pow(a, c.beta) / (a * (1.0 - a));
        CHECK(std::abs(ratio - expect) < 1e-12 * std::abs(expect));
    }
}

TEST_CASE("stationary_expand errors") {
    const WindowModel w = plateau_window_model(0.0, 3.0, 0.1);
    const PhaseModel wave = PhaseModel::generic([](double t) { return std::sin(2.0 * kPi * t); }, 0.1);
    CHECK(kind_of([&] { stationary_expand(w, wave, 0.1, 2.9, 1); }) == ErrorKind::decomposition);
    CHECK(kind_of([&] { stationary_expand(w, PhaseModel::polynomial({0.0, 0.0, -1.0}), 0.5, 2.0, 1); }) ==
          ErrorKind::not_found);
    CHECK(kind_of([&] { stationary_expand(w, PhaseModel::polynomial({0.0, 0.0, -1.0}), -1.0, 2.0, 4); }) ==
          ErrorKind::argument);
}

TEST_CASE("composition formula for d^r e(H) against differences and the Leibniz recursion") {
    // H(t) = 0.3 sin 2t + 0.1 t^3 at t = 0.4
    const double t = 0.4;
    const std::vector<double> hd{0.6 * std::cos(2 * t) + 0.3 * t * t, -1.2 * std::sin(2 * t) + 0.6 * t,
                                 -2.4 * std::cos(2 * t) + 0.6, 4.8 * std::sin(2 * t)};
    const double h0 = 0.3 * std::sin(2 * t) + 0.1 * t * t * t;
    auto e_h = [](ld x) {
        const ld ph = ld(0.3) * std::sin(2 * x) + ld(0.1) * x * x * x;
        return std::polar(ld(1), 2 * std::numbers::pi_v<ld> * ph);
    };
    // F' = 2 pi i H' F, so F^(r) = sum_j C(r-1, j) 2 pi i H^(j+1) F^(r-1-j).
    std::vector<cplx> leib{e_of(h0)};
    for (int r = 1; r <= 4; ++r) {
        cplx acc = 0.0;
        double binom = 1.0;
        for (int j = 0; j <= r - 1; ++j) {
            acc += binom * cplx(0.0, 2.0 * kPi * hd[j]) * leib[r - 1 - j];
            binom = binom * (r - 1 - j) / (j + 1);
        }
        leib.push_back(acc);
    }
    for (int r = 0; r <= 4; ++r) {
        const cplx fb = exp_phase_derivative(h0, hd, r);
        CHECK(std::abs(fb - leib[r]) <= 1e-12 * std::abs(leib[r]));
        if (r >= 1) {
            const lcplx d = fd(e_h, ld(t), r, ld(0.01));
            const cplx dd(double(d.real()), double(d.imag()));
            CHECK(std::abs(fb - dd) <= 1e-5 * std::abs(fb));
        }
    }
    CHECK(kind_of([&] { exp_phase_derivative(h0, hd, 5); }) == ErrorKind::argument);
}

// ---------------------------------------------------------------------------

TEST_CASE("truncation_windows") {
    const TruncationWindows w = truncation_windows({0.5, 1.0, 1.0, 2.0, 5.0, 3.0, 100.0, 1.0});
    CHECK(std::abs(w.t1 - 0.375) < 1e-15);
    CHECK(std::abs(w.t2 - 6.0) < 1e-14);
    CHECK_FALSE(w.first_empty);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ua(0.01, 0.49), up(1.0, 100.0);
    for (int i = 0; i < 200; ++i) {
        const TruncationWindows r =
            truncation_windows({ua(rng), up(rng), up(rng), up(rng), up(rng), up(rng), 1e4 * up(rng), up(rng)});
        CHECK(std::abs(r.t2 / r.t1 - 16.0) < 1e-13);
        CHECK(std::abs(r.t4 / r.t3 - 16.0) < 1e-13);
    }
    const TruncationWindows tiny = truncation_windows({0.1, 1.0, 1.0, 1.0, 1.0, 3.0, 1e4, 1.0});
    CHECK(tiny.second_empty);
    CHECK(tiny.first_empty);
    CHECK(kind_of([] { truncation_windows({0.1, 0.0, 1.0, 1.0, 1.0, 3.0, 1e4, 1.0}); }) == ErrorKind::argument);
}

TEST_CASE("gcd pair sum") {
    auto brute = [](double t1, double t2, double t3, double t4) {
        double acc = 0.0;
        for (long s = 0; s <= long(t2) + 1; ++s)
            for (long g = 0; g <= long(t4) + 1; ++g)
                if (s > t1 && s < t2 && g > t3 && g < t4) acc += std::sqrt(double(std::gcd(s, g)));
        return acc;
    };
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 300.0);
    for (int i = 0; i < 60; ++i) {
        const double t2 = u(rng), t4 = u(rng);
        const double v = gcd_pair_sum(t2 / 16.0, t2, t4 / 16.0, t4);
        CHECK(std::abs(v - brute(t2 / 16.0, t2, t4 / 16.0, t4)) <= 1e-9 * std::max(1.0, v));
        CHECK(v <= gcd_pair_bound(t2, t4));
    }
    CHECK(gcd_pair_sum(1.0, 2.0, 0.0, 10.0) == 0.0);
    CHECK(gcd_pair_sum(1.5, 3.0, 5.0, 7.0) == doctest::Approx(std::sqrt(2.0)));
    CHECK(kind_of([] { gcd_pair_sum(3.0, 2.0, 0.0, 1.0); }) == ErrorKind::argument);
}

// ---------------------------------------------------------------------------

TEST_CASE("first Poisson check: classical case and the small example") {
    const CharacterTable chars = character_group(5);
    FirstPoissonCase c;
    c.u = 1, c.m = 2, c.n = 3, c.h = 0.0, c.alpha = 0.1, c.x = 1e4;
    PoissonCheck r = poisson_verify_first(chars, c);
    CHECK(r.diff <= 1e-8 * std::abs(r.lhs));
    CHECK(r.rel_diff <= 1e-8);
    CHECK(r.lattice_terms == 3500 - 1500 + 1);

    c.h = 1.0;
    r = poisson_verify_first(chars, c);
    CHECK(r.rel_diff <= 1e-6);
    CHECK(r.windows.first_empty);
    CHECK(r.lemma2_tail >= 0.0);
}

TEST_CASE("first Poisson check: doubling the dual range stays inside the tail bound") {
    const PoissonGridCase g = poisson_grid()[11];
    REQUIRE(g.q == 7);
    const CharacterTable chars = character_group(g.q);
    FirstPoissonCase c = g.first;
    const PoissonCheck a = poisson_verify_first(chars, c);
    PoissonConfig cfg;
    cfg.max_dual = 2 * a.dual_max;
    const PoissonCheck b = poisson_verify_first(chars, c, cfg);
    CHECK(b.dual_max == 2 * a.dual_max);
    CHECK(std::abs(b.rhs - a.rhs) <= a.tail_estimate + a.quad_error + b.quad_error);
    CHECK(a.rel_diff <= 1e-5);

    cfg.max_dual = 1;
    try {
        poisson_verify_first(chars, c, cfg);
        FAIL("expected a truncation error");
    } catch (const NumericError& e) {
        CHECK(e.kind() == ErrorKind::truncation);
        CHECK(e.bound() > 0.0);
    }
    c.x = 1e6;
    CHECK(kind_of([&] { poisson_verify_first(chars, c); }) == ErrorKind::resource);
    c.x = 1e4;
    c.chi = 6;
    CHECK(kind_of([&] { poisson_verify_first(chars, c); }) == ErrorKind::argument);
}

TEST_CASE("second Poisson check: principal instance, Jacobian and empty window") {
    const CharacterTable chars = character_group(5);
    SecondPoissonCase c;
    c.u = 1, c.m = 2, c.s = 1, c.chi = 0, c.h = 50.0, c.alpha = 0.1, c.x = 1e4;
    const PoissonCheck r = poisson_verify_second(chars, c);
    CHECK(r.rel_diff <= 1e-5);
    CHECK_FALSE(r.windows.second_empty);

    for (std::int64_t sigma : {-2, -1, 0, 1, 2, 3, 5}) {
        const cplx direct = second_dual_integral_direct(c, 5, sigma, 1e-12);
        const cplx tau = second_dual_integral_tau(c, 5, sigma, 1e-12);
        CHECK(std::abs(direct - tau) <= 1e-8 * std::abs(tau));
    }

    // T4 < 1: no stationary sigma, so a non-principal sum is tail-sized.
    c.h = 5.0, c.m = 1, c.chi = 1;
    const PoissonCheck e = poisson_verify_second(chars, c);
    CHECK(e.windows.second_empty);
    CHECK(std::abs(e.lhs) < 1e-6);
    CHECK(e.diff < 1e-10);
    c.chi = 0;
    const PoissonCheck p = poisson_verify_second(chars, c);
    CHECK(p.rel_diff <= 1e-8);
}

TEST_CASE("validation grid") {
    const auto grid = poisson_grid();
    REQUIRE(grid.size() == 20);
    std::set<std::uint64_t> qs;
    std::set<double> alphas;
    int principal = 0, complex_chi = 0;
    for (const PoissonGridCase& c : grid) {
        qs.insert(c.q);
        alphas.insert(c.first.alpha);
        const CharacterTable chars = character_group(c.q);
        principal += c.first.chi == 0;
        bool cx = false;
        for (std::int64_t n = 1; n < std::int64_t(c.q); ++n)
            cx = cx || std::abs(chars.eval(c.first.chi, n).imag()) > 0.5;
        complex_chi += cx;
        CHECK(c.first.x == 1e4);
        CHECK(c.second.x == 1e4);
    }
    CHECK(qs == std::set<std::uint64_t>{3, 5, 7, 12});
    CHECK(alphas == std::set<double>{0.05, 0.1});
    CHECK(principal >= 4);
    CHECK(complex_chi >= 2);
    CHECK(grid.size() - principal >= 10);
}

TEST_CASE("both Poisson identities hold at 1e-5 on the grid") {
    for (const PoissonGridCase& c : poisson_grid()) {
        const CharacterTable chars = character_group(c.q);
        const PoissonCheck a = poisson_verify_first(chars, c.first);
        const PoissonCheck b = poisson_verify_second(chars, c.second);
        INFO("q = " << c.q << ", chi = " << c.first.chi << ", alpha = " << c.first.alpha);
        CHECK(a.rel_diff <= 1e-5);
        CHECK(b.rel_diff <= 1e-5);
        CHECK_FALSE(a.windows.first_empty);
        CHECK_FALSE(b.windows.second_empty);
    }
}
