#include <cmath>
#include <random>

#include "doctest.h"
#include "fpl/error.hpp"
#include "fpl/smoothing.hpp"

using namespace fpl;

namespace {

// S'(t) in closed form: S = 1/(1+e^g), g = 1/t - 1/(1-t).
double smooth_step_prime(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double s = smooth_step(t);
    const double gp = -1.0 / (t * t) - 1.0 / ((1.0 - t) * (1.0 - t));
    return -s * (1.0 - s) * gp;
}

}  // namespace

TEST_CASE("bump window examples") {
    const BumpWindow w = make_bump(1.8, 0.1);
    CHECK(eval_bump(w, 1.5) == 1.0);
    CHECK(eval_bump(w, 0.5) == 0.0);
    const double v = eval_bump(w, 0.95);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    CHECK(eval_bump(w, 1.0) == 1.0);
    CHECK(eval_bump(w, 1.8) == 1.0);
    CHECK(eval_bump(w, 0.9) == 0.0);
    CHECK(eval_bump(w, 1.9) == 0.0);
    // symmetric transitions
    CHECK(eval_bump(w, 0.95) == doctest::Approx(eval_bump(w, 1.85)));
    CHECK(eval_bump(w, 0.95) == doctest::Approx(0.5));
}

TEST_CASE("bump window argument errors") {
    CHECK_THROWS_AS(make_bump(1.8, 0.5), Error);
    CHECK_THROWS_AS(make_bump(1.1, 0.06), Error);
    CHECK_THROWS_AS(make_bump(1.8, 0.0), Error);
    CHECK_THROWS_AS(make_bump(1.0, 0.1), Error);
    CHECK_NOTHROW(make_bump(1.1, 0.04));
}

TEST_CASE("bump plateau, support and range at 10^4 samples") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ys(1.05, 4.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 10'000; ++i) {
        const double y = ys(rng);
        const double delta = u(rng) * std::min(0.2499, (y - 1.0) / 2.0) + 1e-6;
        const BumpWindow w = make_bump(y, std::min(delta, std::min(0.2499, (y - 1.0) / 2.0 - 1e-9)));
        const double x = -1.0 + u(rng) * (y + 2.0);
        const double v = eval_bump(w, x);
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
        if (x >= 1.0 && x <= y) REQUIRE(v == 1.0);
        if (x <= 1.0 - w.delta || x >= y + w.delta) REQUIRE(v == 0.0);
    }
}

TEST_CASE("window derivative examples") {
    const BumpWindow w = make_bump(1.8, 0.1);
    CHECK(std::abs(window_derivative(w, 1, 1.4)) <= 1e-8);
    for (double x : {0.93, 0.95, 1.2, 1.86})
        CHECK(window_derivative(w, 0, x) == eval_bump(w, x));
    const double d1 = window_derivative(w, 1, 0.95);
    CHECK(std::isfinite(d1));
    CHECK(std::abs(d1) <= 10.0 / w.delta);
    CHECK_THROWS_AS(window_derivative(w, 7, 0.95), Error);
    try {
        window_derivative(w, 7, 0.95);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::unsupported);
    }
}

TEST_CASE("first derivative agrees with the closed form") {
    const BumpWindow w = make_bump(2.5, 0.2);
    for (double t = 0.05; t < 1.0; t += 0.05) {
        const double x_left = 1.0 - w.delta + t * w.delta;
        CHECK(window_derivative(w, 1, x_left) == doctest::Approx(smooth_step_prime(t) / w.delta).epsilon(1e-6));
        const double x_right = w.y + w.delta - t * w.delta;
        CHECK(window_derivative(w, 1, x_right) == doctest::Approx(-smooth_step_prime(t) / w.delta).epsilon(1e-6));
    }
}

TEST_CASE("higher derivatives against a fine-step oracle") {
    const BumpWindow w = make_bump(1.8, 0.1);
    // second derivative from a fine central difference of the closed-form first derivative
    auto d1 = [&](double x) { return smooth_step_prime((x - 0.9) / 0.1) / 0.1; };
    for (double x : {0.92, 0.95, 0.97}) {
        const double h = 1e-6;
        const double oracle = (d1(x + h) - d1(x - h)) / (2 * h);
        CHECK(window_derivative(w, 2, x) == doctest::Approx(oracle).epsilon(1e-5).scale(1.0));
    }
    // growth order: |psi^(j)| <= C_j delta^-j with a modest C_j
    for (int j = 1; j <= 6; ++j) {
        double worst = 0.0;
        for (double x = 0.901; x < 1.0; x += 0.002) worst = std::max(worst, std::abs(window_derivative(w, j, x)));
        CHECK(worst * std::pow(w.delta, j) < std::pow(10.0, 2.0 * j));
        CHECK(worst > 0.0);
    }
}

TEST_CASE("partition of unity examples") {
    const DyadicPartition p = make_partition(1.01, 1.0, 1000);
    CHECK(partition_sum(p, 1.0) == 1.0);
    CHECK(std::abs(partition_sum(p, 937.3) - 1.0) <= 1e-12);
    const double d5 = std::pow(1.01, 5);
    CHECK(eval_member(p, d5, 2.0 * d5) == 0.0);
    CHECK_THROWS_AS(eval_member(p, 1.5, 1.0), Error);
    CHECK_THROWS_AS(make_partition(1.0, 1.0, 10), Error);
}

TEST_CASE("partition sums to one at 10^4 random points") {
    for (double theta : {1.01, 1.3, 2.0}) {
        const int max_power = theta < 1.1 ? 1400 : 40;
        const DyadicPartition p = make_partition(theta, 2.0, max_power);
        const double top = std::pow(theta, max_power - 1);
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(0.0, std::log(top));
        for (int i = 0; i < 10'000; ++i) {
            const double x = std::exp(u(rng));
            REQUIRE(std::abs(partition_sum(p, x) - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("member support on an exhaustive grid scan") {
    const DyadicPartition p = make_partition(1.3, 1.0, 30);
    const GridG g = p.grid();
    const auto values = g.values();
    REQUIRE(values.size() == 31);
    for (std::size_t i = 1; i < values.size(); ++i) REQUIRE(values[i] > values[i - 1]);
    for (int l = 0; l <= 30; ++l) {
        const double d = values[l];
        CHECK(g.index_of(d) == l);
        for (int k = 0; k <= 4000; ++k) {
            const double x = k * 0.01 * std::pow(1.3, l / 2.0);
            const double v = eval_member(p, d, x);
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
            if (x < d / 1.3 || x > d * 1.3) REQUIRE(v == 0.0);
        }
    }
}
