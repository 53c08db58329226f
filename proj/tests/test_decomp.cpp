#include <cmath>
#include <random>

#include "doctest.h"
#include "fpl/arith.hpp"
#include "fpl/decomp.hpp"
#include "fpl/error.hpp"

using namespace fpl;

namespace {

int mobius_naive(std::uint64_t n) {
    int sign = 1;
    for (std::uint64_t p = 2; p * p <= n; ++p) {
        if (n % p) continue;
        n /= p;
        if (n % p == 0) return 0;
        sign = -sign;
    }
    return n > 1 ? -sign : sign;
}

// Every ordered 2j-tuple with product n, by trial over all integers.
double brute_hb(std::uint64_t n, int k, std::uint64_t v) {
    double total = 0.0;
    auto binom = [](int a, int b) {
        double r = 1;
        for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
        return r;
    };
    for (int j = 1; j <= k; ++j) {
        double wj = 0.0;
        auto rec = [&](auto&& self, int pos, std::uint64_t rest, double acc) -> void {
            if (pos == 2 * j) {
                if (rest == 1) wj += acc;
                return;
            }
            if (pos == 2 * j - 1 && j == 1) {
                // last remaining slot is the only mu variable
            }
            for (std::uint64_t d = 1; d <= rest; ++d) {
                if (rest % d) continue;
                if (pos == 0) {
                    self(self, pos + 1, rest / d, std::log(static_cast<double>(d)));
                } else if (pos >= j) {
                    if (d > v) continue;
                    self(self, pos + 1, rest / d, acc * mobius_naive(d));
                } else {
                    self(self, pos + 1, rest / d, acc);
                }
            }
        };
        rec(rec, 0, n, 0.0);
        total += ((j % 2) ? 1 : -1) * binom(k, j) * wj;
    }
    return total;
}

double lambda_oracle(std::uint64_t n) {
    for (std::uint64_t p = 2; p <= n; ++p) {
        if (n % p) continue;
        while (n % p == 0) n /= p;
        return n == 1 ? std::log(static_cast<double>(p)) : 0.0;
    }
    return 0.0;
}

}  // namespace

TEST_CASE("heath-brown small examples") {
    const HBTermList t = heath_brown_terms(4, 2, 2);
    double j1 = 0.0, j2 = 0.0;
    for (const HBTerm& term : t.terms) {
        const double c = term.sign * static_cast<double>(term.binom) * term.weight;
        (term.d.size() == 2 ? j1 : j2) += c;
        std::uint64_t prod = 1;
        for (std::uint64_t d : term.d) prod *= d;
        CHECK(prod == 4);
    }
    CHECK(j1 == doctest::Approx(2 * std::log(2.0)));
    CHECK(j2 == doctest::Approx(-std::log(2.0)));
    CHECK(t.total() == doctest::Approx(std::log(2.0)));

    CHECK(heath_brown_terms(1, 5, 1).total() == 0.0);
    CHECK(heath_brown_terms(97, 5, 3).total() == doctest::Approx(std::log(97.0)).epsilon(1e-12));
    CHECK(heath_brown_terms(97, 5, 3).total() == doctest::Approx(brute_hb(97, 5, 3)));
}

TEST_CASE("heath-brown terms respect the tuple invariants") {
    const std::uint64_t n = 720, v = 4;
    const HBTermList t = heath_brown_terms(n, 5, v);
    for (const HBTerm& term : t.terms) {
        const std::size_t j = term.d.size() / 2;
        std::uint64_t prod = 1;
        for (std::uint64_t d : term.d) prod *= d;
        REQUIRE(prod == n);
        for (std::size_t i = j; i < 2 * j; ++i) REQUIRE(term.d[i] <= v);
        CHECK(term.binom == (std::uint64_t[]){5, 10, 10, 5, 1}[j - 1]);
        CHECK(term.sign == ((j % 2) ? 1 : -1));
    }
    CHECK(t.total() == doctest::Approx(brute_hb(n, 5, v)).epsilon(1e-10));
}

TEST_CASE("heath-brown exactness for n in [2, 3000]") {
    for (std::uint64_t n = 2; n <= 3000; ++n) {
        const auto v = static_cast<std::uint64_t>(std::ceil(std::pow(static_cast<double>(n), 0.2))) + 1;
        const double lam = lambda_oracle(n);
        REQUIRE(std::abs(heath_brown_terms(n, 5, v).total() - lam) <= 1e-9);
        REQUIRE(std::abs(heath_brown_sum(n, 5, v) - lam) <= 1e-9);
    }
}

TEST_CASE("heath-brown agrees with brute force beyond the validity range") {
    // n > V^k: the identity no longer has to give Λ(n), but both routes must agree.
    for (std::uint64_t n : {64ull, 90ull, 210ull, 243ull}) {
        const double b = brute_hb(n, 2, 2);
        CHECK(heath_brown_terms(n, 2, 2).total() == doctest::Approx(b));
        CHECK(heath_brown_sum(n, 2, 2) == doctest::Approx(b));
    }
}

TEST_CASE("heath-brown error paths") {
    CHECK_THROWS_AS(heath_brown_terms(10, 7, 2), Error);
    CHECK_THROWS_AS(heath_brown_terms(10, 0, 2), Error);
    CHECK_THROWS_AS(heath_brown_terms(10, 2, 0), Error);
    try {
        heath_brown_terms(720720, 6, 100, 1000);
        FAIL("expected resource error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::resource);
    }
}

namespace {

bool has(const std::vector<TypeWitness>& ws, SumType k) {
    for (const auto& w : ws)
        if (w.kind == k) return true;
    return false;
}

const TypeWitness& get(const std::vector<TypeWitness>& ws, SumType k) {
    for (const auto& w : ws)
        if (w.kind == k) return w;
    throw std::runtime_error("missing");
}

}  // namespace

TEST_CASE("classify_exponents examples") {
    auto a = classify_exponents({0.7, 0.3}, 0.1 + 1e-6);
    REQUIRE(has(a, SumType::I));
    CHECK(get(a, SumType::I).index == std::vector<int>{1});

    auto b = classify_exponents({0.5, 0.5}, 0.1 + 1e-6);
    REQUIRE(has(b, SumType::II));
    CHECK(get(b, SumType::II).index == std::vector<int>{1});

    auto c = classify_exponents({0.35, 0.35, 0.30}, 0.15);
    REQUIRE(has(c, SumType::III));
    CHECK(get(c, SumType::III).index == std::vector<int>{3, 1, 2});

    CHECK(!has(classify_exponents({0.35, 0.35, 0.30}, 0.2), SumType::III));
}

TEST_CASE("classify_exponents argument errors") {
    CHECK_THROWS_AS(classify_exponents({0.5, 0.5}, 0.1), Error);
    CHECK_THROWS_AS(classify_exponents({0.5, 0.5}, 0.5), Error);
    CHECK_THROWS_AS(classify_exponents({0.5, 0.4}, 0.2), Error);
    CHECK_THROWS_AS(classify_exponents({1.2, -0.2}, 0.2), Error);
}

TEST_CASE("classifier is never empty and witnesses re-verify") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::exponential_distribution<double> ex(1.0);
    for (int it = 0; it < 10'000; ++it) {
        const int n = 1 + static_cast<int>(rng() % 10);
        std::vector<double> t(n);
        double s = 0.0;
        for (double& x : t) s += (x = ex(rng));
        for (double& x : t) x /= s;
        const double sigma = 0.1 + 1e-9 + u(rng) * (0.4 - 2e-9);
        const auto ws = classify_exponents(t, sigma);
        REQUIRE(!ws.empty());
        if (sigma > 1.0 / 6.0) REQUIRE(!has(ws, SumType::III));
        for (const auto& w : ws) REQUIRE(verify_witness(t, sigma, w));
    }
}

TEST_CASE("type II witness is the lexicographically least valid subset") {
    const std::vector<double> t{0.2, 0.3, 0.25, 0.25};
    const auto ws = classify_exponents(t, 0.15);
    REQUIRE(has(ws, SumType::II));
    // {1} sums to 0.2 < 0.35; {1,2} sums to 0.5 <= 0.5 and 0.5 < 0.65
    CHECK(get(ws, SumType::II).index == std::vector<int>{1, 2});
}

TEST_CASE("classify_dyadic examples") {
    const double x1 = 1e12;
    auto pw = [&](double e) { return std::pow(x1, e); };

    DyadicTuple a{{pw(0.62), pw(0.095), pw(0.095), pw(0.095), pw(0.095), 1, 1, 1, 1, 1}, x1, x1 * 1.5, 0.01};
    CHECK(has(classify_dyadic(a), SumType::I));

    DyadicTuple b{{pw(0.5), pw(0.5), 1, 1, 1, 1, 1, 1, 1, 1}, x1, x1 * 1.5, 0.01};
    const auto wb = classify_dyadic(b);
    REQUIRE(has(wb, SumType::II));
    CHECK(get(wb, SumType::II).index == std::vector<int>{1});

    DyadicTuple c{{pw(1.0 / 3), pw(1.0 / 3), pw(1.0 / 3), 1, 1, 1, 1, 1, 1, 1}, x1, x1 * 1.5, 0.05};
    const auto wc = classify_dyadic(c);
    REQUIRE(has(wc, SumType::III));
    CHECK(get(wc, SumType::III).index == std::vector<int>{1, 2, 3});
}

TEST_CASE("classify_dyadic invariants") {
    const double x1 = 1e12;
    DyadicTuple low{{10, 10, 1, 1, 1, 1, 1, 1, 1, 1}, x1, x1 * 2, 0.01};
    CHECK_THROWS_AS(classify_dyadic(low), Error);
    DyadicTuple cap{{1e6, 1, 1, 1, 1, 1e6, 1, 1, 1, 1}, x1, x1 * 2, 0.01, 100.0};
    CHECK_THROWS_AS(classify_dyadic(cap), Error);
}
