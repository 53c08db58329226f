#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "doctest.h"
#include "fpl/arith.hpp"
#include "fpl/error.hpp"
#include "fpl/parallel.hpp"

using namespace fpl;

namespace {

bool trial_division_prime(std::uint64_t n) {
    if (n < 2) return false;
    for (std::uint64_t d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

}  // namespace

TEST_CASE("sieve_primes small ranges") {
    CHECK(sieve_primes(2, 11).primes() == std::vector<std::uint64_t>{2, 3, 5, 7});
    CHECK(sieve_primes(10, 20).primes() == std::vector<std::uint64_t>{11, 13, 17, 19});
    CHECK(sieve_primes(2, 3).primes() == std::vector<std::uint64_t>{2});
}

TEST_CASE("sieve_primes count to 10^6 matches trial division oracle") {
    std::uint64_t oracle = 0;
    for (std::uint64_t n = 2; n <= 1'000'000; ++n) oracle += trial_division_prime(n);
    REQUIRE(oracle == 78498);
    CHECK(sieve_primes(2, 1'000'001).count() == oracle);
}

TEST_CASE("sieve agrees with trial division below 10^4 across segment sizes") {
    for (std::uint64_t seg : {64u, 128u, 1u << 20}) {
        SieveOptions opt;
        opt.segment_size = seg;
        opt.with_factors = true;
        const SieveTable t = sieve_primes(2, 10'001, opt);
        for (std::uint64_t n = 2; n <= 10'000; ++n) {
            REQUIRE(t.is_prime(n) == trial_division_prime(n));
            const std::uint64_t f = t.smallest_factor(n);
            REQUIRE(n % f == 0);
            for (std::uint64_t d = 2; d < f; ++d) REQUIRE(n % d != 0);
        }
    }
}

TEST_CASE("segmented sieve high range and thread count independence") {
    const std::uint64_t lo = (std::uint64_t{1} << 40) - 5000, hi = (std::uint64_t{1} << 40) + 5000;
    set_thread_count(1);
    const auto a = sieve_primes(lo, hi, SieveOptions{false, 1024, 1u << 30}).primes();
    set_thread_count(4);
    const auto b = sieve_primes(lo, hi, SieveOptions{false, 1024, 1u << 30}).primes();
    set_thread_count(0 + 1);
    CHECK(a == b);
    for (std::uint64_t p : a) CHECK(is_prime_u64(p));
    std::uint64_t mr = 0;
    for (std::uint64_t n = lo; n < hi; ++n) mr += is_prime_u64(n);
    CHECK(mr == a.size());
}

TEST_CASE("sieve_primes error paths") {
    CHECK_THROWS_AS(sieve_primes(10, 10), Error);
    CHECK_THROWS_AS(sieve_primes(1, 10), Error);
    try {
        sieve_primes(2, std::uint64_t{1} << 40);
        FAIL("expected resource error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::resource);
    }
}

TEST_CASE("prime cache round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "fpl_test_cache";
    std::filesystem::create_directories(dir);
    const auto path = dir / "primes.fpl";
    const SieveTable t = sieve_primes(1000, 5003);
    save_prime_cache(path, t);
    const SieveTable u = load_prime_cache(path);
    CHECK(u.lo() == 1000);
    CHECK(u.hi() == 5003);
    CHECK(u.primes() == t.primes());
    CHECK(std::filesystem::file_size(path) == 4 + 16 + (5003 - 1000 + 7) / 8);
    std::filesystem::remove_all(dir);
}

TEST_CASE("von_mangoldt examples") {
    CHECK(von_mangoldt(8) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(von_mangoldt(6) == 0.0);
    CHECK(von_mangoldt(97) == doctest::Approx(4.5747110).epsilon(1e-7));
    CHECK(von_mangoldt(1) == 0.0);
    CHECK_THROWS_AS(von_mangoldt(0), Error);
}

TEST_CASE("mobius and tau_k examples") {
    CHECK(mobius(1) == 1);
    CHECK(mobius(30) == -1);
    CHECK(mobius(12) == 0);
    CHECK_THROWS_AS(mobius(0), Error);
    CHECK(tau_k(6, 2) == 4);
    CHECK(tau_k(1, 9) == 1);
    // ordered triples with product 4: (4,1,1)x3, (2,2,1)x3
    CHECK(tau_k(4, 3) == 6);
}

TEST_CASE("tau_k matches brute-force ordered factorization count") {
    auto brute = [](auto&& self, std::uint64_t n, unsigned k) -> std::uint64_t {
        if (k == 1) return 1;
        std::uint64_t c = 0;
        for (std::uint64_t d = 1; d <= n; ++d)
            if (n % d == 0) c += self(self, n / d, k - 1);
        return c;
    };
    for (std::uint64_t n = 1; n <= 60; ++n)
        for (unsigned k = 1; k <= 4; ++k) REQUIRE(tau_k(n, k) == brute(brute, n, k));
}

TEST_CASE("euler_phi, inv_mod, primitive_root examples") {
    CHECK(euler_phi(10) == 4);
    CHECK(euler_phi(1) == 1);
    CHECK(inv_mod(2, 5) == 3);
    CHECK(inv_mod(-2, 5) == 2);
    try {
        inv_mod(4, 10);
        FAIL("expected not-invertible");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::not_invertible);
    }
    // order check: 2 has order 3 mod 7, 3 has order 6
    CHECK(multiplicative_order(2, 7) == 3);
    CHECK(multiplicative_order(3, 7) == 6);
    CHECK(primitive_root(7, 1) == 3);
    CHECK(multiplicative_order(primitive_root(7, 3), 343) == 294);
    CHECK(multiplicative_order(primitive_root(3, 5), 243) == 162);
    CHECK_THROWS_AS(primitive_root(2, 3), Error);
}

TEST_CASE("factor handles large semiprimes") {
    const std::uint64_t p = 1'000'000'007, q = 998'244'353;
    const FactoredInteger f = factor(p * q);
    REQUIRE(f.factors.size() == 2);
    CHECK(f.factors[0] == PrimePower{q, 1});
    CHECK(f.factors[1] == PrimePower{p, 1});
    const FactoredInteger g = factor(std::uint64_t{1'000'003} * 1'000'003 * 8);
    REQUIRE(g.factors.size() == 2);
    CHECK(g.factors[1] == PrimePower{1'000'003, 2});
}

TEST_CASE("divisor-sum identities up to 10^5") {
    std::vector<double> lambda(100'001);
    std::vector<int> mu(100'001);
    for (std::uint64_t n = 1; n <= 100'000; ++n) {
        lambda[n] = von_mangoldt(n);
        mu[n] = mobius(n);
    }
    for (std::uint64_t n = 1; n <= 100'000; ++n) {
        double sum_lambda = 0.0;
        long sum_mu = 0;
        for (std::uint64_t d : divisors(n)) {
            sum_lambda += lambda[d];
            sum_mu += mu[d];
        }
        REQUIRE(std::abs(sum_lambda - std::log(static_cast<double>(n))) <= 1e-9);
        REQUIRE(sum_mu == (n == 1 ? 1 : 0));
    }
}

TEST_CASE("multiplicativity on coprime pairs up to 300") {
    for (std::uint64_t n = 1; n <= 300; ++n)
        for (std::uint64_t m = 1; m <= 300; ++m) {
            if (std::gcd(n, m) != 1) continue;
            REQUIRE(euler_phi(n * m) == euler_phi(n) * euler_phi(m));
            for (unsigned k : {2u, 3u, 9u}) REQUIRE(tau_k(n * m, k) == tau_k(n, k) * tau_k(m, k));
        }
}

TEST_CASE("inv_mod property on random pairs") {
    std::mt19937_64 rng(12345);
    for (int i = 0; i < 10'000; ++i) {
        const std::uint64_t q = 2 + rng() % 1'000'000'000;
        const std::int64_t a = static_cast<std::int64_t>(rng() % (4 * q)) - static_cast<std::int64_t>(2 * q);
        if (std::gcd(mod_floor(a, q), q) != 1) continue;
        const std::uint64_t inv = inv_mod(a, q);
        REQUIRE(inv >= 1);
        REQUIRE(inv < q);
        REQUIRE(mul_mod(mod_floor(a, q), inv, q) == 1 % q);
    }
}

TEST_CASE("von_mangoldt_range agrees with pointwise values") {
    const auto v = von_mangoldt_range(1, 5000);
    for (std::uint64_t n = 1; n < 5000; ++n) REQUIRE(v[n - 1] == doctest::Approx(von_mangoldt(n)));
    const auto w = von_mangoldt_range(999'000, 1'001'000);
    for (std::uint64_t n = 999'000; n < 1'001'000; n += 7)
        REQUIRE(w[n - 999'000] == doctest::Approx(von_mangoldt(n)));
}
