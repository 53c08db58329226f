#include <algorithm>
#include <cmath>
#include <numeric>

#include "fpl/arith.hpp"
#include "fpl/error.hpp"

namespace fpl {

namespace {

constexpr std::uint64_t kTrialLimit = 1'000'000;

std::uint64_t pollard_brent(std::uint64_t n) {
    if (n % 2 == 0) return 2;
    for (std::uint64_t c = 1;; ++c) {
        std::uint64_t y = 2, x = 2, g = 1, q = 1, ys = 2;
        const std::uint64_t m = 128;
        auto f = [&](std::uint64_t v) { return (mul_mod(v, v, n) + c) % n; };
        for (std::uint64_t r = 1; g == 1; r <<= 1) {
            x = y;
            for (std::uint64_t i = 0; i < r; ++i) y = f(y);
            for (std::uint64_t k = 0; k < r && g == 1; k += m) {
                ys = y;
                for (std::uint64_t i = 0; i < std::min(m, r - k); ++i) {
                    y = f(y);
                    q = mul_mod(q, x > y ? x - y : y - x, n);
                }
                g = gcd_u64(q, n);
            }
        }
        if (g == n) {
            do {
                ys = f(ys);
                g = gcd_u64(x > ys ? x - ys : ys - x, n);
            } while (g == 1);
        }
        if (g != n) return g;
    }
}

void split_large(std::uint64_t n, std::vector<std::uint64_t>& primes) {
    if (n == 1) return;
    if (is_prime_u64(n)) {
        primes.push_back(n);
        return;
    }
    const std::uint64_t d = pollard_brent(n);
    split_large(d, primes);
    split_large(n / d, primes);
}

}  // namespace

std::uint64_t gcd_u64(std::uint64_t a, std::uint64_t b) noexcept { return std::gcd(a, b); }

std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) noexcept {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) noexcept {
    if (m == 1) return 0;
    std::uint64_t result = 1;
    base %= m;
    while (exp > 0) {
        if (exp & 1) result = mul_mod(result, base, m);
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    return result;
}

bool is_prime_u64(std::uint64_t n) noexcept {
    if (n < 2) return false;
    for (std::uint64_t p : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
        if (n % p == 0) return n == p;
    }
    std::uint64_t d = n - 1;
    int r = 0;
    while (d % 2 == 0) {
        d /= 2;
        ++r;
    }
    // This witness set is exact below 3.3e24.
    for (std::uint64_t a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
        std::uint64_t x = pow_mod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 1; i < r; ++i) {
            x = mul_mod(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

FactoredInteger factor(std::uint64_t n) {
    require(n >= 1, "factor: n must be positive");
    FactoredInteger out;
    out.n = n;
    std::uint64_t rest = n;
    for (std::uint64_t p = 2; p <= kTrialLimit && p * p <= rest; p += (p == 2 ? 1 : 2)) {
        if (rest % p != 0) continue;
        unsigned e = 0;
        while (rest % p == 0) {
            rest /= p;
            ++e;
        }
        out.factors.push_back({p, e});
    }
    if (rest > 1) {
        std::vector<std::uint64_t> big;
        split_large(rest, big);
        std::sort(big.begin(), big.end());
        for (std::uint64_t p : big) {
            if (!out.factors.empty() && out.factors.back().prime == p)
                ++out.factors.back().exponent;
            else
                out.factors.push_back({p, 1});
        }
    }
    return out;
}

std::vector<std::uint64_t> divisors(const FactoredInteger& f) {
    std::vector<std::uint64_t> out{1};
    for (const auto& [p, e] : f.factors) {
        const std::size_t base = out.size();
        std::uint64_t pk = 1;
        for (unsigned k = 1; k <= e; ++k) {
            pk *= p;
            for (std::size_t i = 0; i < base; ++i) out.push_back(out[i] * pk);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::uint64_t> divisors(std::uint64_t n) { return divisors(factor(n)); }

double von_mangoldt(std::uint64_t n) {
    require(n >= 1, "von_mangoldt: n must be positive");
    if (n == 1) return 0.0;
    const FactoredInteger f = factor(n);
    return f.is_prime_power() ? std::log(static_cast<double>(f.factors.front().prime)) : 0.0;
}

int mobius(std::uint64_t n) {
    require(n >= 1, "mobius: n must be positive");
    const FactoredInteger f = factor(n);
    for (const auto& pp : f.factors)
        if (pp.exponent > 1) return 0;
    return f.factors.size() % 2 == 0 ? 1 : -1;
}

std::uint64_t tau_k(std::uint64_t n, unsigned k) {
    require(n >= 1, "tau_k: n must be positive");
    require(k >= 1, "tau_k: k must be positive");
    // tau_k(p^e) = C(e + k - 1, k - 1)
    std::uint64_t result = 1;
    for (const auto& [p, e] : factor(n).factors) {
        std::uint64_t binom = 1;
        for (unsigned i = 1; i <= e; ++i) binom = binom * (k - 1 + i) / i;
        result *= binom;
    }
    return result;
}

std::uint64_t divisor_count(std::uint64_t n) { return tau_k(n, 2); }

std::uint64_t euler_phi(std::uint64_t n) {
    require(n >= 1, "euler_phi: n must be positive");
    std::uint64_t result = n;
    for (const auto& pp : factor(n).factors) result = result / pp.prime * (pp.prime - 1);
    return result;
}

std::uint64_t inv_mod(std::int64_t a, std::uint64_t q) {
    require(q >= 2, "inv_mod: modulus must be at least 2");
    const std::uint64_t ar = mod_floor(a, q);
    // Extended Euclid on signed 128-bit to avoid overflow for q near 2^63.
    __int128 old_r = ar, r = q, old_s = 1, s = 0;
    while (r != 0) {
        const __int128 quot = old_r / r;
        __int128 tmp = old_r - quot * r;
        old_r = r;
        r = tmp;
        tmp = old_s - quot * s;
        old_s = s;
        s = tmp;
    }
    if (old_r != 1) throw Error(ErrorKind::not_invertible, "inv_mod: gcd(a, q) > 1");
    __int128 inv = old_s % static_cast<__int128>(q);
    if (inv < 0) inv += q;
    return static_cast<std::uint64_t>(inv);
}

std::uint64_t multiplicative_order(std::uint64_t a, std::uint64_t m) {
    require(m >= 1 && gcd_u64(a % m, m) == 1, "multiplicative_order: a must be a unit mod m");
    if (m == 1) return 1;
    std::uint64_t order = euler_phi(m);
    for (const auto& pp : factor(order).factors) {
        while (order % pp.prime == 0 && pow_mod(a, order / pp.prime, m) == 1) order /= pp.prime;
    }
    return order;
}

std::uint64_t primitive_root(std::uint64_t p, unsigned e) {
    require(p > 2 && is_prime_u64(p), "primitive_root: p must be an odd prime");
    require(e >= 1, "primitive_root: exponent must be positive");
    std::uint64_t pe = 1;
    for (unsigned i = 0; i < e; ++i) {
        require(pe <= UINT64_MAX / p, "primitive_root: p^e overflows 64 bits");
        pe *= p;
    }
    const std::uint64_t phi = pe / p * (p - 1);
    const FactoredInteger fphi = factor(phi);
    for (std::uint64_t g = 2; g < pe; ++g) {
        if (g % p == 0) continue;
        bool generator = true;
        for (const auto& pp : fphi.factors) {
            if (pow_mod(g, phi / pp.prime, pe) == 1) {
                generator = false;
                break;
            }
        }
        if (generator) return g;
    }
    throw Error(ErrorKind::invariant, "primitive_root: no generator found");
}

}  // namespace fpl
