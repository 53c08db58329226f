#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace fpl {

// ---------------------------------------------------------------------------
// Segmented sieve of Eratosthenes
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kSieveLimit = std::uint64_t{1} << 48;

struct SieveOptions {
    bool with_factors = false;                          // keep least prime factors
    std::uint64_t segment_size = std::uint64_t{1} << 20;  // integers per segment, multiple of 64
    std::uint64_t max_length = std::uint64_t{1} << 34;    // memory budget in integers
};

// Primality bits over [lo, hi), immutable once built.
class SieveTable {
public:
    SieveTable() = default;

    std::uint64_t lo() const noexcept { return lo_; }
    std::uint64_t hi() const noexcept { return hi_; }
    bool contains(std::uint64_t n) const noexcept { return n >= lo_ && n < hi_; }

    bool is_prime(std::uint64_t n) const;
    bool has_factors() const noexcept { return !least_factor_.empty(); }
    // Least prime factor of n (n itself when n is prime). Requires has_factors().
    std::uint64_t smallest_factor(std::uint64_t n) const;

    std::uint64_t count() const noexcept;
    std::vector<std::uint64_t> primes() const;

    // Visits primes in increasing order within [from, to) ∩ [lo, hi).
    template <typename F>
    void for_each_prime(std::uint64_t from, std::uint64_t to, F&& visit) const {
        if (from < lo_) from = lo_;
        if (to > hi_) to = hi_;
        if (from >= to) return;
        const std::uint64_t first = from - lo_, last = to - lo_;
        std::uint64_t w = first / 64;
        std::uint64_t word = bits_[w] & (~std::uint64_t{0} << (first % 64));
        for (;;) {
            while (word != 0) {
                const std::uint64_t bit = w * 64 + static_cast<unsigned>(__builtin_ctzll(word));
                if (bit >= last) return;
                visit(lo_ + bit);
                word &= word - 1;
            }
            if (++w * 64 >= last) return;
            word = bits_[w];
        }
    }

    template <typename F>
    void for_each_prime(F&& visit) const {
        for_each_prime(lo_, hi_, std::forward<F>(visit));
    }

    // Packed bitset, bit i <-> integer lo + i, least significant bit first.
    std::span<const std::uint64_t> words() const noexcept { return bits_; }

    static SieveTable from_bits(std::uint64_t lo, std::uint64_t hi,
                                std::vector<std::uint64_t> words);

private:
    friend SieveTable sieve_primes(std::uint64_t, std::uint64_t, const SieveOptions&);

    std::uint64_t lo_ = 0;
    std::uint64_t hi_ = 0;
    std::vector<std::uint64_t> bits_;
    std::vector<std::uint32_t> least_factor_;  // 0 marks a prime
};

SieveTable sieve_primes(std::uint64_t lo, std::uint64_t hi, const SieveOptions& options = {});

// Prime cache file: "FPL1", lo (u64 LE), hi (u64 LE), packed bitset bytes.
void save_prime_cache(const std::filesystem::path& path, const SieveTable& table);
SieveTable load_prime_cache(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Factorization and multiplicative functions
// ---------------------------------------------------------------------------

struct PrimePower {
    std::uint64_t prime;
    unsigned exponent;
    friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

struct FactoredInteger {
    std::uint64_t n = 1;
    std::vector<PrimePower> factors;  // strictly increasing primes

    bool is_prime_power() const noexcept { return factors.size() == 1; }
};

std::uint64_t gcd_u64(std::uint64_t a, std::uint64_t b) noexcept;
std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) noexcept;
std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) noexcept;

// Deterministic Miller-Rabin, exact for every 64-bit input.
bool is_prime_u64(std::uint64_t n) noexcept;

// Trial division up to 10^6, then Miller-Rabin + Pollard rho for the cofactor.
FactoredInteger factor(std::uint64_t n);
std::vector<std::uint64_t> divisors(const FactoredInteger& f);
std::vector<std::uint64_t> divisors(std::uint64_t n);

double von_mangoldt(std::uint64_t n);
int mobius(std::uint64_t n);
std::uint64_t tau_k(std::uint64_t n, unsigned k);
std::uint64_t divisor_count(std::uint64_t n);
std::uint64_t euler_phi(std::uint64_t n);

// Unique inverse in [1, q-1]; throws not_invertible when gcd(a, q) > 1.
std::uint64_t inv_mod(std::int64_t a, std::uint64_t q);

// Least positive primitive root modulo p^e for an odd prime p.
std::uint64_t primitive_root(std::uint64_t p, unsigned e);

// Multiplicative order of a modulo m (gcd(a, m) = 1).
std::uint64_t multiplicative_order(std::uint64_t a, std::uint64_t m);

// Λ(n) for n in [lo, hi), index n - lo.
std::vector<double> von_mangoldt_range(std::uint64_t lo, std::uint64_t hi);

// Reduces a into [0, q).
inline std::uint64_t mod_floor(std::int64_t a, std::uint64_t q) noexcept {
    const auto qs = static_cast<std::int64_t>(q);
    std::int64_t r = a % qs;
    if (r < 0) r += qs;
    return static_cast<std::uint64_t>(r);
}

}  // namespace fpl
