#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "fpl/arith.hpp"
#include "fpl/error.hpp"
#include "fpl/parallel.hpp"

namespace fpl {

namespace {

constexpr std::array<char, 4> kCacheMagic{'F', 'P', 'L', '1'};

std::uint64_t isqrt(std::uint64_t n) {
    auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

// Plain sieve for the base primes up to limit (inclusive).
std::vector<std::uint32_t> small_primes(std::uint64_t limit) {
    std::vector<std::uint32_t> out;
    if (limit < 2) return out;
    std::vector<bool> composite(limit + 1, false);
    for (std::uint64_t i = 2; i <= limit; ++i) {
        if (composite[i]) continue;
        out.push_back(static_cast<std::uint32_t>(i));
        for (std::uint64_t j = i * i; j <= limit; j += i) composite[j] = true;
    }
    return out;
}

void put_u64(std::ostream& os, std::uint64_t v) {
    std::array<unsigned char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b.data()), 8);
}

std::uint64_t get_u64(std::istream& is) {
    std::array<unsigned char, 8> b{};
    is.read(reinterpret_cast<char*>(b.data()), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
    return v;
}

}  // namespace

bool SieveTable::is_prime(std::uint64_t n) const {
    if (!contains(n)) throw_argument("is_prime: n outside the sieved range");
    const std::uint64_t i = n - lo_;
    return (bits_[i / 64] >> (i % 64)) & 1u;
}

std::uint64_t SieveTable::smallest_factor(std::uint64_t n) const {
    if (!has_factors()) throw_argument("smallest_factor: table built without factor support");
    if (!contains(n)) throw_argument("smallest_factor: n outside the sieved range");
    const std::uint32_t f = least_factor_[n - lo_];
    return f == 0 ? n : f;
}

std::uint64_t SieveTable::count() const noexcept {
    std::uint64_t c = 0;
    for (std::uint64_t w : bits_) c += static_cast<std::uint64_t>(std::popcount(w));
    return c;
}

std::vector<std::uint64_t> SieveTable::primes() const {
    std::vector<std::uint64_t> out;
    out.reserve(count());
    for_each_prime([&](std::uint64_t p) { out.push_back(p); });
    return out;
}

SieveTable SieveTable::from_bits(std::uint64_t lo, std::uint64_t hi,
                                 std::vector<std::uint64_t> words) {
    require(lo < hi, "from_bits: lo must be below hi");
    require(words.size() == (hi - lo + 63) / 64, "from_bits: bitset length mismatch");
    const std::uint64_t tail = (hi - lo) % 64;
    if (tail != 0) words.back() &= (std::uint64_t{1} << tail) - 1;
    SieveTable t;
    t.lo_ = lo;
    t.hi_ = hi;
    t.bits_ = std::move(words);
    return t;
}

SieveTable sieve_primes(std::uint64_t lo, std::uint64_t hi, const SieveOptions& options) {
    require(lo >= 2, "sieve_primes: lo must be at least 2");
    require(lo < hi, "sieve_primes: lo must be below hi");
    require(hi <= kSieveLimit, "sieve_primes: hi exceeds 2^48");
    require(options.segment_size >= 64 && options.segment_size % 64 == 0,
            "sieve_primes: segment size must be a positive multiple of 64");
    const std::uint64_t length = hi - lo;
    if (length > options.max_length) throw_resource("sieve_primes: range exceeds the memory budget");
    if (options.with_factors && length > (std::uint64_t{1} << 28))
        throw_resource("sieve_primes: factor table exceeds the memory budget");

    const std::uint64_t root = isqrt(hi - 1);
    const std::vector<std::uint32_t> base = small_primes(root);

    SieveTable t;
    t.lo_ = lo;
    t.hi_ = hi;
    t.bits_.assign((length + 63) / 64, ~std::uint64_t{0});
    if (options.with_factors) t.least_factor_.assign(length, 0);

    const std::uint64_t seg = options.segment_size;
    const std::uint64_t n_segments = (length + seg - 1) / seg;
    parallel_for(n_segments, [&](std::size_t s) {
        const std::uint64_t seg_lo = lo + s * seg;
        const std::uint64_t seg_hi = std::min(hi, seg_lo + seg);
        std::uint64_t* bits = t.bits_.data();
        for (std::uint32_t p32 : base) {
            const std::uint64_t p = p32;
            if (p * p >= seg_hi) break;
            std::uint64_t start = std::max(p * p, (seg_lo + p - 1) / p * p);
            for (std::uint64_t m = start; m < seg_hi; m += p) {
                const std::uint64_t i = m - lo;
                if (options.with_factors && t.least_factor_[i] == 0)
                    t.least_factor_[i] = static_cast<std::uint32_t>(p);
                bits[i / 64] &= ~(std::uint64_t{1} << (i % 64));
            }
        }
    });

    const std::uint64_t tail = length % 64;
    if (tail != 0) t.bits_.back() &= (std::uint64_t{1} << tail) - 1;
    return t;
}

void save_prime_cache(const std::filesystem::path& path, const SieveTable& table) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error(ErrorKind::io, "cannot open prime cache for writing: " + tmp);
        os.write(kCacheMagic.data(), kCacheMagic.size());
        put_u64(os, table.lo());
        put_u64(os, table.hi());
        const std::uint64_t n_bytes = (table.hi() - table.lo() + 7) / 8;
        std::vector<unsigned char> bytes(n_bytes);
        const auto words = table.words();
        for (std::uint64_t b = 0; b < n_bytes; ++b)
            bytes[b] = static_cast<unsigned char>(words[b / 8] >> (8 * (b % 8)));
        os.write(reinterpret_cast<const char*>(bytes.data()),
                 static_cast<std::streamsize>(bytes.size()));
        if (!os) throw Error(ErrorKind::io, "short write to prime cache: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

SieveTable load_prime_cache(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorKind::io, "cannot open prime cache: " + path.string());
    std::array<char, 4> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kCacheMagic) throw Error(ErrorKind::io, "bad prime cache magic: " + path.string());
    const std::uint64_t lo = get_u64(is);
    const std::uint64_t hi = get_u64(is);
    if (!is || lo < 2 || hi <= lo || hi > kSieveLimit)
        throw Error(ErrorKind::io, "bad prime cache header: " + path.string());
    const std::uint64_t n_bytes = (hi - lo + 7) / 8;
    std::vector<unsigned char> bytes(n_bytes);
    is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n_bytes));
    if (!is) throw Error(ErrorKind::io, "truncated prime cache: " + path.string());
    std::vector<std::uint64_t> words((hi - lo + 63) / 64, 0);
    for (std::uint64_t b = 0; b < n_bytes; ++b)
        words[b / 8] |= std::uint64_t{bytes[b]} << (8 * (b % 8));
    return SieveTable::from_bits(lo, hi, std::move(words));
}

std::vector<double> von_mangoldt_range(std::uint64_t lo, std::uint64_t hi) {
    require(lo >= 1 && lo < hi, "von_mangoldt_range: need 1 <= lo < hi");
    std::vector<double> out(hi - lo, 0.0);
    const std::uint64_t start = std::max<std::uint64_t>(lo, 2);
    if (start >= hi) return out;
    const SieveTable table = sieve_primes(start, hi);
    table.for_each_prime([&](std::uint64_t p) { out[p - lo] = std::log(static_cast<double>(p)); });
    for (std::uint32_t p32 : small_primes(isqrt(hi - 1))) {
        const std::uint64_t p = p32;
        const double lp = std::log(static_cast<double>(p));
        for (std::uint64_t pk = p * p; pk < hi; pk *= p) {
            if (pk >= lo) out[pk - lo] = lp;
            if (pk > (hi - 1) / p) break;
        }
    }
    return out;
}

}  // namespace fpl
