#pragma once

#include <cstdint>
#include <vector>

#include "fpl/arith.hpp"
#include "fpl/parallel.hpp"

namespace fpl {

inline constexpr std::uint64_t kMaxCharacterModulus = 100'000;

// One cyclic factor of (Z/q)^*, living on the prime-power modulus `modulus`.
struct CyclicComponent {
    std::uint64_t modulus = 1;
    std::int64_t generator = 1;  // -1 for the <-1> factor of 2^e
    std::uint32_t order = 1;
    std::vector<std::int32_t> dlog;  // residue mod `modulus` -> exponent, -1 off the units
};

// All Dirichlet characters mod q. Character index i encodes its exponent
// vector in mixed radix over the component orders; index 0 is principal.
class CharacterTable {
public:
    std::uint64_t q() const noexcept { return q_; }
    const FactoredInteger& factorization() const noexcept { return fact_; }
    const std::vector<CyclicComponent>& components() const noexcept { return comps_; }
    std::size_t size() const noexcept { return size_; }  // phi(q)

    std::vector<std::uint32_t> exponents(std::size_t index) const;
    cplx eval(std::size_t index, std::int64_t n) const;
    std::uint64_t order(std::size_t index) const;
    bool is_primitive(std::size_t index) const;

    friend CharacterTable character_group(std::uint64_t q);

private:
    std::uint64_t q_ = 0;
    FactoredInteger fact_;
    std::vector<CyclicComponent> comps_;
    std::size_t size_ = 1;
    std::uint64_t lcm_order_ = 1;
    std::vector<cplx> roots_;  // roots_[k] = e(k / lcm_order_)
    // Per residue n mod q: the combined component logs, or -1 when gcd(n, q) > 1.
    // Stored per component so evaluation is one pass over the exponent vector.
    std::vector<std::vector<std::int32_t>> log_by_residue_;
};

CharacterTable character_group(std::uint64_t q);

cplx chi_eval(const CharacterTable& t, std::size_t index, std::int64_t n);

// tau(chi; s) = sum_{l mod q} chi(l) e(s l / q).
cplx gauss_sum(const CharacterTable& t, std::size_t index, std::int64_t s);

// Full value matrix [index][n mod q] for hot loops.
std::vector<std::vector<cplx>> character_values(const CharacterTable& t);

// (1/phi(q)) sum_chi chi(m) conj(chi(a)); requires gcd(a, q) = 1.
double orthogonality_project(const CharacterTable& t, std::int64_t a, std::int64_t m);

// (1/phi(q)) sum_chi chi(c) tau(chi; s) tau(chi; sigma); equals S_q(s, sigma c^*).
cplx character_average(const CharacterTable& t, std::int64_t c, std::int64_t s, std::int64_t sigma);

struct KloostermanValue {
    std::uint64_t q = 0;
    std::int64_t u = 0, v = 0;
    double value = 0.0;
    double imag_residual = 0.0;
    double weil_bound = 0.0;
};

// tau(q) sqrt(q) gcd(u, v, q)^(1/2)
double weil_bound(std::uint64_t q, std::int64_t u, std::int64_t v);

// S_q(u, v) = sum_{(l, q) = 1} e((u l + v l^*) / q).
KloostermanValue kloosterman(std::uint64_t q, std::int64_t u, std::int64_t v);

// S_q(u, v) for every v in [0, q): real and imaginary parts.
struct KloostermanRow {
    std::vector<double> re;
    std::vector<double> im;
};
KloostermanRow kloosterman_row(std::uint64_t q, std::int64_t u);

// weil_bound - |S_q(u, v)|; negative means the bound failed.
double weil_margin(std::uint64_t q, std::int64_t u, std::int64_t v);

// Inverses of all units mod q (0 elsewhere) by one batch inversion.
std::vector<std::uint64_t> unit_inverses(std::uint64_t q);

}  // namespace fpl
