#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fpl/arith.hpp"
#include "fpl/parallel.hpp"
#include "fpl/smoothing.hpp"

namespace fpl {

// e(x) = exp(2 pi i x), argument taken mod 1 first.
cplx unit_phase(double turns) noexcept;

struct ExpSumSpec {
    std::uint64_t x = 0;
    std::uint64_t y = 0;
    std::int64_t h = 1;  // negative allowed (conjugate sums)
    double alpha = 0.1;
    std::uint64_t q = 1;
    std::uint64_t a = 0;
    double log_power_cap = 6.0;  // |h| <= (log X)^C
    bool allow_zero_h = false;
};

void validate(const ExpSumSpec& spec);

struct ExpSumResult {
    cplx value;
    std::uint64_t count = 0;
};

// Sum of e(h p^alpha) over primes X <= p < Y, p = a (mod q).
ExpSumResult exp_sum_primes(const ExpSumSpec& spec);

struct WeightedSum {
    cplx smoothed;             // sum psi(n/X) Λ(n) e(h n^alpha)
    cplx sharp;                // same over X <= n <= Y without psi
    double transition_mass = 0.0;  // sum of Λ(n) with n/X in the two transition bands
};

// The window plateau must be [1, Y/X].
WeightedSum weighted_sum_W(const ExpSumSpec& spec, const BumpWindow& window);

struct FracWindow {
    double alpha = 0.1;
    double c = 0.0;
    double d = 0.5;

    bool contains(std::uint64_t n) const noexcept;
    double length() const noexcept { return d - c; }
};

FracWindow make_frac_window(double alpha, double c, double d);

// #{p <= X : frac(p^alpha) in [c, d), p = a (mod q)}. `primes` may supply a
// prebuilt table covering [2, X]; otherwise one is sieved.
std::uint64_t count_pi_I(std::uint64_t x, std::uint64_t q, std::uint64_t a, const FracWindow& win,
                         const SieveTable* primes = nullptr);

// Prime counts below X bucketed by residue for every modulus q <= q_max.
struct ResidueTable {
    std::uint64_t x = 0;
    std::uint64_t q_max = 0;
    std::uint64_t total_all = 0;     // pi(X)
    std::uint64_t total_window = 0;  // pi_I(X)
    // [q][a] for 1 <= q <= q_max; index 0 unused
    std::vector<std::vector<std::uint64_t>> all;
    std::vector<std::vector<std::uint64_t>> window;
};

ResidueTable residue_counts(std::uint64_t x, std::uint64_t q_max, const FracWindow& win,
                            const SieveTable* primes = nullptr);

struct DiscrepancyRow {
    std::uint64_t q = 0;
    std::uint64_t worst_a = 0;
    double deviation = 0.0;  // max over (a, q) = 1 of |pi_I(X; q, a) - pi_I(X) / phi(q)|
};

struct DiscrepancyReport {
    std::uint64_t x = 0;
    std::uint64_t q_max = 0;
    double alpha = 0.0, c = 0.0, d = 0.0;
    std::uint64_t pi_all = 0;
    std::uint64_t pi_window = 0;
    std::vector<DiscrepancyRow> per_q;
    double total = 0.0;
};

// Sum over q <= Q (or prime q <= Q only) of the per-modulus worst deviation.
DiscrepancyReport bv_discrepancy(std::uint64_t x, std::uint64_t q_max, const FracWindow& win,
                                 bool prime_moduli_only = false, const SieveTable* primes = nullptr);

// ---------------------------------------------------------------------------
// van der Corput second-derivative test
// ---------------------------------------------------------------------------

// f(x) = coeff * (x + shift)^exponent on [lo, hi].
struct MonomialPhase {
    double coeff = 1.0;
    double shift = 0.0;
    double exponent = 0.5;
    double lo = 1.0;
    double hi = 2.0;

    double operator()(double x) const noexcept;
    double second_derivative(double x) const noexcept;
    bool degenerate() const noexcept;  // f'' identically zero
};

inline constexpr double kDefaultVdcConstant = 8.0;
inline constexpr int kMaxVdcPieces = 64;

struct VdcBound {
    double bound = 0.0;
    double lambda_min = 0.0;  // over the whole range
    double lambda_max = 0.0;
    int pieces = 0;
    bool degenerate = false;  // f'' == 0: bound falls back to the term count
};

// Splits [lo, hi] geometrically until max|f''| / min|f''| <= 4 on every piece,
// then adds C * ((b - a) sqrt(lambda_max) + 1 / sqrt(lambda_min)) per piece.
VdcBound vdc_bound(const MonomialPhase& phase, double constant = kDefaultVdcConstant);

// Sum of e(f(r)) over integers lo <= r <= hi.
cplx phase_sum(const MonomialPhase& phase);

// ---------------------------------------------------------------------------
// Bilinear (Type II) sums
// ---------------------------------------------------------------------------

struct BilinearSpec {
    std::uint64_t m_lo = 1, m_hi = 1;  // inclusive
    std::uint64_t n_lo = 1, n_hi = 1;  // inclusive
    std::function<cplx(std::uint64_t)> gamma;
    std::function<cplx(std::uint64_t)> beta;
    std::uint64_t q = 1;
    std::uint64_t a = 0;
    std::int64_t h = 1;
    double alpha = 0.1;  // 0 allowed (no oscillation)
    double x = 1.0;      // psi is evaluated at mn / x
    BumpWindow window;
    bool with_off_diagonal = false;  // direct S(M, N), O(M N^2)
};

inline constexpr std::uint64_t kBilinearBudget = 1'000'000;

struct BilinearResult {
    cplx value;
    double gamma_l2 = 0.0;   // sum |gamma(m)|^2
    double inner_l2 = 0.0;   // sum_m |inner(m)|^2
    double diagonal = 0.0;   // sum_m sum_n |beta(n)|^2 psi^2(mn/x)
    cplx off_diagonal;       // S(M, N); inner_l2 = diagonal + 2 Re S
    bool has_off_diagonal = false;
};

BilinearResult bilinear_sum(const BilinearSpec& spec);

struct LevelOfDistribution {
    double theta = 0.0;
    bool in_scope = true;  // 0 < alpha < 1/9
};

LevelOfDistribution level_of_distribution(double alpha);

// Fitted c with sum_{n <= x'} tau_k(n) <= c x' (log x')^(k-1) at x' = 2^i <= x.
struct TauMomentFit {
    double constant = 0.0;
    std::vector<std::pair<std::uint64_t, double>> ratios;  // (x', ratio)
};

TauMomentFit fit_tau_moment(std::uint64_t x, unsigned k);

}  // namespace fpl
