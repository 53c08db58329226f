#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace fpl {

// One term of the Heath-Brown identity for a single n:
//   sign * binom * log(d_1) * mu(d_{j+1}) ... mu(d_{2j}),  d_1 ... d_{2j} = n.
struct HBTerm {
    int sign = 1;
    std::uint64_t binom = 1;
    std::vector<std::uint64_t> d;  // length 2j
    double weight = 0.0;           // log d_1 * prod mu
};

struct HBTermList {
    std::uint64_t n = 1;
    int k = 1;
    std::uint64_t v = 1;
    std::vector<HBTerm> terms;
    // Tuples dropped because they vanish: some mu(d_i) = 0 or d_1 = 1.
    std::uint64_t vanishing = 0;

    double total() const;  // sum of sign * binom * weight
};

inline constexpr std::uint64_t kDefaultTermBudget = 20'000'000;

// Explicit enumeration. Reproduces Λ(n) whenever n <= V^k.
HBTermList heath_brown_terms(std::uint64_t n, int k, std::uint64_t v,
                             std::uint64_t term_budget = kDefaultTermBudget);

// Same total via Dirichlet convolutions on the divisor lattice of n
// (log * 1^{*(j-1)} * mu_V^{*j}); no tuple enumeration.
double heath_brown_sum(std::uint64_t n, int k, std::uint64_t v);

enum class SumType { I, II, III };
const char* to_string(SumType t) noexcept;

// Indices are 1-based. Type I: index = {i}. Type II: index = S (T is the
// complement). Type III: index = (i, j, k) ordered by value, ties by index.
struct TypeWitness {
    SumType kind = SumType::I;
    std::vector<int> index;
};

inline constexpr double kBoundarySlack = 1e-12;

// Classification of t (non-negative, summing to 1) at level sigma in (1/10, 1/2).
std::vector<TypeWitness> classify_exponents(const std::vector<double>& t, double sigma);

// Checker that knows only the defining inequalities (same slack).
bool verify_witness(const std::vector<double>& t, double sigma, const TypeWitness& w);

struct DyadicTuple {
    std::vector<double> d;  // D_1..D_{2j}; the second half carries the Möbius variables
    double x1 = 0.0;
    double y1 = 0.0;
    double eps1 = 0.0;
    double v_cap = std::numeric_limits<double>::infinity();  // V * Theta
};

// Thresholds X_1^{3/5+eps1}, X_1^{2/5-eps1}, X_1^{1/5+2 eps1}, compared in
// log_{X_1} exponents. Type I and III look at the first half only.
std::vector<TypeWitness> classify_dyadic(const DyadicTuple& dt);

}  // namespace fpl
