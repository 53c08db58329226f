#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fpl/charkloost.hpp"
#include "fpl/parallel.hpp"
#include "fpl/smoothing.hpp"

namespace fpl {

struct AlphaConstants {
    double alpha = 0.0;
    double beta = 0.0;   // (2 - a) / (1 - a)
    double gamma = 0.0;  // a / (1 - a)
    double delta = 0.0;  // 1 / (1 - a)
    double xi = 0.0;     // (1 - a) / (1 - 2a)
    double eta = 0.0;    // a / (1 - 2a)
    double omega = 0.0;  // (2 - 3a) / (1 - 2a)
};

// 0 < alpha < 1/2.
AlphaConstants alpha_constants(double alpha);

// ---------------------------------------------------------------------------
// Phases and windows
// ---------------------------------------------------------------------------

enum class PhaseKind { first_poisson, second_poisson, generic };

const char* to_string(PhaseKind kind) noexcept;

// g(t) = h (X t)^alpha - X s t / (q u m n)
struct FirstPhaseParams {
    double h = 1.0, x = 1.0, alpha = 0.1;
    double q = 1.0, u = 1.0, m = 1.0, n = 1.0, s = 0.0;
};

// g(tau) = (1 - alpha) h X^alpha tau^gamma - X^(1 - alpha) s sigma tau / (alpha h q^2 u m)
struct SecondPhaseParams {
    double h = 1.0, x = 1.0, alpha = 0.1;
    double q = 1.0, u = 1.0, m = 1.0, s = 1.0, sigma = 0.0;
};

class PhaseModel {
public:
    static PhaseModel first(const FirstPhaseParams& p);
    static PhaseModel second(const SecondPhaseParams& p);
    // sum_k c[k] t^k with exact derivatives.
    static PhaseModel polynomial(std::vector<double> coeffs);
    // Arbitrary phase; derivatives by Richardson differences at step `scale` / 64.
    static PhaseModel generic(std::function<double(double)> f, double scale = 1.0);

    PhaseKind kind() const noexcept { return kind_; }
    const FirstPhaseParams& first_params() const noexcept { return first_; }
    const SecondPhaseParams& second_params() const noexcept { return second_; }

    double value(double t) const;
    // 0 <= order <= 4 for generic phases; any order for the closed forms.
    double derivative(double t, int order) const;

private:
    PhaseKind kind_ = PhaseKind::generic;
    FirstPhaseParams first_;
    SecondPhaseParams second_;
    std::vector<double> poly_;
    std::function<double(double)> fn_;
    double scale_ = 1.0;
};

// Smooth amplitude supported in [lo, hi]. `scale` is the length over which it
// varies (steps for numerical derivatives); `transitions` lists the intervals
// where it is not locally constant, and `breaks` points the quadrature should
// not straddle.
struct WindowModel {
    std::function<double(double)> f;
    double lo = 0.0, hi = 1.0;
    double scale = 0.1;
    std::vector<std::pair<double, double>> transitions;
    std::vector<double> breaks;

    double operator()(double t) const { return (t <= lo || t >= hi) ? 0.0 : f(t); }
};

// psi from the smoothing module: support [1 - delta, y + delta].
WindowModel bump_window_model(const BumpWindow& w);
// Plateau [a, b] with smooth_step ramps of width `ramp` on each side.
WindowModel plateau_window_model(double a, double b, double ramp);

// ---------------------------------------------------------------------------
// Integrals
// ---------------------------------------------------------------------------

enum class OscMethod { quadrature, lemma2_bound, lemma3_expansion };

const char* to_string(OscMethod m) noexcept;

struct OscIntegralResult {
    cplx value;
    OscMethod method = OscMethod::quadrature;
    double error_estimate = 0.0;
    int terms_used = 0;  // panels for quadrature, expansion terms for lemma3
};

inline constexpr int kQuadMaxDepth = 40;

// Adaptive Gauss-Legendre (15 points) of int w(t) e(g(t)) dt over [lo, hi] with
// relative tolerance `tol` against int |w|. Panels are split at stationary points
// and kept below half an oscillation.
OscIntegralResult quad_osc(const WindowModel& w, const PhaseModel& g, double lo, double hi, double tol = 1e-10);

// J_len X_I ((Q_I R_I / sqrt(Y_I))^-A + (R_I V_I)^-A), times `constant`.
double lemma2_bound(double x_i, double v_i, double y_i, double q_i, double r_i, double a_i, double j_len,
                    double constant = 1.0);

// Closed forms for the two structured phases, Newton for the rest. Throws
// not_found when the phase has no stationary point in [lo, hi].
double stationary_point(const PhaseModel& g, double lo, double hi);

struct StationaryValues {
    double t0 = 0.0;
    double value = 0.0;   // g(t0)
    double second = 0.0;  // g''(t0)
};

StationaryValues stationary_values(const PhaseModel& g, double lo, double hi);

// H(t) = g(t) - g(t0) - g''(t0) (t - t0)^2 / 2.
std::function<double(double)> stationary_remainder(const PhaseModel& g, double t0);

// Sum_{n < n_terms} of
//   e(g(t0)) e(-+ i pi / 4) / sqrt|g''| * (+-2i)^-n G^(2n)(t0) / (n! (2 pi |g''|)^n),
// G = w e(H), upper signs for g'' < 0. The error estimate adds a geometric bound
// for the omitted terms, the differencing error and a first-derivative bound for
// every window transition away from t0. If the terms do not decay, or t0 lies in
// a transition narrower than 8 / sqrt|g''|, it falls back to |value| + int |w|.
OscIntegralResult stationary_expand(const WindowModel& w, const PhaseModel& g, double lo, double hi, int n_terms = 1);

// c_nu(alpha) with which the first-phase expansion reads
//   I(s) = e(g(t0)) sum_nu c_nu / (h X^2)^(nu + 1/2) (h q u m n / s)^(beta (nu + 1/2)) G^(2 nu)(t0).
cplx expansion_constant_c(double alpha, int nu);
// b_nu = c_nu / alpha^(beta (nu + 1/2))
cplx expansion_constant_b(double alpha, int nu);

// d^r e(H(t)) / dt^r from the composition formula, given H(t) and H^(k)(t) for k = 1..r.
cplx exp_phase_derivative(double h_value, const std::vector<double>& h_derivs, int r);

// ---------------------------------------------------------------------------
// Truncation windows
// ---------------------------------------------------------------------------

struct TruncationParams {
    double alpha = 0.1, h = 1.0, u = 1.0, m = 1.0, n_size = 1.0, q = 1.0, x = 1.0;
    double s = 1.0;  // dual frequency of the first step, used by T3 and T4
};

struct TruncationWindows {
    double t1 = 0.0, t2 = 0.0, t3 = 0.0, t4 = 0.0;
    bool first_empty = false;   // T2 < 1: no stationary s
    bool second_empty = false;  // T4 < 1: no stationary sigma
};

TruncationWindows truncation_windows(const TruncationParams& p);

// sum over T1 < s < T2, T3 < sigma < T4 (integers) of gcd(s, sigma)^(1/2), and the
// bound zeta(3/2) T2 T4 for it.
double gcd_pair_sum(double t1, double t2, double t3, double t4);
double gcd_pair_bound(double t2, double t4);

// ---------------------------------------------------------------------------
// Poisson summation checks
// ---------------------------------------------------------------------------

struct PoissonConfig {
    double rel_tol = 1e-9;      // quadrature tolerance per integral
    double tail_tol = 1e-9;     // stop once a block of dual terms is below tail_tol * scale
    int block = 3;              // consecutive |s| values that must be small
    int max_dual = 0;           // 0: automatic
    int dual_cap = 2000;        // hard limit for the automatic search
    double lemma2_a = 8.0;      // A_I
    double lemma2_constant = 1.0;
};

struct PoissonCheck {
    cplx lhs;
    cplx rhs;
    double diff = 0.0;      // |lhs - rhs|
    double scale = 0.0;     // max(|lhs|, sum of |dual terms|)
    double rel_diff = 0.0;  // diff / scale
    int dual_max = 0;       // last |s| (or |sigma|) summed
    double tail_estimate = 0.0;  // size of the final block of dual terms
    double lemma2_tail = 0.0;    // non-stationary bound for the unsummed tail
    std::uint64_t lattice_terms = 0;
    double quad_error = 0.0;     // summed quadrature error estimates
    TruncationWindows windows;
};

inline constexpr std::uint64_t kPoissonLatticeBudget = 10'000;

// sum_k chi(k) psi(u m n k / X) e(h (u m n k)^alpha)
//   = X / (q u m n) sum_s tau(chi; s) int psi(t) e(h (X t)^alpha - X s t / (q u m n)) dt.
struct FirstPoissonCase {
    std::uint64_t u = 1, m = 1, n = 1;
    std::size_t chi = 0;
    double h = 1.0;  // 0 allowed: classical Poisson for a smooth lattice sum
    double alpha = 0.1;
    double x = 1e4;
    BumpWindow window{2.0, 0.1, 1.0};
};

PoissonCheck poisson_verify_first(const CharacterTable& chars, const FirstPoissonCase& c,
                                  const PoissonConfig& cfg = {});

// With A(n) = n^(beta/2 - 1) psi(t0(n)), t0(n) = (alpha h q u m n / s)^delta / X:
//   sum_n chi(n) A(n) e((1 - alpha)(alpha^alpha h)^delta (q u m n / s)^gamma)
//   = (kappa / q) sum_sigma tau(chi; sigma) int A(kappa tau) e(g2(tau)) d tau,
// kappa = s X^(1 - alpha) / (alpha h q u m), g2 the second phase.
struct SecondPoissonCase {
    std::uint64_t u = 1, m = 1, s = 1;
    std::size_t chi = 0;
    double h = 1.0;
    double alpha = 0.1;
    double x = 1e4;
    BumpWindow window{2.0, 0.1, 1.0};
};

PoissonCheck poisson_verify_second(const CharacterTable& chars, const SecondPoissonCase& c,
                                   const PoissonConfig& cfg = {});

// The sigma-integral of the second check in the original variable x = kappa tau,
// without the change of variables.
// The validation grid: q in {3, 5, 7, 12}, five variants each mixing alpha in
// {0.05, 0.1}, principal, real and complex characters, X = 10^4. h is chosen so the
// dual windows hold stationary points (T2 = 3 for the first check, T4 = 4 for the
// second); with T2 < 1 and a non-principal character both sides are pure tail noise.
struct PoissonGridCase {
    std::uint64_t q = 3;
    FirstPoissonCase first;
    SecondPoissonCase second;
};

std::vector<PoissonGridCase> poisson_grid();

cplx second_dual_integral_direct(const SecondPoissonCase& c, std::uint64_t q, std::int64_t sigma, double rel_tol);
cplx second_dual_integral_tau(const SecondPoissonCase& c, std::uint64_t q, std::int64_t sigma, double rel_tol);

}  // namespace fpl
