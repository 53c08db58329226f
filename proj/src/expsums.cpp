#include "fpl/expsums.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fpl/ddouble.hpp"
#include "fpl/error.hpp"

namespace fpl {

namespace {

// Fixed block width for prime-range work: the reduction shape depends on it
// and on nothing else.
constexpr std::uint64_t kBlock = std::uint64_t{1} << 16;

const SieveTable& primes_upto_ref(std::uint64_t x, const SieveTable* cached, SieveTable& storage) {
    if (cached && cached->lo() <= 2 && cached->hi() >= x + 1) return *cached;
    storage = sieve_primes(2, x + 1);
    return storage;
}

}  // namespace

cplx unit_phase(double turns) noexcept {
    double f = turns - std::floor(turns);
    const double ang = 2.0 * std::numbers::pi * f;
    return {std::cos(ang), std::sin(ang)};
}

void validate(const ExpSumSpec& s) {
    require(s.x >= 2, "ExpSumSpec: X must be >= 2");
    require(s.x < s.y && s.y <= 2 * s.x, "ExpSumSpec: need X < Y <= 2X");
    require(s.alpha > 0.0 && s.alpha < 1.0, "ExpSumSpec: alpha must lie in (0, 1)");
    require(s.q >= 1, "ExpSumSpec: q must be >= 1");
    require(s.a < s.q, "ExpSumSpec: a must lie in [0, q-1]");
    require(s.q == 1 || gcd_u64(s.a, s.q) == 1, "ExpSumSpec: gcd(a, q) must be 1");
    require(s.h != 0 || s.allow_zero_h, "ExpSumSpec: h must be non-zero");
    const double cap = std::pow(std::log(static_cast<double>(s.x)), s.log_power_cap);
    require(std::abs(static_cast<double>(s.h)) <= cap, "ExpSumSpec: |h| exceeds (log X)^C");
}

ExpSumResult exp_sum_primes(const ExpSumSpec& spec) {
    validate(spec);
    const SieveTable table = sieve_primes(spec.x, spec.y);
    const std::uint64_t n_blocks = (spec.y - spec.x + kBlock - 1) / kBlock;
    std::vector<cplx> partial(n_blocks);
    std::vector<std::uint64_t> counts(n_blocks, 0);
    parallel_for(n_blocks, [&](std::size_t b) {
        const std::uint64_t from = spec.x + b * kBlock;
        const std::uint64_t to = std::min(spec.y, from + kBlock);
        std::vector<cplx> terms;
        table.for_each_prime(from, to, [&](std::uint64_t p) {
            if (p % spec.q != spec.a) return;
            terms.push_back(unit_phase(power_phase_frac(spec.h, p, spec.alpha)));
        });
        counts[b] = terms.size();
        partial[b] = pairwise_sum(std::span<const cplx>(terms));
    });
    ExpSumResult out;
    out.value = pairwise_sum(std::span<const cplx>(partial));
    for (std::uint64_t c : counts) out.count += c;
    return out;
}

WeightedSum weighted_sum_W(const ExpSumSpec& spec, const BumpWindow& w) {
    validate(spec);
    const double xd = static_cast<double>(spec.x);
    const double ratio = static_cast<double>(spec.y) / xd;
    require(std::abs(w.y - ratio) <= 1e-12 * ratio, "weighted_sum_W: window plateau must be [1, Y/X]");
    const auto lo = std::max<std::uint64_t>(2, static_cast<std::uint64_t>(std::ceil((1.0 - w.delta) * xd)));
    const auto hi = static_cast<std::uint64_t>(std::floor((w.y + w.delta) * xd));
    const std::vector<double> lambda = von_mangoldt_range(lo, hi + 1);

    std::vector<cplx> smooth_terms, sharp_terms;
    WeightedSum out;
    for (std::uint64_t n = lo; n <= hi; ++n) {
        const double lam = lambda[n - lo];
        if (lam == 0.0 || n % spec.q != spec.a) continue;
        const cplx e = lam * unit_phase(power_phase_frac(spec.h, n, spec.alpha));
        const double psi = eval_bump(w, static_cast<double>(n) / xd);
        if (psi != 0.0) smooth_terms.push_back(psi * e);
        if (n >= spec.x && n <= spec.y) {
            sharp_terms.push_back(e);
        } else {
            out.transition_mass += lam;
        }
    }
    out.smoothed = pairwise_sum(std::span<const cplx>(smooth_terms));
    out.sharp = pairwise_sum(std::span<const cplx>(sharp_terms));
    return out;
}

bool FracWindow::contains(std::uint64_t n) const noexcept {
    const double f = power_phase_frac(1, n, alpha);
    return f >= c && f < d;
}

FracWindow make_frac_window(double alpha, double c, double d) {
    require(alpha > 0.0 && alpha < 1.0, "FracWindow: alpha must lie in (0, 1)");
    require(c >= 0.0 && c < d && d <= 1.0, "FracWindow: need 0 <= c < d <= 1");
    return {alpha, c, d};
}

std::uint64_t count_pi_I(std::uint64_t x, std::uint64_t q, std::uint64_t a, const FracWindow& win,
                         const SieveTable* primes) {
    require(x >= 2, "count_pi_I: X must be >= 2");
    require(q >= 1 && a < q, "count_pi_I: need 0 <= a < q");
    require(q == 1 || gcd_u64(a, q) == 1, "count_pi_I: gcd(a, q) must be 1");
    SieveTable storage;
    const SieveTable& table = primes_upto_ref(x, primes, storage);
    const std::uint64_t n_blocks = (x + 1 - 2 + kBlock - 1) / kBlock;
    std::vector<std::uint64_t> counts(n_blocks, 0);
    parallel_for(n_blocks, [&](std::size_t b) {
        const std::uint64_t from = 2 + b * kBlock;
        const std::uint64_t to = std::min(x + 1, from + kBlock);
        std::uint64_t c = 0;
        table.for_each_prime(from, to, [&](std::uint64_t p) {
            if (p % q == a && win.contains(p)) ++c;
        });
        counts[b] = c;
    });
    std::uint64_t total = 0;
    for (std::uint64_t c : counts) total += c;
    return total;
}

ResidueTable residue_counts(std::uint64_t x, std::uint64_t q_max, const FracWindow& win,
                            const SieveTable* primes) {
    require(x >= 2, "residue_counts: X must be >= 2");
    require(q_max >= 1, "residue_counts: q_max must be >= 1");
    SieveTable storage;
    const SieveTable& table = primes_upto_ref(x, primes, storage);

    auto empty_table = [q_max] {
        std::vector<std::vector<std::uint64_t>> t(q_max + 1);
        for (std::uint64_t q = 1; q <= q_max; ++q) t[q].assign(q, 0);
        return t;
    };
    // Coarser blocks here: each one carries its own O(q_max^2) table.
    constexpr std::uint64_t kResidueBlock = std::uint64_t{1} << 20;
    const std::uint64_t n_blocks = (x - 1 + kResidueBlock - 1) / kResidueBlock;
    std::vector<std::vector<std::vector<std::uint64_t>>> all(n_blocks), window(n_blocks);
    parallel_for(n_blocks, [&](std::size_t b) {
        all[b] = empty_table();
        window[b] = empty_table();
        const std::uint64_t from = 2 + b * kResidueBlock;
        const std::uint64_t to = std::min(x + 1, from + kResidueBlock);
        table.for_each_prime(from, to, [&](std::uint64_t p) {
            const bool in = win.contains(p);
            for (std::uint64_t q = 1; q <= q_max; ++q) {
                const std::uint64_t r = p % q;
                ++all[b][q][r];
                if (in) ++window[b][q][r];
            }
        });
    });

    ResidueTable out;
    out.x = x;
    out.q_max = q_max;
    out.all = empty_table();
    out.window = empty_table();
    for (std::uint64_t b = 0; b < n_blocks; ++b)
        for (std::uint64_t q = 1; q <= q_max; ++q)
            for (std::uint64_t r = 0; r < q; ++r) {
                out.all[q][r] += all[b][q][r];
                out.window[q][r] += window[b][q][r];
            }
    out.total_all = out.all[1][0];
    out.total_window = out.window[1][0];
    return out;
}

DiscrepancyReport bv_discrepancy(std::uint64_t x, std::uint64_t q_max, const FracWindow& win,
                                 bool prime_moduli_only, const SieveTable* primes) {
    require(q_max > 2, "bv_discrepancy: Q must exceed 2");
    require(q_max < x, "bv_discrepancy: Q must be below X");
    const ResidueTable t = residue_counts(x, q_max, win, primes);
    DiscrepancyReport rep;
    rep.x = x;
    rep.q_max = q_max;
    rep.alpha = win.alpha;
    rep.c = win.c;
    rep.d = win.d;
    rep.pi_all = t.total_all;
    rep.pi_window = t.total_window;
    for (std::uint64_t q = 1; q <= q_max; ++q) {
        if (prime_moduli_only && !is_prime_u64(q)) continue;
        const double expected = static_cast<double>(t.total_window) / static_cast<double>(euler_phi(q));
        DiscrepancyRow row{q, 0, -1.0};
        for (std::uint64_t a = 0; a < q; ++a) {
            if (gcd_u64(a, q) != 1) continue;
            const double dev = std::abs(static_cast<double>(t.window[q][a]) - expected);
            if (dev > row.deviation) {
                row.deviation = dev;
                row.worst_a = a;
            }
        }
        rep.per_q.push_back(row);
    }
    std::vector<double> devs;
    for (const auto& r : rep.per_q) devs.push_back(r.deviation);
    rep.total = pairwise_sum(std::span<const double>(devs));
    return rep;
}

// ---------------------------------------------------------------------------

double MonomialPhase::operator()(double x) const noexcept { return coeff * std::pow(x + shift, exponent); }

double MonomialPhase::second_derivative(double x) const noexcept {
    return coeff * exponent * (exponent - 1.0) * std::pow(x + shift, exponent - 2.0);
}

bool MonomialPhase::degenerate() const noexcept { return coeff == 0.0 || exponent == 0.0 || exponent == 1.0; }

VdcBound vdc_bound(const MonomialPhase& f, double constant) {
    require(f.lo <= f.hi, "vdc_bound: empty range");
    require(f.lo + f.shift > 0.0, "vdc_bound: x + shift must stay positive");
    require(constant > 0.0, "vdc_bound: constant must be positive");
    VdcBound out;
    if (f.degenerate()) {
        out.degenerate = true;
        out.bound = std::max(0.0, std::floor(f.hi) - std::ceil(f.lo) + 1.0);
        return out;
    }
    const double a0 = f.lo + f.shift, b0 = f.hi + f.shift;
    const double p = std::abs(f.exponent - 2.0);
    int pieces = 1;
    if (p > 0.0 && b0 > a0) {
        // |f''| ratio on a piece [u, v] is (v/u)^p; want <= 4.
        pieces = std::max(1, static_cast<int>(std::ceil(p * std::log(b0 / a0) / std::log(4.0) - 1e-12)));
    }
    if (pieces > kMaxVdcPieces)
        throw Error(ErrorKind::needs_subdivision, "vdc_bound: |f''| ratio still above 4 after 64 pieces");
    out.pieces = pieces;
    out.lambda_min = std::min(std::abs(f.second_derivative(f.lo)), std::abs(f.second_derivative(f.hi)));
    out.lambda_max = std::max(std::abs(f.second_derivative(f.lo)), std::abs(f.second_derivative(f.hi)));
    double total = 0.0;
    for (int i = 0; i < pieces; ++i) {
        const double u = a0 * std::pow(b0 / a0, static_cast<double>(i) / pieces) - f.shift;
        const double v = i + 1 == pieces ? f.hi : a0 * std::pow(b0 / a0, static_cast<double>(i + 1) / pieces) - f.shift;
        const double l1 = std::abs(f.second_derivative(u)), l2 = std::abs(f.second_derivative(v));
        total += (v - u) * std::sqrt(std::max(l1, l2)) + 1.0 / std::sqrt(std::min(l1, l2));
    }
    out.bound = constant * total;
    return out;
}

cplx phase_sum(const MonomialPhase& f) {
    require(f.lo <= f.hi, "phase_sum: empty range");
    const auto first = static_cast<std::int64_t>(std::ceil(f.lo));
    const auto last = static_cast<std::int64_t>(std::floor(f.hi));
    std::vector<cplx> terms;
    terms.reserve(last >= first ? last - first + 1 : 0);
    for (std::int64_t r = first; r <= last; ++r) terms.push_back(unit_phase(f(static_cast<double>(r))));
    return pairwise_sum(std::span<const cplx>(terms));
}

// ---------------------------------------------------------------------------

BilinearResult bilinear_sum(const BilinearSpec& s) {
    require(s.gamma && s.beta, "bilinear_sum: coefficient callbacks required");
    require(s.m_lo >= 1 && s.m_lo <= s.m_hi && s.n_lo >= 1 && s.n_lo <= s.n_hi, "bilinear_sum: bad ranges");
    require(s.q >= 1 && s.a < s.q, "bilinear_sum: need 0 <= a < q");
    require(s.alpha >= 0.0 && s.alpha < 1.0, "bilinear_sum: alpha must lie in [0, 1)");
    require(s.x > 0.0, "bilinear_sum: X must be positive");
    const std::uint64_t nm = s.m_hi - s.m_lo + 1, nn = s.n_hi - s.n_lo + 1;
    if (nm * nn > kBilinearBudget) throw_resource("bilinear_sum: more than 10^6 terms");
    if (s.with_off_diagonal && nm * nn * nn / 2 > 50 * kBilinearBudget)
        throw_resource("bilinear_sum: off-diagonal term count too large");

    std::vector<cplx> beta(nn);
    for (std::uint64_t j = 0; j < nn; ++j) beta[j] = s.beta(s.n_lo + j);

    std::vector<cplx> outer(nm), off(nm);
    std::vector<double> g2(nm), inner2(nm), diag(nm);
    parallel_for(nm, [&](std::size_t i) {
        const std::uint64_t m = s.m_lo + i;
        const cplx g = s.gamma(m);
        std::vector<cplx> terms;
        std::vector<double> diag_terms;
        // (index, psi, phase) for the entries that survive the congruence and window
        std::vector<std::uint64_t> idx;
        std::vector<double> psi_v, phase_v;
        for (std::uint64_t j = 0; j < nn; ++j) {
            const std::uint64_t n = s.n_lo + j;
            const std::uint64_t mn = m * n;
            if (mn % s.q != s.a) continue;
            const double psi = eval_bump(s.window, static_cast<double>(mn) / s.x);
            if (psi == 0.0) continue;
            const double ph = s.alpha == 0.0 ? 0.0 : power_phase_frac(s.h, mn, s.alpha);
            terms.push_back(beta[j] * psi * unit_phase(ph));
            diag_terms.push_back(std::norm(beta[j]) * psi * psi);
            idx.push_back(j);
            psi_v.push_back(psi);
            phase_v.push_back(ph);
        }
        const cplx inner = pairwise_sum(std::span<const cplx>(terms));
        outer[i] = g * inner;
        g2[i] = std::norm(g);
        inner2[i] = std::norm(inner);
        diag[i] = pairwise_sum(std::span<const double>(diag_terms));
        if (s.with_off_diagonal) {
            std::vector<cplx> o;
            for (std::size_t u = 0; u < idx.size(); ++u)
                for (std::size_t v = u + 1; v < idx.size(); ++v)
                    o.push_back(beta[idx[u]] * std::conj(beta[idx[v]]) * psi_v[u] * psi_v[v] *
                                unit_phase(phase_v[u] - phase_v[v]));
            off[i] = pairwise_sum(std::span<const cplx>(o));
        }
    });
    BilinearResult r;
    r.value = pairwise_sum(std::span<const cplx>(outer));
    r.gamma_l2 = pairwise_sum(std::span<const double>(g2));
    r.inner_l2 = pairwise_sum(std::span<const double>(inner2));
    r.diagonal = pairwise_sum(std::span<const double>(diag));
    if (s.with_off_diagonal) {
        r.off_diagonal = pairwise_sum(std::span<const cplx>(off));
        r.has_off_diagonal = true;
    }
    return r;
}

LevelOfDistribution level_of_distribution(double alpha) {
    return {0.4 - 0.6 * alpha, alpha > 0.0 && alpha < 1.0 / 9.0};
}

TauMomentFit fit_tau_moment(std::uint64_t x, unsigned k) {
    require(x >= 4, "fit_tau_moment: x must be >= 4");
    require(k >= 1, "fit_tau_moment: k must be >= 1");
    TauMomentFit out;
    double cumulative = 0.0;
    std::uint64_t next = 4;
    for (std::uint64_t n = 1; n <= x; ++n) {
        cumulative += static_cast<double>(tau_k(n, k));
        if (n == next) {
            const double xd = static_cast<double>(n);
            const double ratio = cumulative / (xd * std::pow(std::log(xd), static_cast<double>(k) - 1.0));
            out.ratios.emplace_back(n, ratio);
            out.constant = std::max(out.constant, ratio);
            next *= 2;
        }
    }
    return out;
}

}  // namespace fpl
