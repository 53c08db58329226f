#include "fpl/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <vector>

#include "fpl/arith.hpp"
#include "fpl/charkloost.hpp"
#include "fpl/decomp.hpp"
#include "fpl/error.hpp"
#include "fpl/expsums.hpp"
#include "fpl/oscillatory.hpp"
#include "fpl/parallel.hpp"
#include "fpl/smoothing.hpp"

namespace fpl {

std::uint64_t fnv1a64(const std::string& text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t CriterionResult::digest() const noexcept { return fnv1a64(payload); }

namespace {

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

std::string g17(double v) { return fmt("%.17g", v); }

bool quick(AcceptanceScale s) { return s == AcceptanceScale::quick; }

// ---------------------------------------------------------------------------

void heath_brown_exactness(CriterionResult& r, AcceptanceScale scale) {
    const std::uint64_t n_max = quick(scale) ? 300 : 3000;
    std::vector<double> totals(n_max + 1, 0.0);
    parallel_for(n_max - 1, [&](std::size_t i) {
        const std::uint64_t n = i + 2;
        const auto v = static_cast<std::uint64_t>(std::ceil(std::pow(static_cast<double>(n), 0.2))) + 1;
        totals[n] = heath_brown_terms(n, 5, v).total();
    });
    double worst = 0.0;
    std::uint64_t worst_n = 2;
    for (std::uint64_t n = 2; n <= n_max; ++n) {
        const double res = std::abs(totals[n] - von_mangoldt(n));
        if (res > worst) worst = res, worst_n = n;
        r.payload += g17(totals[n]) + "\n";
    }
    r.passed = worst <= 1e-9;
    r.summary = fmt("n in [2, %llu], k = 5: max |sum - Lambda(n)| = %.3g at n = %llu", (unsigned long long)n_max,
                    worst, (unsigned long long)worst_n);
}

void classifier(CriterionResult& r, AcceptanceScale scale) {
    const int samples = quick(scale) ? 1000 : 10'000;
    std::mt19937_64 rng(20240501);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::exponential_distribution<double> ex(1.0);
    int empty = 0, type3_high = 0, unverified = 0;
    for (int it = 0; it < samples; ++it) {
        const int n = 1 + static_cast<int>(rng() % 10);
        std::vector<double> t(n);
        double s = 0.0;
        for (double& x : t) s += (x = ex(rng));
        for (double& x : t) x /= s;
        const double sigma = 0.1 + 1e-9 + u(rng) * (0.4 - 2e-9);
        const auto ws = classify_exponents(t, sigma);
        empty += ws.empty();
        for (const TypeWitness& w : ws) {
            if (w.kind == SumType::III && sigma > 1.0 / 6.0) ++type3_high;
            if (!verify_witness(t, sigma, w)) ++unverified;
            r.payload += to_string(w.kind);
            for (int i : w.index) r.payload += fmt(" %d", i);
            r.payload += ";";
        }
        r.payload += "\n";
    }
    r.passed = empty == 0 && type3_high == 0 && unverified == 0;
    r.summary = fmt("%d tuples: empty = %d, type III with sigma > 1/6 = %d, unverified witnesses = %d", samples,
                    empty, type3_high, unverified);
}

void partition_of_unity(CriterionResult& r, AcceptanceScale scale) {
    const int samples = quick(scale) ? 1000 : 10'000;
    double worst = 0.0;
    for (double theta : {1.01, 1.3, 2.0}) {
        const int max_power = theta < 1.1 ? 1400 : 40;
        const DyadicPartition p = make_partition(theta, 2.0, max_power);
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(0.0, std::log(std::pow(theta, max_power - 1)));
        for (int i = 0; i < samples; ++i) {
            const double x = std::exp(u(rng));
            const double s = partition_sum(p, x);
            worst = std::max(worst, std::abs(s - 1.0));
            r.payload += g17(s) + "\n";
        }
    }
    r.passed = worst <= 1e-12;
    r.summary = fmt("%d points for each theta in {1.01, 1.3, 2}: max |sum - 1| = %.3g", samples, worst);
}

void weil(CriterionResult& r, AcceptanceScale scale) {
    const std::uint64_t q_max = quick(scale) ? 61 : 499;
    std::vector<std::uint64_t> primes;
    for (std::uint64_t q = 2; q <= q_max; ++q)
        if (is_prime_u64(q)) primes.push_back(q);
    std::uint64_t pairs = 0, violations = 0;
    double min_margin = 1e300;
    for (std::uint64_t q : primes) {
        std::vector<double> row_min(q, 1e300);
        std::vector<std::uint64_t> row_bad(q, 0);
        parallel_for(q, [&](std::size_t u) {
            const KloostermanRow row = kloosterman_row(q, static_cast<std::int64_t>(u));
            for (std::uint64_t v = 0; v < q; ++v) {
                const double m = weil_bound(q, static_cast<std::int64_t>(u), static_cast<std::int64_t>(v)) -
                                 std::hypot(row.re[v], row.im[v]);
                row_min[u] = std::min(row_min[u], m);
                row_bad[u] += m < 0.0;
            }
        });
        double qmin = 1e300;
        for (std::uint64_t u = 0; u < q; ++u) {
            qmin = std::min(qmin, row_min[u]);
            violations += row_bad[u];
        }
        pairs += q * q;
        min_margin = std::min(min_margin, qmin);
        r.payload += fmt("%llu ", (unsigned long long)q) + g17(qmin) + "\n";
    }
    const KloostermanValue s311 = kloosterman(3, 1, 1);
    r.payload += g17(s311.value) + "\n";
    const bool s3_ok = std::abs(s311.value + 1.0) <= 1e-12 && std::abs(s311.imag_residual) <= 1e-12;
    r.passed = violations == 0 && s3_ok;
    r.summary = fmt("%zu primes q <= %llu, %llu pairs: violations = %llu, min margin = %.4g; S_3(1,1) = %.15g",
                    primes.size(), (unsigned long long)q_max, (unsigned long long)pairs,
                    (unsigned long long)violations, min_margin, s311.value);
}

void orthogonality(CriterionResult& r, AcceptanceScale scale) {
    const std::uint64_t q_max = quick(scale) ? 40 : 200;
    std::vector<double> worst(q_max + 1, 0.0);
    std::vector<std::uint64_t> checks(q_max + 1, 0);
    parallel_for(q_max - 2, [&](std::size_t i) {
        const std::uint64_t q = i + 3;
        const CharacterTable t = character_group(q);
        for (std::uint64_t a = 1; a < q; ++a) {
            if (gcd_u64(a, q) != 1) continue;
            for (std::uint64_t m = 0; m < q; ++m) {
                const double p = orthogonality_project(t, static_cast<std::int64_t>(a), static_cast<std::int64_t>(m));
                const double want = m == a ? 1.0 : 0.0;
                worst[q] = std::max(worst[q], std::abs(p - want));
                ++checks[q];
            }
        }
    });
    double w = 0.0;
    std::uint64_t total = 0;
    for (std::uint64_t q = 3; q <= q_max; ++q) {
        w = std::max(w, worst[q]);
        total += checks[q];
        r.payload += g17(worst[q]) + "\n";
    }
    r.passed = w <= 1e-10;
    r.summary = fmt("q in [3, %llu], %llu projections: max distance from {0, 1} = %.3g", (unsigned long long)q_max,
                    (unsigned long long)total, w);
}

void poisson(CriterionResult& r, AcceptanceScale scale) {
    std::vector<PoissonGridCase> grid = poisson_grid();
    if (quick(scale)) grid = {grid[1], grid[13]};
    double worst1 = 0.0, worst2 = 0.0;
    for (const PoissonGridCase& c : grid) {
        const CharacterTable chars = character_group(c.q);
        const PoissonCheck a = poisson_verify_first(chars, c.first);
        const PoissonCheck b = poisson_verify_second(chars, c.second);
        worst1 = std::max(worst1, a.rel_diff);
        worst2 = std::max(worst2, b.rel_diff);
        r.payload += g17(a.lhs.real()) + " " + g17(a.lhs.imag()) + " " + g17(a.rhs.real()) + " " +
                     g17(a.rhs.imag()) + " " + g17(b.lhs.real()) + " " + g17(b.lhs.imag()) + " " +
                     g17(b.rhs.real()) + " " + g17(b.rhs.imag()) + "\n";
    }
    r.passed = worst1 <= 1e-5 && worst2 <= 1e-5;
    r.summary = fmt("%zu cases, X = 10^4: max rel diff first = %.3g, second = %.3g", grid.size(), worst1, worst2);
}

void stationary_phase(CriterionResult& r, AcceptanceScale) {
    const WindowModel w = plateau_window_model(-0.5, 0.5, 0.05);
    std::vector<double> rel;
    for (double y : {50.0, 200.0, 800.0}) {
        const PhaseModel g = PhaseModel::polynomial({0.0, 0.0, -y / 2.0});
        const OscIntegralResult lead = stationary_expand(w, g, w.lo, w.hi, 1);
        const OscIntegralResult quad = quad_osc(w, g, w.lo, w.hi, 1e-12);
        rel.push_back(std::abs(lead.value - quad.value) / std::abs(quad.value));
        r.payload += g17(lead.value.real()) + " " + g17(lead.value.imag()) + " " + g17(quad.value.real()) + " " +
                     g17(quad.value.imag()) + "\n";
    }
    const PhaseModel g = PhaseModel::first({1.0, 100.0, 0.5, 3.0, 1.0, 2.0, 5.0, 1.0});
    const double t0 = stationary_point(g, 0.5, 3.0);
    const double residual = std::abs(g.derivative(t0, 1)) / (std::abs(g.derivative(t0, 2)) * t0);
    r.payload += g17(t0) + "\n";
    r.passed = rel[0] <= 0.05 && rel[1] < rel[0] && rel[2] < rel[1] && residual <= 1e-10 &&
               std::abs(t0 - 2.25) <= 1e-12;
    r.summary = fmt("1-term rel error at Y = 50, 200, 800: %.3g, %.3g, %.3g; t0 = %.15g, residual = %.3g", rel[0],
                    rel[1], rel[2], t0, residual);
}

void van_der_corput(CriterionResult& r, AcceptanceScale scale) {
    const int cases = quick(scale) ? 40 : 200;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    int violations = 0;
    double worst = 0.0, least_margin = 1e300;
    for (int it = 0; it < cases; ++it) {
        const double alpha = 0.02 + 0.09 * u01(rng);
        const double q = 1 + static_cast<double>(rng() % 30);
        const double xi = std::floor(u01(rng) * q) / q;
        double coeff;
        if (it % 2 == 0) {
            // f_I: h (u q (r - xi))^alpha shape
            const double h = 1 + static_cast<double>(rng() % 5), u = 1 + static_cast<double>(rng() % 200);
            coeff = h * std::pow(u * q, alpha);
        } else {
            // f_II: h (n1^alpha - n2^alpha) (q (r - xi))^alpha shape
            const double h = 1 + static_cast<double>(rng() % 5);
            const double n1 = 10 + static_cast<double>(rng() % 500);
            const double n2 = n1 + q * (1 + static_cast<double>(rng() % 20));
            coeff = h * (std::pow(n1, alpha) - std::pow(n2, alpha)) * std::pow(q, alpha);
        }
        const double r1 = 200.0 + 20'000.0 * u01(rng);
        const MonomialPhase f{coeff, xi, alpha, r1 / q - xi, 2 * r1 / q - xi};
        const double s = std::abs(phase_sum(f));
        const double bound = vdc_bound(f, 8.0).bound;
        violations += s > bound;
        worst = std::max(worst, s / bound);
        least_margin = std::min(least_margin, bound - s);
        r.payload += g17(s) + " " + g17(bound) + "\n";
    }
    r.passed = violations == 0;
    r.summary = fmt("%d phases, C = 8: violations = %d, max |sum| / bound = %.4f, min margin = %.4g", cases,
                    violations, worst, least_margin);
}

void equidistribution(CriterionResult& r, AcceptanceScale scale) {
    const std::uint64_t x = quick(scale) ? 100'000 : 1'000'000;
    const std::uint64_t q_max = quick(scale) ? 10 : 50;
    const FracWindow win = make_frac_window(0.1, 0.0, 0.5);
    const ResidueTable t = residue_counts(x, q_max, win);
    double worst = 0.0;
    std::uint64_t wq = 1, wa = 0, classes = 0;
    for (std::uint64_t q = 1; q <= q_max; ++q)
        for (std::uint64_t a = 0; a < q; ++a) {
            if (gcd_u64(a, q) != 1 && q > 1) continue;
            const auto all = t.all[q][a];
            if (all == 0) continue;
            ++classes;
            const double dev = std::abs(double(t.window[q][a]) - win.length() * double(all)) / double(all);
            if (dev > worst) worst = dev, wq = q, wa = a;
            r.payload += fmt("%llu %llu %llu %llu\n", (unsigned long long)q, (unsigned long long)a,
                             (unsigned long long)t.window[q][a], (unsigned long long)all);
        }
    r.passed = worst <= 0.05;
    r.summary = fmt("X = %llu, q <= %llu, %llu classes: pi_I / pi = %.4f, max rel deviation = %.4f at (q, a) = "
                    "(%llu, %llu)",
                    (unsigned long long)x, (unsigned long long)q_max, (unsigned long long)classes,
                    double(t.total_window) / double(t.total_all), worst, (unsigned long long)wq,
                    (unsigned long long)wa);
}

void bv_trend(CriterionResult& r, AcceptanceScale scale) {
    std::vector<std::uint64_t> xs{100'000, 1'000'000, 10'000'000};
    if (quick(scale)) xs = {10'000, 100'000, 1'000'000};
    const FracWindow win = make_frac_window(0.1, 0.0, 0.5);
    std::vector<double> ratio;
    std::string parts;
    for (std::uint64_t x : xs) {
        const auto q = static_cast<std::uint64_t>(std::floor(std::pow(static_cast<double>(x), 0.3)));
        const DiscrepancyReport d = bv_discrepancy(x, q, win);
        ratio.push_back(d.total / static_cast<double>(d.pi_all));
        parts += fmt(" X = %llu (Q = %llu): %.5g;", (unsigned long long)x, (unsigned long long)q, ratio.back());
        r.payload += g17(d.total) + " " + fmt("%llu", (unsigned long long)d.pi_all) + "\n";
    }
    r.passed = ratio[1] < ratio[0] && ratio[2] < ratio[1];
    parts.pop_back();
    r.summary = "D / pi(X):" + parts;
}

struct Criterion {
    const char* name;
    double full_limit;
    void (*fn)(CriterionResult&, AcceptanceScale);
};

constexpr Criterion kCriteria[] = {
    {"Heath-Brown exactness", 60, heath_brown_exactness},
    {"exponent classifier", 10, classifier},
    {"partition of unity", 5, partition_of_unity},
    {"Weil bound", 120, weil},
    {"character orthogonality", 60, orthogonality},
    {"Poisson identities", 600, poisson},
    {"stationary phase", 60, stationary_phase},
    {"van der Corput", 120, van_der_corput},
    {"equidistribution", 120, equidistribution},
    {"BV discrepancy trend", 900, bv_trend},
};

void determinism(CriterionResult& r, AcceptanceScale scale) {
    const unsigned saved = thread_count();
    const int last = quick(scale) ? 8 : 10;
    bool same = true;
    std::string detail;
    for (int id = 1; id <= last; ++id) {
        std::uint64_t ref = 0;
        bool row_same = true;
        for (unsigned threads : {1u, 4u, 8u}) {
            set_thread_count(threads);
            const std::uint64_t d = run_criterion(id, scale).digest();
            if (threads == 1) ref = d;
            row_same = row_same && d == ref;
            r.payload += fmt("%d %u %016llx\n", id, threads, (unsigned long long)d);
        }
        same = same && row_same;
        if (!row_same) detail += fmt(" %d", id);
    }
    set_thread_count(saved);
    r.passed = same;
    r.summary = same ? fmt("criteria 1-%d: identical digests at 1, 4, 8 threads", last)
                     : "digest mismatch in criteria:" + detail;
}

}  // namespace

CriterionResult run_criterion(int id, AcceptanceScale scale) {
    require(id >= 1 && id <= kCriterionCount, "run_criterion: id must lie in [1, 11]");
    CriterionResult r;
    r.id = id;
    const auto start = std::chrono::steady_clock::now();
    if (id == 11) {
        r.name = "determinism";
        determinism(r, scale);
    } else {
        const Criterion& s = kCriteria[id - 1];
        r.name = s.name;
        r.time_limit = quick(scale) ? 0.0 : s.full_limit;
        s.fn(r, scale);
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (r.time_limit > 0.0 && r.seconds > r.time_limit) {
        r.passed = false;
        r.summary += fmt(" [over the %.0f s limit]", r.time_limit);
    }
    return r;
}

}  // namespace fpl
