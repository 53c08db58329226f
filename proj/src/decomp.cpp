#include "fpl/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "fpl/arith.hpp"
#include "fpl/error.hpp"

namespace fpl {

namespace {

std::uint64_t binomial(int n, int r) {
    std::uint64_t b = 1;
    for (int i = 1; i <= r; ++i) b = b * (n - r + i) / i;
    return b;
}

struct Enumerator {
    const std::vector<std::uint64_t>& divs;
    const std::unordered_map<std::uint64_t, int>& mu;
    std::uint64_t v;
    int j;
    int sign;
    std::uint64_t binom;
    std::uint64_t budget;
    HBTermList& out;
    std::vector<std::uint64_t> tuple;

    // Fills positions 2j-1 down to 1 (0-based), then d_1 = remaining cofactor.
    void run(int pos, std::uint64_t rest, int mu_prod) {
        if (pos == 0) {
            if (rest == 1 || mu_prod == 0) {
                ++out.vanishing;
                return;
            }
            tuple[0] = rest;
            if (out.terms.size() >= budget) throw_resource("heath_brown_terms: term budget exceeded");
            out.terms.push_back({sign, binom, tuple, std::log(static_cast<double>(rest)) * mu_prod});
            return;
        }
        const bool is_mu = pos >= j;
        for (std::uint64_t d : divs) {
            if (d > rest) break;
            if (rest % d) continue;
            if (is_mu) {
                if (d > v) break;
                const int m = mu.at(d);
                if (m == 0) {
                    // all tuples through this branch vanish; count them only in aggregate
                    ++out.vanishing;
                    continue;
                }
                tuple[pos] = d;
                run(pos - 1, rest / d, mu_prod * m);
            } else {
                tuple[pos] = d;
                run(pos - 1, rest / d, mu_prod);
            }
        }
    }
};

}  // namespace

double HBTermList::total() const {
    // Integer coefficient per distinct d_1 first: summing the +-log terms
    // one by one loses ~1e-9 to cancellation on highly composite n.
    std::map<std::uint64_t, std::int64_t> coeff;
    for (const HBTerm& t : terms) {
        const std::int64_t mu_prod = t.weight > 0 ? 1 : -1;
        coeff[t.d[0]] += t.sign * static_cast<std::int64_t>(t.binom) * mu_prod;
    }
    double s = 0.0;
    for (const auto& [d1, c] : coeff) s += static_cast<double>(c) * std::log(static_cast<double>(d1));
    return s;
}

HBTermList heath_brown_terms(std::uint64_t n, int k, std::uint64_t v, std::uint64_t term_budget) {
    require(n >= 1, "heath_brown_terms: n must be positive");
    require(k >= 1 && k <= 6, "heath_brown_terms: k must lie in [1, 6]");
    require(v >= 1, "heath_brown_terms: V must be positive");
    HBTermList out;
    out.n = n;
    out.k = k;
    out.v = v;
    if (n == 1) return out;

    const std::vector<std::uint64_t> divs = divisors(n);
    std::unordered_map<std::uint64_t, int> mu;
    for (std::uint64_t d : divs) mu[d] = mobius(d);

    for (int j = 1; j <= k; ++j) {
        Enumerator e{divs, mu, v, j, (j % 2) ? 1 : -1, binomial(k, j), term_budget, out,
                     std::vector<std::uint64_t>(2 * j, 1)};
        e.run(2 * j - 1, n, 1);
    }
    return out;
}

double heath_brown_sum(std::uint64_t n, int k, std::uint64_t v) {
    require(n >= 1, "heath_brown_sum: n must be positive");
    require(k >= 1 && k <= 6, "heath_brown_sum: k must lie in [1, 6]");
    require(v >= 1, "heath_brown_sum: V must be positive");
    if (n == 1) return 0.0;
    const std::vector<std::uint64_t> divs = divisors(n);
    const std::size_t m = divs.size();
    std::unordered_map<std::uint64_t, std::size_t> index;
    for (std::size_t i = 0; i < m; ++i) index[divs[i]] = i;

    auto convolve = [&](const std::vector<double>& f, const std::vector<double>& g) {
        std::vector<double> h(m, 0.0);
        for (std::size_t a = 0; a < m; ++a) {
            if (f[a] == 0.0) continue;
            for (std::size_t b = 0; b < m; ++b) {
                if (g[b] == 0.0) continue;
                const std::uint64_t prod = divs[a] * divs[b];
                if (prod > n || n % prod) continue;
                h[index.at(prod)] += f[a] * g[b];
            }
        }
        return h;
    };

    std::vector<double> log_f(m), one(m, 1.0), mu_v(m);
    for (std::size_t i = 0; i < m; ++i) {
        log_f[i] = std::log(static_cast<double>(divs[i]));
        mu_v[i] = divs[i] <= v ? mobius(divs[i]) : 0;
    }
    double total = 0.0;
    std::vector<double> ones_part = log_f;  // log * 1^{*(j-1)}
    std::vector<double> mu_part(m, 0.0);    // mu_V^{*j}
    mu_part[0] = 1.0;
    for (int j = 1; j <= k; ++j) {
        if (j > 1) ones_part = convolve(ones_part, one);
        mu_part = convolve(mu_part, mu_v);
        // value at n of ones_part * mu_part
        double s = 0.0;
        for (std::size_t a = 0; a < m; ++a) s += ones_part[a] * mu_part[index.at(n / divs[a])];
        total += ((j % 2) ? 1.0 : -1.0) * static_cast<double>(binomial(k, j)) * s;
    }
    return total;
}

const char* to_string(SumType t) noexcept {
    switch (t) {
        case SumType::I: return "I";
        case SumType::II: return "II";
        case SumType::III: return "III";
    }
    return "?";
}

namespace {

bool ge(double a, double b) { return a >= b - kBoundarySlack; }
bool le(double a, double b) { return a <= b + kBoundarySlack; }
bool gt(double a, double b) { return a > b - kBoundarySlack; }
bool lt(double a, double b) { return a < b + kBoundarySlack; }

constexpr std::size_t kMaxSubsetLength = 24;

void check_simplex(const std::vector<double>& t, double sigma) {
    require(sigma > 0.1 && sigma < 0.5, "classify_exponents: sigma must lie in (1/10, 1/2)");
    require(!t.empty(), "classify_exponents: empty tuple");
    double s = 0.0;
    for (double x : t) {
        require(x >= 0.0, "classify_exponents: negative entry");
        s += x;
    }
    require(std::abs(s - 1.0) <= 1e-9, "classify_exponents: entries must sum to 1");
}

std::vector<int> mask_to_indices(std::uint64_t mask, std::size_t n) {
    std::vector<int> out;
    for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1) out.push_back(static_cast<int>(i) + 1);
    return out;
}

// Lexicographically least index set S (as an ascending list) accepted by `ok`.
template <typename Pred>
std::vector<int> least_subset(std::size_t n, Pred ok) {
    if (n > kMaxSubsetLength) throw_resource("classifier: tuple too long for subset enumeration");
    std::vector<int> best;
    bool found = false;
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
        if (!ok(mask)) continue;
        std::vector<int> s = mask_to_indices(mask, n);
        if (!found || s < best) {
            best = std::move(s);
            found = true;
        }
    }
    return best;
}

// Triples i<j<k in index order; the witness is reported sorted by value.
template <typename Pred>
std::vector<int> least_triple(const std::vector<double>& vals, std::size_t limit, Pred ok) {
    for (std::size_t a = 0; a < limit; ++a)
        for (std::size_t b = a + 1; b < limit; ++b)
            for (std::size_t c = b + 1; c < limit; ++c) {
                std::vector<int> idx{static_cast<int>(a), static_cast<int>(b), static_cast<int>(c)};
                std::stable_sort(idx.begin(), idx.end(), [&](int x, int y) { return vals[x] < vals[y]; });
                if (ok(vals[idx[0]], vals[idx[1]], vals[idx[2]])) {
                    for (int& i : idx) ++i;
                    return idx;
                }
            }
    return {};
}

bool type3_ok(double lo, double hi, double pair, double ti, double tj, double tk) {
    return ge(ti, lo) && le(ti, tj) && le(tj, tk) && le(tk, hi) && ge(ti + tj, pair) && ge(ti + tk, pair) &&
           ge(tj + tk, pair);
}

}  // namespace

std::vector<TypeWitness> classify_exponents(const std::vector<double>& t, double sigma) {
    check_simplex(t, sigma);
    const std::size_t n = t.size();
    std::vector<TypeWitness> out;

    for (std::size_t i = 0; i < n; ++i)
        if (ge(t[i], 0.5 + sigma)) {
            out.push_back({SumType::I, {static_cast<int>(i) + 1}});
            break;
        }

    const std::vector<int> s = least_subset(n, [&](std::uint64_t mask) {
        double in = 0.0, rest = 0.0;
        for (std::size_t i = 0; i < n; ++i) (mask >> i & 1 ? in : rest) += t[i];
        return gt(in, 0.5 - sigma) && le(in, rest) && lt(rest, 0.5 + sigma);
    });
    if (!s.empty()) out.push_back({SumType::II, s});

    const std::vector<int> tri = least_triple(t, n, [&](double a, double b, double c) {
        return type3_ok(2 * sigma, 0.5 - sigma, 0.5 + sigma, a, b, c);
    });
    if (!tri.empty()) out.push_back({SumType::III, tri});
    return out;
}

bool verify_witness(const std::vector<double>& t, double sigma, const TypeWitness& w) {
    const int n = static_cast<int>(t.size());
    for (int i : w.index)
        if (i < 1 || i > n) return false;
    switch (w.kind) {
        case SumType::I:
            return w.index.size() == 1 && t[w.index[0] - 1] >= 0.5 + sigma - kBoundarySlack;
        case SumType::II: {
            std::vector<bool> in_s(n, false);
            for (int i : w.index) {
                if (in_s[i - 1]) return false;
                in_s[i - 1] = true;
            }
            double a = 0.0, b = 0.0;
            for (int i = 0; i < n; ++i) (in_s[i] ? a : b) += t[i];
            return 0.5 - sigma < a + kBoundarySlack && a <= b + kBoundarySlack && b < 0.5 + sigma + kBoundarySlack;
        }
        case SumType::III: {
            if (w.index.size() != 3) return false;
            const int i = w.index[0], j = w.index[1], k = w.index[2];
            if (i == j || j == k || i == k) return false;
            const double a = t[i - 1], b = t[j - 1], c = t[k - 1];
            const double e = kBoundarySlack;
            return 2 * sigma <= a + e && a <= b + e && b <= c + e && c <= 0.5 - sigma + e && a + b >= 0.5 + sigma - e &&
                   a + c >= 0.5 + sigma - e && b + c >= 0.5 + sigma - e;
        }
    }
    return false;
}

std::vector<TypeWitness> classify_dyadic(const DyadicTuple& dt) {
    const std::size_t n = dt.d.size();
    require(n >= 2 && n % 2 == 0, "classify_dyadic: tuple length must be even");
    require(dt.x1 > 1.0 && dt.y1 >= dt.x1, "classify_dyadic: need 1 < X1 <= Y1");
    require(dt.eps1 >= 0.0 && dt.eps1 < 0.4, "classify_dyadic: eps1 must lie in [0, 0.4)");
    double log_prod = 0.0;
    for (double d : dt.d) {
        require(d >= 1.0, "classify_dyadic: D_i must be >= 1");
        log_prod += std::log(d);
    }
    const double lx = std::log(dt.x1);
    require(log_prod >= lx - 1e-9 * lx && log_prod <= std::log(dt.y1) + 1e-9 * lx,
            "classify_dyadic: product of D_i outside [X1, Y1]");
    for (std::size_t i = n / 2; i < n; ++i)
        require(dt.d[i] <= dt.v_cap * (1 + 1e-12), "classify_dyadic: Möbius variable above V * Theta");

    std::vector<double> e(n);
    for (std::size_t i = 0; i < n; ++i) e[i] = std::log(dt.d[i]) / lx;
    const double upper = 0.6 + dt.eps1, lower = 0.4 - dt.eps1, low3 = 0.2 + 2 * dt.eps1;
    const std::size_t free_vars = n / 2;

    std::vector<TypeWitness> out;
    for (std::size_t i = 0; i < free_vars; ++i)
        if (ge(e[i], upper)) {
            out.push_back({SumType::I, {static_cast<int>(i) + 1}});
            break;
        }
    const std::vector<int> s = least_subset(n, [&](std::uint64_t mask) {
        double in = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1) in += e[i];
        return gt(in, lower) && lt(in, upper);
    });
    if (!s.empty()) out.push_back({SumType::II, s});
    const std::vector<int> tri = least_triple(e, free_vars, [&](double a, double b, double c) {
        return type3_ok(low3, lower, upper, a, b, c);
    });
    if (!tri.empty()) out.push_back({SumType::III, tri});
    return out;
}

}  // namespace fpl
