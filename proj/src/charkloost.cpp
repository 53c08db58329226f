#include "fpl/charkloost.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "fpl/error.hpp"

namespace fpl {

namespace {

std::uint64_t ipow(std::uint64_t b, unsigned e) {
    std::uint64_t r = 1;
    while (e--) r *= b;
    return r;
}

cplx root_of_unity(std::uint64_t k, std::uint64_t n) {
    const double ang = 2.0 * std::numbers::pi * static_cast<double>(k % n) / static_cast<double>(n);
    return {std::cos(ang), std::sin(ang)};
}

}  // namespace

CharacterTable character_group(std::uint64_t q) {
    require(q >= 3, "character_group: q must be >= 3");
    if (q > kMaxCharacterModulus) throw_resource("character_group: q above the 10^5 table budget");
    CharacterTable t;
    t.q_ = q;
    t.fact_ = factor(q);

    for (const PrimePower& pp : t.fact_.factors) {
        const std::uint64_t m = ipow(pp.prime, pp.exponent);
        if (pp.prime != 2) {
            CyclicComponent c;
            c.modulus = m;
            c.generator = static_cast<std::int64_t>(primitive_root(pp.prime, pp.exponent));
            c.order = static_cast<std::uint32_t>(m / pp.prime * (pp.prime - 1));
            c.dlog.assign(m, -1);
            std::uint64_t x = 1;
            for (std::uint32_t k = 0; k < c.order; ++k) {
                c.dlog[x] = static_cast<std::int32_t>(k);
                x = x * static_cast<std::uint64_t>(c.generator) % m;
            }
            t.comps_.push_back(std::move(c));
        } else if (pp.exponent == 2) {
            CyclicComponent c{4, -1, 2, {-1, 0, -1, 1}};
            t.comps_.push_back(std::move(c));
        } else if (pp.exponent >= 3) {
            // n = (-1)^a 5^b (mod 2^e)
            CyclicComponent sign{m, -1, 2, std::vector<std::int32_t>(m, -1)};
            CyclicComponent five{m, 5, static_cast<std::uint32_t>(m / 4), std::vector<std::int32_t>(m, -1)};
            std::uint64_t p5 = 1;
            for (std::uint32_t b = 0; b < five.order; ++b) {
                for (std::uint32_t a = 0; a < 2; ++a) {
                    const std::uint64_t n = a ? m - p5 : p5;
                    sign.dlog[n] = static_cast<std::int32_t>(a);
                    five.dlog[n] = static_cast<std::int32_t>(b);
                }
                p5 = p5 * 5 % m;
            }
            t.comps_.push_back(std::move(sign));
            t.comps_.push_back(std::move(five));
        }
        // 2^1 contributes the trivial group
    }

    t.size_ = 1;
    t.lcm_order_ = 1;
    for (const auto& c : t.comps_) {
        t.size_ *= c.order;
        t.lcm_order_ = std::lcm(t.lcm_order_, static_cast<std::uint64_t>(c.order));
    }
    t.roots_.resize(t.lcm_order_);
    for (std::uint64_t k = 0; k < t.lcm_order_; ++k) t.roots_[k] = root_of_unity(k, t.lcm_order_);

    t.log_by_residue_.assign(t.comps_.size() + 1, std::vector<std::int32_t>(q, -1));
    for (std::uint64_t n = 0; n < q; ++n) {
        const bool unit = gcd_u64(n, q) == 1;
        t.log_by_residue_.back()[n] = unit ? 1 : 0;
        if (!unit) continue;
        for (std::size_t c = 0; c < t.comps_.size(); ++c)
            t.log_by_residue_[c][n] = t.comps_[c].dlog[n % t.comps_[c].modulus];
    }
    return t;
}

std::vector<std::uint32_t> CharacterTable::exponents(std::size_t index) const {
    require(index < size_, "CharacterTable: character index out of range");
    std::vector<std::uint32_t> e(comps_.size());
    for (std::size_t c = 0; c < comps_.size(); ++c) {
        e[c] = static_cast<std::uint32_t>(index % comps_[c].order);
        index /= comps_[c].order;
    }
    return e;
}

cplx CharacterTable::eval(std::size_t index, std::int64_t n) const {
    const std::uint64_t r = mod_floor(n, q_);
    if (!log_by_residue_.back()[r]) return {0.0, 0.0};
    std::uint64_t k = 0;
    for (std::size_t c = 0; c < comps_.size(); ++c) {
        const std::uint64_t ord = comps_[c].order;
        const std::uint64_t e = index % ord;
        index /= ord;
        k += e * static_cast<std::uint64_t>(log_by_residue_[c][r]) % ord * (lcm_order_ / ord);
    }
    return roots_[k % lcm_order_];
}

std::uint64_t CharacterTable::order(std::size_t index) const {
    const auto e = exponents(index);
    std::uint64_t o = 1;
    for (std::size_t c = 0; c < comps_.size(); ++c) {
        const std::uint64_t ord = comps_[c].order;
        o = std::lcm(o, ord / std::gcd(ord, static_cast<std::uint64_t>(e[c])));
    }
    return o;
}

bool CharacterTable::is_primitive(std::size_t index) const {
    require(index < size_, "CharacterTable: character index out of range");
    // Imprimitive iff chi is trivial on {n = 1 (mod q/p), (n, q) = 1} for some p | q.
    for (const PrimePower& pp : fact_.factors) {
        const std::uint64_t d = q_ / pp.prime;
        bool trivial = true;
        for (std::uint64_t n = 1; n < q_ && trivial; n += d) {
            if (gcd_u64(n, q_) != 1) continue;
            if (std::abs(eval(index, static_cast<std::int64_t>(n)) - cplx(1.0, 0.0)) > 1e-9) trivial = false;
        }
        if (trivial) return false;
    }
    return true;
}

cplx chi_eval(const CharacterTable& t, std::size_t index, std::int64_t n) {
    require(index < t.size(), "chi_eval: character index out of range");
    return t.eval(index, n);
}

cplx gauss_sum(const CharacterTable& t, std::size_t index, std::int64_t s) {
    require(index < t.size(), "gauss_sum: character index out of range");
    const std::uint64_t q = t.q();
    const std::uint64_t sr = mod_floor(s, q);
    std::vector<cplx> terms;
    terms.reserve(q);
    for (std::uint64_t l = 1; l < q; ++l) {
        const cplx c = t.eval(index, static_cast<std::int64_t>(l));
        if (c == cplx(0.0, 0.0)) continue;
        terms.push_back(c * root_of_unity(sr * l % q, q));
    }
    return pairwise_sum(std::span<const cplx>(terms));
}

std::vector<std::vector<cplx>> character_values(const CharacterTable& t) {
    std::vector<std::vector<cplx>> out(t.size(), std::vector<cplx>(t.q()));
    for (std::size_t i = 0; i < t.size(); ++i)
        for (std::uint64_t n = 0; n < t.q(); ++n) out[i][n] = t.eval(i, static_cast<std::int64_t>(n));
    return out;
}

double orthogonality_project(const CharacterTable& t, std::int64_t a, std::int64_t m) {
    require(gcd_u64(mod_floor(a, t.q()), t.q()) == 1, "orthogonality_project: gcd(a, q) must be 1");
    std::vector<cplx> terms(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) terms[i] = t.eval(i, m) * std::conj(t.eval(i, a));
    return pairwise_sum(std::span<const cplx>(terms)).real() / static_cast<double>(t.size());
}

cplx character_average(const CharacterTable& t, std::int64_t c, std::int64_t s, std::int64_t sigma) {
    std::vector<cplx> terms(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) terms[i] = t.eval(i, c) * gauss_sum(t, i, s) * gauss_sum(t, i, sigma);
    return pairwise_sum(std::span<const cplx>(terms)) / static_cast<double>(t.size());
}

// ---------------------------------------------------------------------------

std::vector<std::uint64_t> unit_inverses(std::uint64_t q) {
    require(q >= 2, "unit_inverses: q must be >= 2");
    std::vector<std::uint64_t> units;
    for (std::uint64_t l = 1; l < q; ++l)
        if (gcd_u64(l, q) == 1) units.push_back(l);
    // Montgomery batch inversion: one inv_mod for the whole list.
    std::vector<std::uint64_t> prefix(units.size());
    std::uint64_t acc = 1;
    for (std::size_t i = 0; i < units.size(); ++i) {
        prefix[i] = acc;
        acc = mul_mod(acc, units[i], q);
    }
    std::uint64_t inv_acc = inv_mod(static_cast<std::int64_t>(acc), q);
    std::vector<std::uint64_t> inv(q, 0);
    for (std::size_t i = units.size(); i-- > 0;) {
        inv[units[i]] = mul_mod(inv_acc, prefix[i], q);
        inv_acc = mul_mod(inv_acc, units[i], q);
    }
    if (q == 2) inv[1] = 1;
    return inv;
}

double weil_bound(std::uint64_t q, std::int64_t u, std::int64_t v) {
    require(q >= 2, "weil_bound: q must be >= 2");
    const std::uint64_t g = gcd_u64(gcd_u64(mod_floor(u, q), mod_floor(v, q)), q);
    return static_cast<double>(divisor_count(q)) * std::sqrt(static_cast<double>(q)) *
           std::sqrt(static_cast<double>(g == 0 ? q : g));
}

KloostermanValue kloosterman(std::uint64_t q, std::int64_t u, std::int64_t v) {
    require(q >= 2, "kloosterman: q must be >= 2");
    const std::vector<std::uint64_t> inv = unit_inverses(q);
    const std::uint64_t ur = mod_floor(u, q), vr = mod_floor(v, q);
    std::vector<cplx> terms;
    for (std::uint64_t l = 1; l < q; ++l) {
        if (inv[l] == 0) continue;
        const std::uint64_t k = (mul_mod(ur, l, q) + mul_mod(vr, inv[l], q)) % q;
        terms.push_back(root_of_unity(k, q));
    }
    const cplx s = pairwise_sum(std::span<const cplx>(terms));
    return {q, u, v, s.real(), s.imag(), weil_bound(q, u, v)};
}

KloostermanRow kloosterman_row(std::uint64_t q, std::int64_t u) {
    require(q >= 2, "kloosterman_row: q must be >= 2");
    const std::vector<std::uint64_t> inv = unit_inverses(q);
    std::vector<double> cs(q), sn(q);
    for (std::uint64_t k = 0; k < q; ++k) {
        const cplx z = root_of_unity(k, q);
        cs[k] = z.real();
        sn[k] = z.imag();
    }
    std::vector<std::uint64_t> ls, a, b, step;
    const std::uint64_t ur = mod_floor(u, q);
    for (std::uint64_t l = 1; l < q; ++l) {
        if (inv[l] == 0) continue;
        ls.push_back(l);
        a.push_back(mul_mod(ur, l, q));
        b.push_back(0);  // v * l^* for v = 0
        step.push_back(inv[l]);
    }
    KloostermanRow row;
    row.re.resize(q);
    row.im.resize(q);
    std::vector<double> tr(ls.size()), ti(ls.size());
    for (std::uint64_t v = 0; v < q; ++v) {
        for (std::size_t i = 0; i < ls.size(); ++i) {
            std::uint64_t k = a[i] + b[i];
            if (k >= q) k -= q;
            tr[i] = cs[k];
            ti[i] = sn[k];
            b[i] += step[i];
            if (b[i] >= q) b[i] -= q;
        }
        row.re[v] = pairwise_sum(std::span<const double>(tr));
        row.im[v] = pairwise_sum(std::span<const double>(ti));
    }
    return row;
}

double weil_margin(std::uint64_t q, std::int64_t u, std::int64_t v) {
    const KloostermanValue k = kloosterman(q, u, v);
    return k.weil_bound - std::abs(k.value);
}

}  // namespace fpl
