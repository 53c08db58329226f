#include "fpl/oscillatory.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fpl/ddouble.hpp"
#include "fpl/error.hpp"
#include "fpl/expsums.hpp"
#include "fpl/numdiff.hpp"

namespace fpl {

namespace {

// frac(h n^alpha) in double-double: the direct sums have thousands of terms of
// phase ~10^3 turns, where plain pow leaves ~1e-13 per term.
double power_turns(double h, std::uint64_t n, double alpha) {
    const DoubleDouble p = DoubleDouble(h) * dd_exp(DoubleDouble(alpha) * dd_log(dd_from_u64(n)));
    const double fl = std::floor(p.hi);
    return (p.hi - fl) + p.lo;
}

constexpr double kPi = std::numbers::pi;

// (a)_j = a (a - 1) ... (a - j + 1)
double falling(double a, int j) {
    double r = 1.0;
    for (int i = 0; i < j; ++i) r *= a - i;
    return r;
}

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes by Newton on P_15

constexpr int kGaussOrder = 15;

struct GaussRule {
    std::array<double, kGaussOrder> x{};
    std::array<double, kGaussOrder> w{};
};

const GaussRule& gauss_rule() {
    static const GaussRule rule = [] {
        GaussRule r;
        const unsigned n = kGaussOrder;
        for (unsigned i = 0; i < n; ++i) {
            double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                const double p = std::legendre(n, x);
                const double pm = std::legendre(n - 1, x);
                dp = n * (x * p - pm) / (x * x - 1.0);
                const double dx = p / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            const double p = std::legendre(n, x), pm = std::legendre(n - 1, x);
            dp = n * (x * p - pm) / (x * x - 1.0);
            r.x[i] = x;
            r.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        return r;
    }();
    return rule;
}

struct PanelEstimate {
    cplx value;
    double abs_mass = 0.0;  // int |w|
    double phase_max = 0.0; // max |g| at the nodes
};

PanelEstimate gauss_panel(const WindowModel& w, const PhaseModel& g, double a, double b) {
    const GaussRule& r = gauss_rule();
    const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
    cplx acc = 0.0;
    double mass = 0.0, gmax = 0.0;
    for (int i = 0; i < kGaussOrder; ++i) {
        const double t = c + hw * r.x[i];
        const double wt = w(t);
        if (wt == 0.0) continue;
        const double ph = g.value(t);
        acc += r.w[i] * wt * unit_phase(ph);
        mass += r.w[i] * std::abs(wt);
        gmax = std::max(gmax, std::abs(ph));
    }
    return {acc * hw, mass * hw, gmax};
}

double mass_panel(const WindowModel& w, double a, double b) {
    const GaussRule& r = gauss_rule();
    const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
    double mass = 0.0;
    for (int i = 0; i < kGaussOrder; ++i) mass += r.w[i] * std::abs(w(c + hw * r.x[i]));
    return mass * hw;
}

// Sign changes of g' on a uniform scan, refined by bisection.
std::vector<double> scan_stationary(const PhaseModel& g, double lo, double hi, int samples = 512) {
    std::vector<double> roots;
    double a = lo, fa = g.derivative(lo, 1);
    if (fa == 0.0) roots.push_back(lo);
    for (int i = 1; i <= samples; ++i) {
        const double b = lo + (hi - lo) * i / samples;
        const double fb = g.derivative(b, 1);
        if (fb == 0.0) {
            roots.push_back(b);
        } else if (fa != 0.0 && (fa < 0.0) != (fb < 0.0)) {
            double x0 = a, x1 = b, f0 = fa;
            for (int it = 0; it < 200 && x1 - x0 > 1e-15 * std::max(1.0, std::abs(x0)); ++it) {
                const double mid = 0.5 * (x0 + x1);
                const double fm = g.derivative(mid, 1);
                if (fm == 0.0) {
                    x0 = x1 = mid;
                    break;
                }
                if ((fm < 0.0) == (f0 < 0.0)) {
                    x0 = mid;
                    f0 = fm;
                } else {
                    x1 = mid;
                }
            }
            roots.push_back(0.5 * (x0 + x1));
        }
        a = b;
        fa = fb;
    }
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
    return roots;
}

double plateau_value(double a, double b, double ramp, double t) {
    if (t >= a && t <= b) return 1.0;
    if (t < a) return smooth_step((t - (a - ramp)) / ramp);
    return smooth_step((b + ramp - t) / ramp);
}

}  // namespace

// ---------------------------------------------------------------------------

AlphaConstants alpha_constants(double alpha) {
    require(alpha > 0.0 && alpha < 0.5, "alpha_constants: need 0 < alpha < 1/2");
    AlphaConstants c;
    c.alpha = alpha;
    c.beta = (2.0 - alpha) / (1.0 - alpha);
    c.gamma = alpha / (1.0 - alpha);
    c.delta = 1.0 / (1.0 - alpha);
    c.xi = (1.0 - alpha) / (1.0 - 2.0 * alpha);
    c.eta = alpha / (1.0 - 2.0 * alpha);
    c.omega = (2.0 - 3.0 * alpha) / (1.0 - 2.0 * alpha);
    return c;
}

const char* to_string(PhaseKind kind) noexcept {
    switch (kind) {
    case PhaseKind::first_poisson: return "first-poisson";
    case PhaseKind::second_poisson: return "second-poisson";
    case PhaseKind::generic: return "generic";
    }
    return "unknown";
}

const char* to_string(OscMethod m) noexcept {
    switch (m) {
    case OscMethod::quadrature: return "quadrature";
    case OscMethod::lemma2_bound: return "lemma2-bound";
    case OscMethod::lemma3_expansion: return "lemma3-expansion";
    }
    return "unknown";
}

PhaseModel PhaseModel::first(const FirstPhaseParams& p) {
    require(p.h >= 0.0 && p.x > 0.0 && p.alpha > 0.0 && p.alpha < 1.0, "PhaseModel::first: bad h, X or alpha");
    require(p.q > 0.0 && p.u > 0.0 && p.m > 0.0 && p.n > 0.0, "PhaseModel::first: q, u, m, n must be positive");
    PhaseModel g;
    g.kind_ = PhaseKind::first_poisson;
    g.first_ = p;
    return g;
}

PhaseModel PhaseModel::second(const SecondPhaseParams& p) {
    require(p.h > 0.0 && p.x > 0.0 && p.alpha > 0.0 && p.alpha < 0.5, "PhaseModel::second: bad h, X or alpha");
    require(p.q > 0.0 && p.u > 0.0 && p.m > 0.0 && p.s > 0.0, "PhaseModel::second: q, u, m, s must be positive");
    PhaseModel g;
    g.kind_ = PhaseKind::second_poisson;
    g.second_ = p;
    return g;
}

PhaseModel PhaseModel::polynomial(std::vector<double> coeffs) {
    PhaseModel g;
    g.kind_ = PhaseKind::generic;
    g.poly_ = std::move(coeffs);
    if (g.poly_.empty()) g.poly_.push_back(0.0);
    return g;
}

PhaseModel PhaseModel::generic(std::function<double(double)> f, double scale) {
    require(static_cast<bool>(f), "PhaseModel::generic: empty function");
    require(scale > 0.0, "PhaseModel::generic: scale must be positive");
    PhaseModel g;
    g.kind_ = PhaseKind::generic;
    g.fn_ = std::move(f);
    g.scale_ = scale;
    return g;
}

double PhaseModel::value(double t) const { return derivative(t, 0); }

double PhaseModel::derivative(double t, int order) const {
    require(order >= 0, "PhaseModel: negative derivative order");
    switch (kind_) {
    case PhaseKind::first_poisson: {
        const auto& p = first_;
        const double lin = p.x * p.s / (p.q * p.u * p.m * p.n);
        const double hx = p.h * std::pow(p.x, p.alpha);
        if (order == 0) return hx * std::pow(t, p.alpha) - lin * t;
        const double d = falling(p.alpha, order) * hx * std::pow(t, p.alpha - order);
        return order == 1 ? d - lin : d;
    }
    case PhaseKind::second_poisson: {
        const auto& p = second_;
        const double gamma = p.alpha / (1.0 - p.alpha);
        const double amp = (1.0 - p.alpha) * p.h * std::pow(p.x, p.alpha);
        const double lin = std::pow(p.x, 1.0 - p.alpha) * p.s * p.sigma / (p.alpha * p.h * p.q * p.q * p.u * p.m);
        if (order == 0) return amp * std::pow(t, gamma) - lin * t;
        const double d = amp * falling(gamma, order) * std::pow(t, gamma - order);
        return order == 1 ? d - lin : d;
    }
    case PhaseKind::generic: break;
    }
    if (!fn_) {
        // Horner on the order-th derivative of the polynomial.
        double acc = 0.0;
        for (std::size_t k = poly_.size(); k-- > static_cast<std::size_t>(order);)
            acc = acc * t + poly_[k] * falling(static_cast<double>(k), order);
        return acc;
    }
    if (order == 0) return fn_(t);
    if (order > 4) throw Error(ErrorKind::unsupported, "PhaseModel: generic derivatives above order 4");
    return richardson_derivative(fn_, t, order, scale_ / 16.0, 4).value;
}

WindowModel bump_window_model(const BumpWindow& w) {
    WindowModel m;
    m.f = [w](double t) { return eval_bump(w, t); };
    m.lo = 1.0 - w.delta;
    m.hi = w.y + w.delta;
    m.scale = w.delta;
    m.transitions = {{1.0 - w.delta, 1.0}, {w.y, w.y + w.delta}};
    m.breaks = {1.0 - w.delta, 1.0, w.y, w.y + w.delta};
    return m;
}

WindowModel plateau_window_model(double a, double b, double ramp) {
    require(a < b && ramp > 0.0, "plateau_window_model: need a < b and ramp > 0");
    WindowModel m;
    m.f = [a, b, ramp](double t) { return plateau_value(a, b, ramp, t); };
    m.lo = a - ramp;
    m.hi = b + ramp;
    m.scale = ramp;
    m.transitions = {{a - ramp, a}, {b, b + ramp}};
    m.breaks = {a - ramp, a, b, b + ramp};
    return m;
}

// ---------------------------------------------------------------------------

OscIntegralResult quad_osc(const WindowModel& w, const PhaseModel& g, double lo, double hi, double tol) {
    require(lo < hi, "quad_osc: empty interval");
    require(tol >= 1e-12, "quad_osc: tolerance below 1e-12");
    OscIntegralResult res;
    res.method = OscMethod::quadrature;
    lo = std::max(lo, w.lo);
    hi = std::min(hi, w.hi);
    if (!(lo < hi)) return res;

    std::vector<double> cuts{lo, hi};
    for (double b : w.breaks)
        if (b > lo && b < hi) cuts.push_back(b);
    for (double r : scan_stationary(g, lo, hi))
        if (r > lo && r < hi) cuts.push_back(r);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    // Panels of at most half an oscillation.
    constexpr double kBudget = 0.5;
    constexpr std::size_t kMaxPanels = 20'000'000;
    std::vector<std::pair<double, double>> panels;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double a = cuts[i];
        const double end = cuts[i + 1];
        while (a < end) {
            double len = end - a;
            for (int it = 0; it < 60; ++it) {
                const double b = a + len;
                const double slope = std::max({std::abs(g.derivative(a, 1)), std::abs(g.derivative(b, 1)),
                                               std::abs(g.derivative(a + 0.5 * len, 1))});
                if (slope * len <= kBudget) break;
                len = std::min(0.5 * len, 0.9 * kBudget / slope);
            }
            const double b = (end - (a + len) < 1e-3 * len) ? end : a + len;
            panels.emplace_back(a, b);
            if (panels.size() > kMaxPanels) throw_resource("quad_osc: panel budget exceeded");
            a = b;
        }
    }

    double mass = 0.0;
    for (auto [a, b] : panels) mass += mass_panel(w, a, b);
    if (mass == 0.0) return res;
    const double total = hi - lo;
    const double abs_tol = tol * mass;

    std::vector<cplx> values;
    values.reserve(panels.size());
    double err_sum = 0.0;
    bool converged = true;
    int accepted = 0;

    // Below this the bisection difference is phase roundoff (|g| eps per node), not
    // truncation error, and further splitting cannot help.
    auto roundoff_floor = [](const PanelEstimate& p) {
        return 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + 2.0 * kPi * p.phase_max) * p.abs_mass;
    };
    struct Item {
        double a, b;
        PanelEstimate whole;
        int depth;
    };
    std::vector<Item> stack;
    for (auto [a, b] : panels) {
        stack.push_back({a, b, gauss_panel(w, g, a, b), 0});
        while (!stack.empty()) {
            Item it = stack.back();
            stack.pop_back();
            const double mid = 0.5 * (it.a + it.b);
            const PanelEstimate left = gauss_panel(w, g, it.a, mid);
            const PanelEstimate right = gauss_panel(w, g, mid, it.b);
            const double diff = std::abs(left.value + right.value - it.whole.value);
            const double local_tol = std::max(abs_tol * (it.b - it.a) / total, roundoff_floor(it.whole));
            if (diff <= local_tol || it.depth >= kQuadMaxDepth) {
                if (diff > local_tol) converged = false;
                values.push_back(left.value + right.value);
                err_sum += diff;
                ++accepted;
            } else {
                stack.push_back({mid, it.b, right, it.depth + 1});
                stack.push_back({it.a, mid, left, it.depth + 1});
            }
        }
    }
    res.value = pairwise_sum(std::span<const cplx>(values));
    res.error_estimate = err_sum;
    res.terms_used = accepted;
    if (!converged)
        throw NumericError(ErrorKind::accuracy, "quad_osc: no convergence at maximum depth", res.value.real(),
                           res.value.imag(), err_sum);
    return res;
}

double lemma2_bound(double x_i, double v_i, double y_i, double q_i, double r_i, double a_i, double j_len,
                    double constant) {
    require(x_i > 0.0 && v_i > 0.0 && q_i > 0.0 && r_i > 0.0 && a_i > 0.0 && j_len > 0.0,
            "lemma2_bound: parameters must be positive");
    require(y_i >= 1.0, "lemma2_bound: Y_I must be >= 1");
    const double d1 = q_i * r_i / std::sqrt(y_i);
    const double d2 = r_i * v_i;
    return constant * j_len * x_i * (std::pow(d1, -a_i) + std::pow(d2, -a_i));
}

double stationary_point(const PhaseModel& g, double lo, double hi) {
    require(lo < hi, "stationary_point: empty window");
    double t0 = 0.0;
    if (g.kind() == PhaseKind::first_poisson) {
        const auto& p = g.first_params();
        if (!(p.s > 0.0) || !(p.h > 0.0))
            throw Error(ErrorKind::not_found, "stationary_point: g' has no zero unless s > 0 and h > 0");
        t0 = std::pow(p.alpha * p.h * p.q * p.u * p.m * p.n / p.s, 1.0 / (1.0 - p.alpha)) / p.x;
    } else if (g.kind() == PhaseKind::second_poisson) {
        const auto& p = g.second_params();
        if (!(p.sigma > 0.0)) throw Error(ErrorKind::not_found, "stationary_point: g' has no zero unless sigma > 0");
        const double xi = (1.0 - p.alpha) / (1.0 - 2.0 * p.alpha);
        const double ahq = p.alpha * p.h * p.q;
        t0 = std::pow(ahq * ahq * p.u * p.m / (p.s * p.sigma), xi) / std::pow(p.x, 1.0 - p.alpha);
    } else {
        const std::vector<double> roots = scan_stationary(g, lo, hi);
        if (roots.empty()) throw Error(ErrorKind::not_found, "stationary_point: no stationary point in window");
        if (roots.size() > 1)
            throw Error(ErrorKind::decomposition, "stationary_point: several stationary points, split the window");
        t0 = roots.front();
        // Newton polish where g'' is usable.
        for (int it = 0; it < 5; ++it) {
            const double d2 = g.derivative(t0, 2);
            if (d2 == 0.0) break;
            const double step = g.derivative(t0, 1) / d2;
            if (!(std::abs(step) < 1e-3 * (hi - lo))) break;
            t0 -= step;
        }
    }
    if (!(t0 >= lo && t0 <= hi)) throw Error(ErrorKind::not_found, "stationary_point: stationary point outside window");
    return t0;
}

StationaryValues stationary_values(const PhaseModel& g, double lo, double hi) {
    StationaryValues v;
    v.t0 = stationary_point(g, lo, hi);
    if (g.kind() == PhaseKind::first_poisson) {
        const auto& p = g.first_params();
        // alpha up to 1 is fine here, so no alpha_constants()
        const double beta = (2.0 - p.alpha) / (1.0 - p.alpha);
        const double gamma = p.alpha / (1.0 - p.alpha);
        const double delta = 1.0 / (1.0 - p.alpha);
        const double qumn = p.q * p.u * p.m * p.n;
        v.value = (1.0 - p.alpha) * std::pow(std::pow(p.alpha, p.alpha) * p.h, delta) * std::pow(qumn / p.s, gamma);
        v.second = -p.alpha * (1.0 - p.alpha) * p.h * p.x * p.x * std::pow(p.s / (p.alpha * p.h * qumn), beta);
    } else if (g.kind() == PhaseKind::second_poisson) {
        const auto& p = g.second_params();
        const AlphaConstants c = alpha_constants(p.alpha);
        const double ahq = p.alpha * p.h * p.q;
        const double r = ahq * ahq * p.u * p.m / (p.s * p.sigma);
        v.value = (1.0 - 2.0 * p.alpha) * p.h * std::pow(r, c.eta);
        v.second = -p.alpha * (1.0 - 2.0 * p.alpha) / (1.0 - p.alpha) * p.h * std::pow(p.x, 2.0 * (1.0 - p.alpha)) *
                   std::pow(1.0 / r, c.omega);
    } else {
        v.value = g.value(v.t0);
        v.second = g.derivative(v.t0, 2);
    }
    return v;
}

std::function<double(double)> stationary_remainder(const PhaseModel& g, double t0) {
    const double g0 = g.value(t0);
    const double g2 = g.derivative(t0, 2);
    return [g, t0, g0, g2](double t) {
        const double d = t - t0;
        return g.value(t) - g0 - 0.5 * g2 * d * d;
    };
}

cplx exp_phase_derivative(double h_value, const std::vector<double>& h_derivs, int r) {
    require(r >= 0 && static_cast<int>(h_derivs.size()) >= r, "exp_phase_derivative: need H^(k) for k = 1..r");
    const cplx base = unit_phase(h_value);
    if (r == 0) return base;
    const cplx two_pi_i(0.0, 2.0 * kPi);
    // Enumerate m_1 + 2 m_2 + ... + r m_r = r.
    std::vector<int> mult(r + 1, 0);
    cplx total = 0.0;
    std::function<void(int, int)> walk = [&](int k, int remaining) {
        if (k == 0) {
            if (remaining != 0) return;
            int parts = 0;
            double coef = factorial(r);
            cplx prod = 1.0;
            for (int j = 1; j <= r; ++j) {
                if (mult[j] == 0) continue;
                parts += mult[j];
                coef /= factorial(mult[j]);
                prod *= std::pow(h_derivs[j - 1] / factorial(j), mult[j]);
            }
            total += coef * std::pow(two_pi_i, parts) * prod;
            return;
        }
        for (int c = 0; c * k <= remaining; ++c) {
            mult[k] = c;
            walk(k - 1, remaining - c * k);
        }
        mult[k] = 0;
    };
    walk(r, r);
    return total * base;
}

OscIntegralResult stationary_expand(const WindowModel& w, const PhaseModel& g, double lo, double hi, int n_terms) {
    require(n_terms >= 1 && n_terms <= 3, "stationary_expand: 1 <= n_terms <= 3");
    require(lo < hi, "stationary_expand: empty window");
    if (g.kind() == PhaseKind::generic) {
        const auto roots = scan_stationary(g, lo, hi);
        if (roots.size() > 1)
            throw Error(ErrorKind::decomposition, "stationary_expand: several stationary points, split the window");
    }
    const StationaryValues sv = stationary_values(g, lo, hi);
    const double t0 = sv.t0;
    const double g2 = g.derivative(t0, 2);
    require(g2 != 0.0, "stationary_expand: degenerate stationary point");
    const double a2 = std::abs(g2);
    const bool concave = g2 < 0.0;

    const auto H = stationary_remainder(g, t0);
    auto G = [&](double t) -> cplx { return w(t) * unit_phase(H(t)); };

    double step = w.scale / 8.0;
    step = std::min(step, 0.5 / std::sqrt(a2));
    double g3 = 0.0;
    try {
        g3 = std::abs(g.derivative(t0, 3));
    } catch (const Error&) {
        g3 = 0.0;
    }
    if (g3 > 0.0) step = std::min(step, 0.5 * std::cbrt(1.0 / g3));

    const cplx lead = unit_phase(sv.value) * std::polar(1.0, concave ? -kPi / 4.0 : kPi / 4.0) / std::sqrt(a2);
    const cplx two_i(0.0, concave ? 2.0 : -2.0);

    OscIntegralResult res;
    res.method = OscMethod::lemma3_expansion;
    res.terms_used = n_terms;
    double diff_err = 0.0;
    double first = 0.0, next = 0.0, all = 0.0;
    for (int n = 0; n <= n_terms; ++n) {
        const auto d = richardson_derivative(G, t0, 2 * n, step, 4);
        const cplx factor = lead / (std::pow(two_i, n) * factorial(n) * std::pow(2.0 * kPi * a2, n));
        const cplx term = factor * d.value;
        all += std::abs(term);
        if (n == 0) first = std::abs(term);
        if (n < n_terms) {
            res.value += term;
            diff_err += std::abs(factor) * d.error;
        } else {
            next = std::abs(term);
        }
    }
    // The omitted tail as a geometric series with the mean term ratio. When the
    // window varies on the stationary scale the terms do not decay at all and
    // the expansion says nothing beyond its own size.
    const double ratio = first > 0.0 ? std::pow(next / first, 1.0 / n_terms) : 1.0;
    bool reliable = ratio < 0.9;
    // Outside the lemma's hypotheses when t0 sits in a transition that is not
    // wide on the stationary scale.
    const double rho = 1.0 / std::sqrt(a2);
    for (auto [a, b] : w.transitions)
        if (t0 >= a && t0 <= b && b - a < 8.0 * rho) reliable = false;
    const double tail = reliable ? next / (1.0 - ratio) : all;

    // First-derivative test on each window transition not containing t0.
    double edge = 0.0;
    for (auto [a, b] : w.transitions) {
        a = std::max(a, lo);
        b = std::min(b, hi);
        if (!(a < b) || (t0 >= a && t0 <= b)) continue;
        const double mu = std::min({std::abs(g.derivative(a, 1)), std::abs(g.derivative(b, 1)),
                                    std::abs(g.derivative(0.5 * (a + b), 1))});
        double sup = 0.0, var = 0.0, prev = w(a);
        for (int i = 0; i <= 64; ++i) {
            const double v = w(a + (b - a) * i / 64.0);
            sup = std::max(sup, std::abs(v));
            var += std::abs(v - prev);
            prev = v;
        }
        edge += mu > 0.0 ? (2.0 * sup + var) / (kPi * mu) : (b - a) * sup;
    }
    res.error_estimate = tail + diff_err + edge;
    if (!reliable) {
        // |value - I| <= |value| + int |w|
        double mass = 0.0;
        std::vector<double> cuts{std::max(lo, w.lo), std::min(hi, w.hi)};
        for (double c : w.breaks)
            if (c > cuts[0] && c < cuts[1]) cuts.push_back(c);
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            for (int k = 0; k < 16; ++k) {
                const double a = cuts[i] + (cuts[i + 1] - cuts[i]) * k / 16.0;
                mass += mass_panel(w, a, a + (cuts[i + 1] - cuts[i]) / 16.0);
            }
        res.error_estimate = std::max(res.error_estimate, std::abs(res.value) + mass);
    }
    return res;
}

cplx expansion_constant_c(double alpha, int nu) {
    require(nu >= 0, "expansion_constant_c: nu must be >= 0");
    const AlphaConstants c = alpha_constants(alpha);
    const double k = nu + 0.5;
    return std::polar(1.0, -kPi / 4.0) / (std::pow(cplx(0.0, 2.0), nu) * factorial(nu) * std::pow(2.0 * kPi, nu)) *
           std::pow(alpha, c.beta * k) / std::pow(alpha * (1.0 - alpha), k);
}

cplx expansion_constant_b(double alpha, int nu) {
    const AlphaConstants c = alpha_constants(alpha);
    return expansion_constant_c(alpha, nu) / std::pow(alpha, c.beta * (nu + 0.5));
}

// ---------------------------------------------------------------------------

TruncationWindows truncation_windows(const TruncationParams& p) {
    require(p.alpha > 0.0 && p.alpha < 1.0, "truncation_windows: need 0 < alpha < 1");
    require(p.h > 0.0 && p.u > 0.0 && p.m > 0.0 && p.n_size > 0.0 && p.q > 0.0 && p.x > 0.0 && p.s > 0.0,
            "truncation_windows: parameters must be positive");
    TruncationWindows t;
    const double base = p.alpha * p.h * p.u * p.m * p.n_size * p.q / std::pow(p.x, 1.0 - p.alpha);
    t.t1 = 0.25 * base;
    t.t2 = 4.0 * base;
    const double ahq = p.alpha * p.h * p.q;
    t.t3 = ahq * ahq * p.u * p.m / (4.0 * p.s * std::pow(p.x, 1.0 - 2.0 * p.alpha));
    t.t4 = 16.0 * t.t3;
    t.first_empty = t.t2 < 1.0;
    t.second_empty = t.t4 < 1.0;
    return t;
}

double gcd_pair_sum(double t1, double t2, double t3, double t4) {
    require(t1 >= 0.0 && t3 >= 0.0 && t1 <= t2 && t3 <= t4, "gcd_pair_sum: need 0 <= T1 <= T2, 0 <= T3 <= T4");
    const auto s_lo = static_cast<std::uint64_t>(std::floor(t1)) + 1;
    const auto s_hi = static_cast<std::uint64_t>(std::ceil(t2)) - 1;
    const auto g_lo = static_cast<std::uint64_t>(std::floor(t3)) + 1;
    const auto g_hi = static_cast<std::uint64_t>(std::ceil(t4)) - 1;
    if (s_hi < s_lo || g_hi < g_lo) return 0.0;
    if (static_cast<double>(s_hi - s_lo + 1) * static_cast<double>(g_hi - g_lo + 1) > 1e8)
        throw_resource("gcd_pair_sum: more than 1e8 pairs");
    std::vector<double> rows;
    for (std::uint64_t s = s_lo; s <= s_hi; ++s) {
        double acc = 0.0;
        for (std::uint64_t sg = g_lo; sg <= g_hi; ++sg) acc += std::sqrt(static_cast<double>(std::gcd(s, sg)));
        rows.push_back(acc);
    }
    return pairwise_sum(std::span<const double>(rows));
}

double gcd_pair_bound(double t2, double t4) {
    constexpr double kZeta32 = 2.612375348685488343;
    return kZeta32 * std::max(t2, 0.0) * std::max(t4, 0.0);
}

// ---------------------------------------------------------------------------

namespace {

struct DualOutcome {
    cplx sum;
    double abs_sum = 0.0;
    int last = 0;
    double tail = 0.0;
    double quad_error = 0.0;
};

// Sums prefactor * tau(chi; s) * integral(s) over s = 0, +-1, +-2, ... Stopping is
// judged on prefactor * max|tau| * |integral(s)| so vanishing Gauss sums cannot
// end the search early.
template <typename Integral>
DualOutcome sum_dual(const std::vector<cplx>& tau_mod_q, double prefactor, double lhs_abs, double must_pass,
                     const PoissonConfig& cfg, Integral&& integral) {
    const auto q = static_cast<std::int64_t>(tau_mod_q.size());
    double tau_max = 0.0;
    for (const cplx& t : tau_mod_q) tau_max = std::max(tau_max, std::abs(t));
    std::vector<cplx> terms;
    std::vector<double> bounds;  // per |s|
    DualOutcome out;

    // A term no larger than its own quadrature error counts as zero for stopping.
    auto add = [&](std::int64_t s) {
        const OscIntegralResult r = integral(s);
        out.quad_error += prefactor * tau_max * r.error_estimate;
        const cplx term = prefactor * tau_mod_q[static_cast<std::size_t>(mod_floor(s, q))] * r.value;
        terms.push_back(term);
        out.abs_sum += std::abs(term);
        const double mag = prefactor * tau_max * std::abs(r.value);
        return mag <= 4.0 * prefactor * tau_max * r.error_estimate ? 0.0 : mag;
    };

    bounds.push_back(add(0));
    const int cap = cfg.max_dual > 0 ? cfg.max_dual : cfg.dual_cap;
    int s = 0;
    while (s < cap) {
        ++s;
        bounds.push_back(add(s) + add(-s));
        if (cfg.max_dual > 0) continue;
        if (s < must_pass + cfg.block || s < cfg.block) continue;
        const double scale = std::max(lhs_abs, out.abs_sum);
        bool small = true;
        for (int j = 0; j < cfg.block; ++j) small = small && bounds[bounds.size() - 1 - j] <= cfg.tail_tol * scale;
        if (small) break;
    }
    out.last = s;
    for (int j = 0; j < cfg.block && j < static_cast<int>(bounds.size()); ++j) out.tail += bounds[bounds.size() - 1 - j];
    out.sum = pairwise_sum(std::span<const cplx>(terms));
    const double scale = std::max(lhs_abs, out.abs_sum);
    if (out.tail > cfg.tail_tol * scale * cfg.block)
        throw NumericError(ErrorKind::truncation, "poisson: dual sum tail not below tolerance", out.sum.real(),
                           out.sum.imag(), out.tail);
    return out;
}

std::vector<cplx> gauss_table(const CharacterTable& chars, std::size_t chi) {
    std::vector<cplx> t(chars.q());
    for (std::uint64_t s = 0; s < chars.q(); ++s) t[s] = gauss_sum(chars, chi, static_cast<std::int64_t>(s));
    return t;
}

void finish(PoissonCheck& out) {
    out.diff = std::abs(out.lhs - out.rhs);
    out.scale = std::max(out.scale, std::abs(out.lhs));
    out.rel_diff = out.scale > 0.0 ? out.diff / out.scale : out.diff;
}

}  // namespace

PoissonCheck poisson_verify_first(const CharacterTable& chars, const FirstPoissonCase& c, const PoissonConfig& cfg) {
    require(c.chi < chars.size(), "poisson_verify_first: character index out of range");
    require(c.u >= 1 && c.m >= 1 && c.n >= 1 && c.x > 0.0 && c.h >= 0.0, "poisson_verify_first: bad parameters");
    require(c.alpha > 0.0 && c.alpha < 0.5, "poisson_verify_first: need 0 < alpha < 1/2");
    const BumpWindow win = make_bump(c.window.y, c.window.delta, c.window.b0);
    const std::uint64_t q = chars.q();
    const double umn = static_cast<double>(c.u * c.m * c.n);

    PoissonCheck out;
    out.windows = truncation_windows({c.alpha, std::max(c.h, 1e-300), double(c.u), double(c.m), double(c.n),
                                      double(q), c.x, 1.0});

    // Direct side.
    const auto k_lo = static_cast<std::uint64_t>(std::max(1.0, std::ceil((1.0 - win.delta) * c.x / umn)));
    const auto k_hi = static_cast<std::uint64_t>(std::floor((win.y + win.delta) * c.x / umn));
    require(k_hi >= k_lo, "poisson_verify_first: no lattice points in the window");
    if (k_hi - k_lo + 1 > kPoissonLatticeBudget) throw_resource("poisson_verify_first: more than 10^4 lattice terms");
    std::vector<cplx> direct;
    for (std::uint64_t k = k_lo; k <= k_hi; ++k) {
        const cplx chi = chars.eval(c.chi, static_cast<std::int64_t>(k));
        if (chi == cplx(0.0, 0.0)) continue;
        const double t = umn * static_cast<double>(k) / c.x;
        const double amp = eval_bump(win, t);
        if (amp == 0.0) continue;
        direct.push_back(chi * amp * unit_phase(power_turns(c.h, c.u * c.m * c.n * k, c.alpha)));
    }
    out.lattice_terms = k_hi - k_lo + 1;
    out.lhs = pairwise_sum(std::span<const cplx>(direct));

    // Dual side.
    const WindowModel wm = bump_window_model(win);
    const auto tau = gauss_table(chars, c.chi);
    const double pref = c.x / (static_cast<double>(q) * umn);
    auto integral = [&](std::int64_t s) {
        FirstPhaseParams p{c.h, c.x, c.alpha, double(q), double(c.u), double(c.m), double(c.n), double(s)};
        return quad_osc(wm, PhaseModel::first(p), wm.lo, wm.hi, cfg.rel_tol);
    };
    const DualOutcome d = sum_dual(tau, pref, std::abs(out.lhs), out.windows.t2, cfg, integral);
    out.rhs = d.sum;
    out.scale = d.abs_sum;
    out.dual_max = d.last;
    out.tail_estimate = d.tail;
    out.quad_error = d.quad_error;

    const double j_len = win.y - 1.0 + 2.0 * win.delta;
    const double y_i = std::max(1.0, c.h * std::pow(c.x, c.alpha));
    const double r_unit = c.x / (2.0 * q * umn);  // R_I / |s|
    const double s_next = d.last + 1.0;
    const double a = cfg.lemma2_a;
    // sum over |s| > S of lemma2_bound(..., R_I = r_unit |s|, ...) via the integral comparison
    out.lemma2_tail = 2.0 * pref * static_cast<double>(q) *
                      lemma2_bound(1.0, win.delta, y_i, 1.0, r_unit * s_next, a, j_len, cfg.lemma2_constant) *
                      (1.0 + s_next / (a - 1.0));
    finish(out);
    return out;
}

namespace {

struct SecondGeometry {
    AlphaConstants ac;
    double kappa = 0.0;
    double tau_lo = 0.0, tau_hi = 0.0;
    BumpWindow win;
};

SecondGeometry second_geometry(const SecondPoissonCase& c, std::uint64_t q) {
    require(c.u >= 1 && c.m >= 1 && c.s >= 1 && c.x > 0.0 && c.h > 0.0, "poisson_verify_second: bad parameters");
    SecondGeometry g;
    g.ac = alpha_constants(c.alpha);
    g.win = make_bump(c.window.y, c.window.delta, c.window.b0);
    g.kappa = static_cast<double>(c.s) * std::pow(c.x, 1.0 - c.alpha) /
              (c.alpha * c.h * static_cast<double>(q * c.u * c.m));
    g.tau_lo = std::pow(1.0 - g.win.delta, 1.0 - c.alpha);
    g.tau_hi = std::pow(g.win.y + g.win.delta, 1.0 - c.alpha);
    return g;
}

// w~(tau) = (kappa tau)^(beta/2 - 1) psi(tau^delta)
WindowModel second_window(const SecondGeometry& g) {
    WindowModel m;
    const double kappa = g.kappa, expo = g.ac.beta / 2.0 - 1.0, delta = g.ac.delta;
    const BumpWindow win = g.win;
    m.f = [=](double tau) { return std::pow(kappa * tau, expo) * eval_bump(win, std::pow(tau, delta)); };
    m.lo = g.tau_lo;
    m.hi = g.tau_hi;
    const double a = 1.0, b = std::pow(win.y, 1.0 - g.ac.alpha);
    m.scale = (1.0 - g.ac.alpha) * std::pow(win.y + win.delta, -g.ac.alpha) * win.delta;
    m.transitions = {{g.tau_lo, a}, {b, g.tau_hi}};
    m.breaks = {g.tau_lo, a, b, g.tau_hi};
    return m;
}

}  // namespace

cplx second_dual_integral_tau(const SecondPoissonCase& c, std::uint64_t q, std::int64_t sigma, double rel_tol) {
    const SecondGeometry g = second_geometry(c, q);
    const WindowModel wm = second_window(g);
    SecondPhaseParams p{c.h, c.x, c.alpha, double(q), double(c.u), double(c.m), double(c.s), double(sigma)};
    return g.kappa * quad_osc(wm, PhaseModel::second(p), wm.lo, wm.hi, rel_tol).value;
}

cplx second_dual_integral_direct(const SecondPoissonCase& c, std::uint64_t q, std::int64_t sigma, double rel_tol) {
    const SecondGeometry g = second_geometry(c, q);
    const double qd = static_cast<double>(q);
    const double qum_s = qd * static_cast<double>(c.u * c.m) / static_cast<double>(c.s);
    const double amp_phase = (1.0 - c.alpha) * std::pow(std::pow(c.alpha, c.alpha) * c.h, g.ac.delta);
    const double gamma = g.ac.gamma, delta = g.ac.delta, expo = g.ac.beta / 2.0 - 1.0;
    const double alpha = c.alpha, h = c.h, x = c.x;
    const BumpWindow win = g.win;
    WindowModel m;
    // A(x) = x^(beta/2 - 1) psi(t0(x)), t0(x) = (alpha h q u m x / s)^delta / X
    m.f = [=](double v) {
        const double t0 = std::pow(alpha * h * qum_s * v, delta) / x;
        return std::pow(v, expo) * eval_bump(win, t0);
    };
    m.lo = g.kappa * g.tau_lo;
    m.hi = g.kappa * g.tau_hi;
    m.scale = g.kappa * (1.0 - alpha) * std::pow(win.y + win.delta, -alpha) * win.delta;
    const double a = g.kappa, b = g.kappa * std::pow(win.y, 1.0 - alpha);
    m.transitions = {{m.lo, a}, {b, m.hi}};
    m.breaks = {m.lo, a, b, m.hi};
    const double sg = static_cast<double>(sigma);
    const PhaseModel phase = PhaseModel::generic(
        [=](double v) { return amp_phase * std::pow(qum_s * v, gamma) - sg * v / qd; }, m.scale);
    return quad_osc(m, phase, m.lo, m.hi, rel_tol).value;
}

PoissonCheck poisson_verify_second(const CharacterTable& chars, const SecondPoissonCase& c, const PoissonConfig& cfg) {
    require(c.chi < chars.size(), "poisson_verify_second: character index out of range");
    const std::uint64_t q = chars.q();
    const SecondGeometry g = second_geometry(c, q);

    PoissonCheck out;
    out.windows = truncation_windows({c.alpha, c.h, double(c.u), double(c.m), 1.0, double(q), c.x, double(c.s)});

    const auto n_lo = static_cast<std::uint64_t>(std::max(1.0, std::ceil(g.kappa * g.tau_lo)));
    const auto n_hi = static_cast<std::uint64_t>(std::floor(g.kappa * g.tau_hi));
    require(n_hi >= n_lo, "poisson_verify_second: no lattice points in the window");
    if (n_hi - n_lo + 1 > kPoissonLatticeBudget) throw_resource("poisson_verify_second: more than 10^4 lattice terms");

    const double qum_s = static_cast<double>(q * c.u * c.m) / static_cast<double>(c.s);
    const double amp_phase = (1.0 - c.alpha) * std::pow(std::pow(c.alpha, c.alpha) * c.h, g.ac.delta);
    std::vector<cplx> direct;
    for (std::uint64_t n = n_lo; n <= n_hi; ++n) {
        const cplx chi = chars.eval(c.chi, static_cast<std::int64_t>(n));
        if (chi == cplx(0.0, 0.0)) continue;
        const double nd = static_cast<double>(n);
        const double t0 = std::pow(c.alpha * c.h * qum_s * nd, g.ac.delta) / c.x;
        const double psi = eval_bump(g.win, t0);
        if (psi == 0.0) continue;
        direct.push_back(chi * std::pow(nd, g.ac.beta / 2.0 - 1.0) * psi *
                         unit_phase(amp_phase * std::pow(qum_s * nd, g.ac.gamma)));
    }
    out.lattice_terms = n_hi - n_lo + 1;
    out.lhs = pairwise_sum(std::span<const cplx>(direct));

    const WindowModel wm = second_window(g);
    const auto tau = gauss_table(chars, c.chi);
    const double pref = g.kappa / static_cast<double>(q);
    auto integral = [&](std::int64_t sigma) {
        SecondPhaseParams p{c.h, c.x, c.alpha, double(q), double(c.u), double(c.m), double(c.s), double(sigma)};
        return quad_osc(wm, PhaseModel::second(p), wm.lo, wm.hi, cfg.rel_tol);
    };
    const DualOutcome d = sum_dual(tau, pref, std::abs(out.lhs), out.windows.t4, cfg, integral);
    out.rhs = d.sum;
    out.scale = d.abs_sum;
    out.dual_max = d.last;
    out.tail_estimate = d.tail;
    out.quad_error = d.quad_error;

    const double x_i = std::pow(g.kappa * g.tau_hi, g.ac.beta / 2.0 - 1.0);
    const double y_i = std::max(1.0, c.h * std::pow(c.x, c.alpha));
    const double r_unit = std::pow(c.x, 1.0 - c.alpha) * static_cast<double>(c.s) /
                          (2.0 * c.alpha * c.h * double(q) * double(q) * double(c.u * c.m));
    const double s_next = d.last + 1.0;
    const double a = cfg.lemma2_a;
    out.lemma2_tail = 2.0 * pref * static_cast<double>(q) *
                      lemma2_bound(x_i, wm.scale, y_i, 1.0, r_unit * s_next, a, g.tau_hi - g.tau_lo, cfg.lemma2_constant) *
                      (1.0 + s_next / (a - 1.0));
    finish(out);
    return out;
}

std::vector<PoissonGridCase> poisson_grid() {
    struct Variant {
        double alpha;
        int chi;  // 0 principal, 1 first non-principal, 2 last, 3 middle
        std::uint64_t u, m, n;
        std::uint64_t u2, m2, s2;
    };
    static constexpr Variant variants[] = {
        {0.05, 0, 1, 2, 3, 1, 2, 1}, {0.1, 1, 1, 2, 3, 1, 2, 1}, {0.05, 2, 1, 1, 5, 1, 1, 1},
        {0.1, 3, 2, 2, 1, 2, 1, 2},  {0.1, 0, 1, 1, 7, 1, 3, 1},
    };
    const double x = 1e4;
    std::vector<PoissonGridCase> out;
    for (std::uint64_t q : {3u, 5u, 7u, 12u}) {
        const auto size = static_cast<std::size_t>(euler_phi(q));
        for (const Variant& v : variants) {
            std::size_t chi = 0;
            if (v.chi == 1) chi = 1;
            if (v.chi == 2) chi = size - 1;
            if (v.chi == 3) chi = std::max<std::size_t>(1, size / 2);
            PoissonGridCase g;
            g.q = q;
            const double umn = double(v.u * v.m * v.n);
            g.first = {v.u, v.m, v.n, chi, std::round(3.0 * std::pow(x, 1.0 - v.alpha) / (4.0 * v.alpha * umn * q)),
                       v.alpha, x, BumpWindow{2.0, 0.1, 1.0}};
            const double h2 = std::sqrt(double(v.s2) * std::pow(x, 1.0 - 2.0 * v.alpha) / double(v.u2 * v.m2)) /
                              (v.alpha * double(q));
            g.second = {v.u2, v.m2, v.s2, chi, std::round(h2 * 10.0) / 10.0, v.alpha, x, BumpWindow{2.0, 0.1, 1.0}};
            out.push_back(g);
        }
    }
    return out;
}

}  // namespace fpl
