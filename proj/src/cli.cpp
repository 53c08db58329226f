#include "fpl/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <new>
#include <ostream>
#include <random>
#include <sstream>

#include "fpl/acceptance.hpp"
#include "fpl/arith.hpp"
#include "fpl/charkloost.hpp"
#include "fpl/decomp.hpp"
#include "fpl/error.hpp"
#include "fpl/expsums.hpp"
#include "fpl/oscillatory.hpp"
#include "fpl/parallel.hpp"

namespace fpl::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string format_number(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

namespace {

std::string num(double v) { return format_number(v); }
std::string num(std::uint64_t v) { return std::to_string(v); }
std::string num(std::int64_t v) { return std::to_string(v); }

const char* to_string(OutputFormat f) { return f == OutputFormat::csv ? "csv" : "json"; }

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string r = "\"";
    for (char ch : s) {
        if (ch == '"') r += '"';
        r += ch;
    }
    return r + "\"";
}

std::vector<double> parse_list(const std::string& text, const char* field) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            while (used < item.size() && item[used] == ' ') ++used;
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw_argument(std::string(field) + ": '" + item + "' is not a number");
        }
    }
    return out;
}

// Integer fields arrive as doubles so "1e6" parses.
std::uint64_t as_count(double v, const char* field, double lo = 0.0) {
    if (!(v >= lo) || v != std::floor(v) || v > 9.0e15)
        throw_argument(std::string(field) + ": expected an integer >= " + num(lo) + ", got " + num(v));
    return static_cast<std::uint64_t>(v);
}

std::int64_t as_signed(double v, const char* field) {
    if (v != std::floor(v) || std::abs(v) > 9.0e15) throw_argument(std::string(field) + ": expected an integer");
    return static_cast<std::int64_t>(v);
}

void check(bool ok, const std::string& msg) {
    if (!ok) throw_argument(msg);
}

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

void RunConfig::validate() const {
    check(alpha > 0.0 && alpha < 1.0, "alpha: must lie in (0, 1)");
    check(c >= 0.0 && c < d && d <= 1.0, "I: need 0 <= c < d <= 1");
    check(x >= 2, "X: must be >= 2");
    check(x < kSieveLimit, "X: above the sieve limit 2^48");
    check(q >= 1, "q: must be >= 1");
    check(q_max >= 1, "Q: must be >= 1");
    check(a0 > 0.0 && b0 > 0.0 && d0 > 0.0 && f0 > 0.0 && a_i > 0.0, "constants A0, B0, D0, F0, A_I must be positive");
    check(vdc_constant > 0.0, "vdc_constant: must be positive");
    check(threads <= 256, "threads: at most 256");
    if (command == "expsum") {
        check(y == 0 || y > x, "Y: must exceed X");
        check(a < q || q == 1, "a: must lie in [0, q)");
    }
    if (command == "count") check(a < q || q == 1, "a: must lie in [0, q)");
    if (command == "bv") check(q_max <= 100'000, "Q: at most 10^5");
    if (command == "cache") check(build >= 2, "build: the cache bound must be >= 2");
    if (command == "decompose-check") {
        check(n_max >= 2, "nmax: must be >= 2");
        check(hb_k >= 1 && hb_k <= 10, "k: must lie in [1, 10]");
    }
    if (command == "classify") {
        check(sigma > 0.1 && sigma < 0.5, "sigma: must lie in (1/10, 1/2)");
        check(!tuple.empty() || samples > 0, "t: give a tuple with --t or a sample count with --samples");
        for (double t : tuple) check(t >= 0.0, "t: entries must be non-negative");
        if (!tuple.empty()) {
            double sum = 0.0;
            for (double t : tuple) sum += t;
            check(std::abs(sum - 1.0) <= 1e-9, "t: entries must sum to 1");
        }
    }
    if (command == "kloosterman") {
        if (kq_max > 0) check(kq_max >= 2 && kq_max <= 2000, "qmax: must lie in [2, 2000]");
        else check(q >= 2, "q: must be >= 2");
    }
    if (command == "gauss") {
        check(q >= 2 && q <= kMaxCharacterModulus, "q: must lie in [2, 10^5]");
        check(chi < euler_phi(q), "chi: index must be below phi(q)");
    }
    if (command == "oscint") {
        check(phase == "first" || phase == "second" || phase == "gaussian", "phase: one of first, second, gaussian");
        check(method == "quad" || method == "lemma2" || method == "lemma3" || method == "both",
              "method: one of quad, lemma2, lemma3, both");
        check(osc_x > 0.0 && h > 0.0, "X, h: must be positive");
        check(m > 0.0 && n > 0.0 && osc_u > 0.0 && osc_q > 0.0, "q, u, m, n: must be positive");
        if (phase == "second") check(alpha < 0.5, "alpha: the second phase needs alpha < 1/2");
        check(window_y > 1.0 && window_delta > 0.0 && window_delta < std::min(0.25, (window_y - 1.0) / 2.0),
              "window: need y > 1 and 0 < delta < min(1/4, (y - 1) / 2)");
        check(tol > 0.0 && tol < 1.0, "tol: must lie in (0, 1)");
        check(terms >= 1 && terms <= 3, "terms: must lie in [1, 3]");
    }
}

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
    std::vector<std::pair<std::string, std::string>> e = {
        {"command", command},
        {"alpha", num(alpha)},
        {"I", num(c) + "," + num(d)},
        {"X", num(x)},
        {"Y", num(y)},
        {"q", num(q)},
        {"a", num(a)},
        {"Q", num(q_max)},
        {"h", num(h)},
        {"C", num(c_log)},
        {"A0", num(a0)},
        {"B0", num(b0)},
        {"D0", num(d0)},
        {"F0", num(f0)},
        {"A_I", num(a_i)},
        {"vdc_constant", num(vdc_constant)},
        {"threads", std::to_string(threads)},
        {"output", to_string(output)},
        {"seed", num(seed)},
    };
    if (command == "oscint")
        std::erase_if(e, [](const auto& kv) { return kv.first == "X" || kv.first == "q" || kv.first == "Y"; });
    auto add = [&](const char* k, std::string v) { e.emplace_back(k, std::move(v)); };
    if (command == "cache") add("build", num(build));
    if (command == "cache" || command == "count") add("cache", cache_path);
    if (command == "expsum") add("q_sweep", num(q_sweep));
    if (command == "bv" || command == "kloosterman") add("prime_moduli", prime_moduli ? "true" : "false");
    if (command == "decompose-check") {
        add("nmax", num(n_max));
        add("k", std::to_string(hb_k));
        add("V", num(hb_v));
    }
    if (command == "classify") {
        std::string t;
        for (double v : tuple) t += (t.empty() ? "" : ",") + num(v);
        add("t", t);
        add("sigma", num(sigma));
        add("samples", num(samples));
    }
    if (command == "kloosterman") {
        add("u", num(u));
        add("v", num(v));
        add("qmax", num(kq_max));
    }
    if (command == "gauss") {
        add("chi", num(chi));
        add("s", num(s));
    }
    if (command == "oscint") {
        add("phase", phase);
        add("method", method);
        add("oscint.X", num(osc_x));
        add("Y", num(y));
        add("oscint.q", num(osc_q));
        add("oscint.u", num(osc_u));
        add("m", num(m));
        add("n", num(n));
        add("s", num(s));
        add("oscint.sigma", num(osc_sigma));
        add("window", num(window_y) + "," + num(window_delta));
        add("tol", num(tol));
        add("terms", std::to_string(terms));
    }
    return e;
}

// ---------------------------------------------------------------------------
// ResultRecord
// ---------------------------------------------------------------------------

bool ResultRecord::invariants_hold() const {
    return std::all_of(invariant_flags.begin(), invariant_flags.end(), [](const auto& f) { return f.second; });
}

std::string ResultRecord::to_json() const {
    ojson j;
    j["command"] = command;
    j["version"] = version;
    j["params"] = ojson::object();
    for (const auto& [k, v] : params) j["params"][k] = v;
    j["values"] = ojson::array();
    for (const NamedValue& v : values) {
        ojson e{{"name", v.name}, {"re", v.re}};
        if (v.complex) e["im"] = v.im;
        j["values"].push_back(e);
    }
    j["invariant_flags"] = ojson::object();
    for (const auto& [k, v] : invariant_flags) j["invariant_flags"][k] = v;
    j["columns"] = columns;
    j["rows"] = rows;
    j["elapsed_ms"] = elapsed_ms;
    return j.dump(2) + "\n";
}

ResultRecord ResultRecord::from_json(const std::string& text) {
    ResultRecord r;
    try {
        const ojson j = ojson::parse(text);
        r.command = j.at("command").get<std::string>();
        r.version = j.at("version").get<std::string>();
        for (const auto& [k, v] : j.at("params").items()) r.params.emplace_back(k, v.get<std::string>());
        for (const auto& e : j.at("values")) {
            NamedValue v;
            v.name = e.at("name").get<std::string>();
            v.re = e.at("re").get<double>();
            v.complex = e.contains("im");
            if (v.complex) v.im = e.at("im").get<double>();
            r.values.push_back(v);
        }
        for (const auto& [k, v] : j.at("invariant_flags").items()) r.invariant_flags.emplace_back(k, v.get<bool>());
        r.columns = j.at("columns").get<std::vector<std::string>>();
        r.rows = j.at("rows").get<std::vector<std::vector<std::string>>>();
        r.elapsed_ms = j.at("elapsed_ms").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::io, std::string("ResultRecord::from_json: ") + e.what());
    }
    return r;
}

std::string ResultRecord::to_csv() const {
    std::string s = "# command=" + command + "\n# version=" + version + "\n";
    for (const auto& [k, v] : params)
        if (k != "command") s += "# " + k + "=" + v + "\n";
    for (const NamedValue& v : values)
        s += "# value." + v.name + "=" + num(v.re) + (v.complex ? "," + num(v.im) : std::string()) + "\n";
    for (const auto& [k, v] : invariant_flags) s += "# check." + k + "=" + (v ? "pass" : "fail") + "\n";
    if (elapsed_ms > 0.0) s += "# elapsed_ms=" + num(elapsed_ms) + "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) s += (i ? "," : "") + csv_cell(columns[i]);
    if (!columns.empty()) s += "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + csv_cell(row[i]);
        s += "\n";
    }
    return s;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace {

struct PlotPoint {
    double x, y;
    std::string series;
};

struct Plot {
    std::string name;
    std::string x_label, y_label;
    std::vector<PlotPoint> points;
};

struct Outcome {
    ResultRecord rec;
    std::vector<Plot> plots;
    std::vector<std::string> notes;  // diagnostics for stderr, never part of an artifact
};

void value(ResultRecord& r, const std::string& name, double v) { r.values.push_back({name, v, 0.0, false}); }
void value(ResultRecord& r, const std::string& name, cplx v) { r.values.push_back({name, v.real(), v.imag(), true}); }
void flag(ResultRecord& r, const std::string& name, bool ok) { r.invariant_flags.emplace_back(name, ok); }

fs::path cache_file(const RunConfig& cfg) {
    fs::path dir = cfg.cache_path;
    if (dir.empty()) {
        const char* env = std::getenv("FPL_CACHE_DIR");
        dir = env && *env ? fs::path(env) : fs::path("fpl_cache");
    }
    return dir / "primes.fplc";
}

// A cached table covering [2, x], or an empty one.
SieveTable cached_primes(const RunConfig& cfg, std::uint64_t x, Outcome& o) {
    const fs::path p = cache_file(cfg);
    if (!fs::exists(p)) return {};
    SieveTable t = load_prime_cache(p);
    if (t.lo() <= 2 && t.hi() > x) {
        o.notes.push_back("using prime cache " + p.string());
        return t;
    }
    o.notes.push_back("prime cache " + p.string() + " does not reach X; sieving");
    return {};
}

void cmd_sieve(const RunConfig& cfg, Outcome& o) {
    const SieveTable t = sieve_primes(2, cfg.x + 1);
    std::uint64_t last = 0;
    t.for_each_prime([&](std::uint64_t p) { last = p; });
    value(o.rec, "pi", static_cast<double>(t.count()));
    value(o.rec, "largest_prime", static_cast<double>(last));
    o.rec.columns = {"X", "pi", "largest_prime"};
    o.rec.rows = {{num(cfg.x), num(t.count()), num(last)}};
}

void cmd_cache(const RunConfig& cfg, Outcome& o) {
    const SieveTable t = sieve_primes(2, cfg.build + 1);
    const fs::path p = cache_file(cfg);
    fs::create_directories(p.parent_path().empty() ? fs::path(".") : p.parent_path());
    const fs::path tmp = p.string() + ".tmp";
    save_prime_cache(tmp, t);
    fs::rename(tmp, p);
    const SieveTable back = load_prime_cache(p);
    flag(o.rec, "cache_reads_back", back.count() == t.count() && back.hi() == t.hi());
    value(o.rec, "pi", static_cast<double>(t.count()));
    o.rec.columns = {"path", "lo", "hi", "primes"};
    o.rec.rows = {{p.string(), num(t.lo()), num(t.hi()), num(t.count())}};
}

void cmd_count(const RunConfig& cfg, Outcome& o) {
    const SieveTable cache = cached_primes(cfg, cfg.x, o);
    const SieveTable* primes = cache.hi() > 0 ? &cache : nullptr;
    const FracWindow win = make_frac_window(cfg.alpha, cfg.c, cfg.d);
    const FracWindow all = make_frac_window(cfg.alpha, 0.0, 1.0);
    const std::uint64_t a = cfg.q == 1 ? 0 : cfg.a;
    const std::uint64_t pi_i = count_pi_I(cfg.x, cfg.q, a, win, primes);
    const std::uint64_t pi = count_pi_I(cfg.x, cfg.q, a, all, primes);
    value(o.rec, "pi_I", static_cast<double>(pi_i));
    value(o.rec, "pi", static_cast<double>(pi));
    const double ratio = pi ? static_cast<double>(pi_i) / static_cast<double>(pi) : 0.0;
    value(o.rec, "ratio", ratio);
    flag(o.rec, "pi_I_le_pi", pi_i <= pi);
    o.rec.columns = {"X", "q", "a", "pi_I", "pi", "ratio", "interval_length"};
    o.rec.rows = {{num(cfg.x), num(cfg.q), num(a), num(pi_i), num(pi), num(ratio), num(win.length())}};
}

void cmd_expsum(const RunConfig& cfg, Outcome& o) {
    ExpSumSpec spec;
    spec.x = cfg.x;
    spec.y = cfg.y ? cfg.y : 2 * cfg.x;
    spec.h = as_signed(cfg.h, "h");
    spec.alpha = cfg.alpha;
    spec.q = cfg.q;
    spec.a = cfg.q == 1 ? 0 : cfg.a;
    spec.log_power_cap = cfg.c_log;
    const ExpSumResult r = exp_sum_primes(spec);
    value(o.rec, "T", r.value);
    value(o.rec, "abs_T", std::abs(r.value));
    value(o.rec, "count", static_cast<double>(r.count));
    flag(o.rec, "trivial_bound", std::abs(r.value) <= static_cast<double>(r.count) * (1.0 + 1e-12) + 1e-9);
    o.rec.columns = {"q", "a", "abs_T", "count", "abs_T_q_over_X"};
    o.rec.rows.push_back({num(spec.q), num(spec.a), num(std::abs(r.value)), num(r.count),
                          num(std::abs(r.value) * double(spec.q) / double(spec.x))});
    if (cfg.q_sweep == 0) return;
    Plot plot{"normalized_sum", "q", "max_a |T| q / X", {}};
    for (std::uint64_t q = 1; q <= cfg.q_sweep; ++q) {
        double worst = 0.0;
        std::uint64_t worst_a = 0;
        for (std::uint64_t a = 0; a < q; ++a) {
            if (gcd_u64(a, q) != 1) continue;
            ExpSumSpec s = spec;
            s.q = q;
            s.a = a;
            const double v = std::abs(exp_sum_primes(s).value) * double(q) / double(spec.x);
            if (v > worst) worst = v, worst_a = a;
        }
        o.rec.rows.push_back({num(q), num(worst_a), num(worst * double(spec.x) / double(q)), "", num(worst)});
        plot.points.push_back({double(q), worst, "max_a"});
    }
    o.plots.push_back(std::move(plot));
}

void cmd_bv(const RunConfig& cfg, Outcome& o) {
    const FracWindow win = make_frac_window(cfg.alpha, cfg.c, cfg.d);
    const DiscrepancyReport d = bv_discrepancy(cfg.x, cfg.q_max, win, cfg.prime_moduli);
    o.rec.columns = {"q", "worst_a", "deviation"};
    Plot dev{"deviation_by_q", "q", "max_a |pi_I(X;q,a) - pi_I(X)/phi(q)|", {}};
    Plot cum{"discrepancy_vs_Q", "Q", "D(Q) / pi(X)", {}};
    double running = 0.0;
    for (const DiscrepancyRow& row : d.per_q) {
        o.rec.rows.push_back({num(row.q), num(row.worst_a), num(row.deviation)});
        running += row.deviation;
        dev.points.push_back({double(row.q), row.deviation, "deviation"});
        cum.points.push_back({double(row.q), running / double(d.pi_all), "normalized"});
    }
    o.rec.rows.push_back({"total", "", num(d.total)});
    value(o.rec, "total", d.total);
    value(o.rec, "pi", static_cast<double>(d.pi_all));
    value(o.rec, "pi_I", static_cast<double>(d.pi_window));
    value(o.rec, "normalized", d.total / static_cast<double>(d.pi_all));
    o.plots.push_back(std::move(dev));
    o.plots.push_back(std::move(cum));
}

void cmd_decompose(const RunConfig& cfg, Outcome& o) {
    o.rec.columns = {"n", "V", "in_range", "sum", "lambda", "residual"};
    double worst = 0.0;
    std::uint64_t outside = 0;
    std::vector<double> sums(cfg.n_max + 1), vs(cfg.n_max + 1);
    parallel_for(cfg.n_max - 1, [&](std::size_t i) {
        const std::uint64_t n = i + 2;
        const std::uint64_t v =
            cfg.hb_v ? cfg.hb_v
                     : static_cast<std::uint64_t>(std::ceil(std::pow(double(n), 1.0 / cfg.hb_k))) + 1;
        vs[n] = double(v);
        sums[n] = heath_brown_sum(n, cfg.hb_k, v);
    });
    for (std::uint64_t n = 2; n <= cfg.n_max; ++n) {
        // The identity is exact only for n <= V^k; past that it is reported, not checked.
        const bool in_range = std::pow(vs[n], cfg.hb_k) >= double(n);
        const double lam = von_mangoldt(n);
        const double res = std::abs(sums[n] - lam);
        if (in_range) worst = std::max(worst, res);
        else ++outside;
        o.rec.rows.push_back({num(n), num(vs[n]), in_range ? "1" : "0", num(sums[n]), num(lam), num(res)});
    }
    value(o.rec, "max_residual", worst);
    value(o.rec, "outside_validity", static_cast<double>(outside));
    flag(o.rec, "matches_von_mangoldt", worst <= 1e-9);
}

void classify_one(const std::vector<double>& t, double sigma, Outcome& o, std::uint64_t id, int& empty,
                  int& bad) {
    const auto ws = classify_exponents(t, sigma);
    std::string tt;
    for (double v : t) tt += (tt.empty() ? "" : " ") + num(v);
    if (ws.empty()) {
        ++empty;
        o.rec.rows.push_back({num(id), tt, "none", "", "0"});
    }
    for (const TypeWitness& w : ws) {
        const bool ok = verify_witness(t, sigma, w);
        bad += !ok;
        std::string idx;
        for (int i : w.index) idx += (idx.empty() ? "" : " ") + std::to_string(i);
        o.rec.rows.push_back({num(id), tt, to_string(w.kind), idx, ok ? "1" : "0"});
    }
}

void cmd_classify(const RunConfig& cfg, Outcome& o) {
    o.rec.columns = {"tuple", "t", "type", "indices", "verified"};
    int empty = 0, bad = 0;
    if (!cfg.tuple.empty()) {
        classify_one(cfg.tuple, cfg.sigma, o, 0, empty, bad);
    } else {
        std::mt19937_64 rng(cfg.seed);
        std::exponential_distribution<double> ex(1.0);
        for (std::uint64_t i = 0; i < cfg.samples; ++i) {
            std::vector<double> t(1 + rng() % 10);
            double s = 0.0;
            for (double& v : t) s += (v = ex(rng));
            for (double& v : t) v /= s;
            classify_one(t, cfg.sigma, o, i, empty, bad);
        }
    }
    value(o.rec, "empty", empty);
    value(o.rec, "unverified", bad);
    flag(o.rec, "never_empty", empty == 0);
    flag(o.rec, "witnesses_verified", bad == 0);
}

void cmd_kloosterman(const RunConfig& cfg, Outcome& o) {
    if (cfg.kq_max == 0) {
        const KloostermanValue k = kloosterman(cfg.q, cfg.u, cfg.v);
        value(o.rec, "S", k.value);
        value(o.rec, "imag_residual", k.imag_residual);
        value(o.rec, "weil_bound", k.weil_bound);
        flag(o.rec, "weil", std::abs(k.value) <= k.weil_bound);
        o.rec.columns = {"q", "u", "v", "S", "weil_bound"};
        o.rec.rows = {{num(cfg.q), num(cfg.u), num(cfg.v), num(k.value), num(k.weil_bound)}};
        return;
    }
    o.rec.columns = {"q", "pairs", "violations", "min_margin"};
    Plot plot{"weil_margin", "q", "min (bound - |S|) / sqrt(q)", {}};
    std::uint64_t violations = 0;
    for (std::uint64_t q = 2; q <= cfg.kq_max; ++q) {
        if (cfg.prime_moduli && !is_prime_u64(q)) continue;
        std::vector<double> mins(q, 1e300);
        std::vector<std::uint64_t> bad(q, 0);
        parallel_for(q, [&](std::size_t u) {
            const KloostermanRow row = kloosterman_row(q, std::int64_t(u));
            for (std::uint64_t v = 0; v < q; ++v) {
                const double m = weil_bound(q, std::int64_t(u), std::int64_t(v)) - std::hypot(row.re[v], row.im[v]);
                mins[u] = std::min(mins[u], m);
                bad[u] += m < 0.0;
            }
        });
        const double qmin = *std::min_element(mins.begin(), mins.end());
        std::uint64_t qbad = 0;
        for (auto b : bad) qbad += b;
        violations += qbad;
        o.rec.rows.push_back({num(q), num(q * q), num(qbad), num(qmin)});
        plot.points.push_back({double(q), qmin / std::sqrt(double(q)), "min_margin"});
    }
    value(o.rec, "violations", static_cast<double>(violations));
    flag(o.rec, "weil", violations == 0);
    o.plots.push_back(std::move(plot));
}

void cmd_gauss(const RunConfig& cfg, Outcome& o) {
    const CharacterTable t = character_group(cfg.q);
    const cplx tau = gauss_sum(t, cfg.chi, cfg.s);
    const bool primitive = t.is_primitive(cfg.chi);
    value(o.rec, "tau", tau);
    value(o.rec, "abs_tau_sq", std::norm(tau));
    value(o.rec, "order", static_cast<double>(t.order(cfg.chi)));
    // |tau|^2 = q for primitive chi and (s, q) = 1.
    if (primitive && gcd_u64(mod_floor(cfg.s, cfg.q), cfg.q) == 1)
        flag(o.rec, "abs_sq_equals_q", std::abs(std::norm(tau) - double(cfg.q)) <= 1e-9 * double(cfg.q));
    o.rec.columns = {"q", "chi", "s", "re", "im", "primitive"};
    o.rec.rows = {{num(cfg.q), num(cfg.chi), num(cfg.s), num(tau.real()), num(tau.imag()), primitive ? "1" : "0"}};
}

// Smallest |g'| over the support, sampled; the non-stationary bound needs it away from 0.
double min_slope(const PhaseModel& g, double lo, double hi) {
    double r = 1e300;
    for (int i = 0; i <= 2048; ++i) r = std::min(r, std::abs(g.derivative(lo + (hi - lo) * i / 2048.0, 1)));
    return r;
}

void cmd_oscint(const RunConfig& cfg, Outcome& o) {
    WindowModel w;
    PhaseModel g;
    double y_i = 1.0;
    if (cfg.phase == "gaussian") {
        const double yy = cfg.y ? double(cfg.y) : 200.0;
        w = plateau_window_model(-0.5, 0.5, 0.05);
        g = PhaseModel::polynomial({0.0, 0.0, -yy / 2.0});
        y_i = yy;
    } else {
        w = bump_window_model(make_bump(cfg.window_y, cfg.window_delta));
        if (cfg.phase == "first")
            g = PhaseModel::first({cfg.h, cfg.osc_x, cfg.alpha, cfg.osc_q, cfg.osc_u, cfg.m, cfg.n, double(cfg.s)});
        else
            g = PhaseModel::second(
                {cfg.h, cfg.osc_x, cfg.alpha, cfg.osc_q, cfg.osc_u, cfg.m, double(cfg.s), cfg.osc_sigma});
        y_i = std::max(1.0, cfg.h * std::pow(cfg.osc_x, cfg.alpha));
    }
    o.rec.columns = {"method", "re", "im", "error_estimate", "terms_used"};
    auto row = [&](const OscIntegralResult& r) {
        o.rec.rows.push_back({fpl::to_string(r.method), num(r.value.real()), num(r.value.imag()),
                              num(r.error_estimate), std::to_string(r.terms_used)});
    };
    OscIntegralResult quad, lead;
    const bool want_quad = cfg.method == "quad" || cfg.method == "both";
    const bool want_lead = cfg.method == "lemma3" || cfg.method == "both";
    if (want_quad) {
        quad = quad_osc(w, g, w.lo, w.hi, cfg.tol);
        value(o.rec, "quad", quad.value);
        value(o.rec, "quad_error_estimate", quad.error_estimate);
        row(quad);
    }
    if (want_lead) {
        lead = stationary_expand(w, g, w.lo, w.hi, cfg.terms);
        value(o.rec, "lemma3", lead.value);
        value(o.rec, "lemma3_error_estimate", lead.error_estimate);
        row(lead);
    }
    if (cfg.method == "lemma2") {
        const double r_i = min_slope(g, w.lo, w.hi);
        if (!(r_i > 0.0)) throw Error(ErrorKind::unsupported, "oscint: lemma2 needs g' bounded away from 0 on the support");
        // X_I = sup |w| = 1, V_I = the window's variation scale, Q_I = 1.
        const double b = lemma2_bound(1.0, w.scale, y_i, 1.0, r_i, cfg.a_i, w.hi - w.lo);
        value(o.rec, "lemma2_bound", b);
        value(o.rec, "R_I", r_i);
        o.rec.rows.push_back({fpl::to_string(OscMethod::lemma2_bound), num(b), "0", "0", "0"});
    }
    if (cfg.method == "both") {
        const double diff = std::abs(quad.value - lead.value);
        value(o.rec, "difference", diff);
        flag(o.rec, "methods_agree", diff <= quad.error_estimate + lead.error_estimate);
    }
    if (cfg.phase == "gaussian") {
        Plot plot{"expansion_error_vs_curvature", "Y", "|lemma3 - quad|", {}};
        for (int k = 0; k <= 6; ++k) {
            const double yy = 25.0 * std::pow(2.0, k);
            const PhaseModel gk = PhaseModel::polynomial({0.0, 0.0, -yy / 2.0});
            const OscIntegralResult qk = quad_osc(w, gk, w.lo, w.hi, 1e-12);
            const OscIntegralResult lk = stationary_expand(w, gk, w.lo, w.hi, cfg.terms);
            plot.points.push_back({yy, std::abs(qk.value - lk.value), "actual"});
            plot.points.push_back({yy, lk.error_estimate, "estimate"});
        }
        o.plots.push_back(std::move(plot));
    }
}

void cmd_level(const RunConfig& cfg, Outcome& o) {
    const LevelOfDistribution l = level_of_distribution(cfg.alpha);
    // 12 significant digits: the formula's own rounding is not worth printing.
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", l.theta);
    value(o.rec, "theta", l.theta);
    o.rec.columns = {"alpha", "theta", "in_scope"};
    o.rec.rows = {{num(cfg.alpha), buf, l.in_scope ? "1" : "0"}};
}

void cmd_selftest(const RunConfig&, Outcome& o) {
    o.rec.columns = {"criterion", "name", "result", "summary"};
    for (int id : {1, 2, 3, 4, 5, 6, 7, 8, 11}) {
        const CriterionResult r = run_criterion(id, AcceptanceScale::quick);
        o.rec.rows.push_back({std::to_string(id), r.name, r.passed ? "PASS" : "FAIL", r.summary});
        flag(o.rec, "criterion_" + std::to_string(id), r.passed);
    }
}

const std::map<std::string, std::pair<std::function<void(const RunConfig&, Outcome&)>, const char*>>& commands() {
    static const std::map<std::string, std::pair<std::function<void(const RunConfig&, Outcome&)>, const char*>> m = {
        {"sieve", {cmd_sieve, "count primes up to X"}},
        {"cache", {cmd_cache, "sieve up to --build N and store the prime table"}},
        {"count", {cmd_count, "pi_I(X; q, a) and pi(X; q, a), reusing the prime cache"}},
        {"expsum", {cmd_expsum, "sum of e(h p^alpha) over primes X <= p < Y, p = a (q)"}},
        {"bv", {cmd_bv, "Bombieri-Vinogradov style discrepancy over q <= Q"}},
        {"decompose-check", {cmd_decompose, "Heath-Brown identity against Lambda(n) for n <= nmax"}},
        {"classify", {cmd_classify, "Type I/II/III classification of exponent tuples"}},
        {"kloosterman", {cmd_kloosterman, "Kloosterman sums and the Weil bound"}},
        {"gauss", {cmd_gauss, "Gauss sum tau(chi; s)"}},
        {"oscint", {cmd_oscint, "oscillatory integrals by quadrature and stationary phase"}},
        {"level", {cmd_level, "level of distribution theta(alpha)"}},
        {"selftest", {cmd_selftest, "reduced acceptance suite"}},
    };
    return m;
}

// Writes through a temporary in the same directory, then renames.
void write_atomic(const fs::path& path, const std::string& text) {
    const fs::path dir = path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorKind::io, "cannot open " + tmp.string() + " for writing");
        f << text;
        f.flush();
        if (!f) throw Error(ErrorKind::io, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string plot_csv(const Plot& p, const ResultRecord& rec) {
    std::string s = "# command=" + rec.command + "\n# version=" + rec.version + "\n";
    for (const auto& [k, v] : rec.params)
        if (k != "command") s += "# " + k + "=" + v + "\n";
    s += "# x=" + p.x_label + "\n# y=" + p.y_label + "\nx,y,series\n";
    for (const PlotPoint& pt : p.points) s += num(pt.x) + "," + num(pt.y) + "," + csv_cell(pt.series) + "\n";
    return s;
}

}  // namespace

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::invariant:
    case ErrorKind::accuracy:
    case ErrorKind::truncation: return 3;
    case ErrorKind::resource: return 4;
    default: return 2;
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Primes with fractional parts in an interval: numerical experiments", "fpl"};
    app.set_help_flag("--help", "print help");
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "flat key=value file; flags override it");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1, 1);

    // Integer options go through doubles so "1e6" parses.
    double x = double(cfg.x), y = 0, q = double(cfg.q), a = double(cfg.a), q_max = double(cfg.q_max);
    double threads = 0, seed = double(cfg.seed), build = 0, n_max = double(cfg.n_max), hb_v = 0, samples = 0;
    double u = 1, v = 1, kq_max = 0, chi = 0, s = 1, q_sweep = 0, hb_k = 5;
    // Lists arrive comma separated on the command line and split by the config reader.
    std::vector<std::string> interval{"0", "0.5"}, tuple, window{"3", "0.2"};
    std::string format = "csv";
    auto join = [](const std::vector<std::string>& v) {
        std::string r;
        for (const auto& e : v) r += (r.empty() ? "" : ",") + e;
        return r;
    };

    app.add_option("--alpha", cfg.alpha, "exponent alpha");
    app.add_option("--I", interval, "interval c,d for frac(p^alpha)")->delimiter(',');
    app.add_option("--X", x, "size X");
    app.add_option("--Y", y, "upper end Y (expsum); curvature Y (oscint --phase gaussian)");
    app.add_option("--q", q, "modulus q");
    app.add_option("--a", a, "residue a");
    app.add_option("--Q", q_max, "largest modulus Q");
    app.add_option("--h", cfg.h, "frequency h");
    app.add_option("--C", cfg.c_log, "log-power cap C for h");
    app.add_option("--A0", cfg.a0, "smoothing exponent A0");
    app.add_option("--B0", cfg.b0, "smoothing exponent B0");
    app.add_option("--D0", cfg.d0, "expansion constant D0");
    app.add_option("--F0", cfg.f0, "expansion constant F0");
    app.add_option("--A_I", cfg.a_i, "decay exponent A_I");
    app.add_option("--vdc-constant", cfg.vdc_constant, "van der Corput constant");
    app.add_option("--threads", threads, "worker threads (0: default)");
    app.add_option("--cache", cfg.cache_path, "prime cache directory");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--out", cfg.out_path, "artifact path (default stdout)");
    app.add_option("--plot-dir", cfg.plot_dir, "directory for x,y,series CSV files");
    app.add_flag("--no-timing{false}", cfg.timing, "leave elapsed time out of artifacts");
    app.add_option("--seed", seed, "seed for sampled inputs");
    app.add_option("--build", build, "cache: sieve bound");
    app.add_option("--nmax", n_max, "decompose-check: largest n");
    app.add_option("--k", hb_k, "decompose-check: identity order k");
    app.add_option("--V", hb_v, "decompose-check: fixed V (0: ceil(n^(1/k)) + 1)");
    app.add_option("--t", tuple, "classify: comma separated exponents")->delimiter(',');
    app.add_option("--sigma", cfg.sigma, "classify: level sigma; oscint: dual sigma");
    app.add_option("--samples", samples, "classify: random tuples when --t is absent");
    app.add_option("--u", u, "kloosterman / oscint u");
    app.add_option("--v", v, "kloosterman v");
    app.add_option("--qmax", kq_max, "kloosterman: sweep q <= qmax");
    app.add_option("--chi", chi, "character index");
    app.add_option("--s", s, "Gauss sum frequency; oscint dual s");
    app.add_option("--q-sweep", q_sweep, "expsum: sweep q <= q-sweep");
    app.add_flag("--prime-moduli", cfg.prime_moduli, "only prime moduli");
    app.add_option("--phase", cfg.phase, "oscint: first, second or gaussian");
    app.add_option("--method", cfg.method, "oscint: quad, lemma2, lemma3 or both");
    app.add_option("--m", cfg.m, "oscint m");
    app.add_option("--n", cfg.n, "oscint n");
    app.add_option("--window", window, "oscint bump y,delta")->delimiter(',');
    app.add_option("--tol", cfg.tol, "oscint quadrature tolerance");
    app.add_option("--terms", cfg.terms, "oscint expansion terms (1-3)");

    for (const auto& [name, entry] : commands()) app.add_subcommand(name, entry.second)->fallthrough();

    const auto start = std::chrono::steady_clock::now();
    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "fpl: " << e.what() << "\n";
        return 2;
    }

    Outcome o;
    try {
        cfg.command = app.get_subcommands().front()->get_name();
        const bool osc = cfg.command == "oscint";
        if (!osc) cfg.x = as_count(x, "X");
        cfg.y = as_count(y, "Y");
        cfg.q = as_count(q, "q", 1);
        cfg.a = as_count(a, "a");
        cfg.q_max = as_count(q_max, "Q", 1);
        cfg.threads = static_cast<unsigned>(as_count(threads, "threads"));
        cfg.seed = as_count(seed, "seed");
        cfg.build = as_count(build, "build");
        cfg.n_max = as_count(n_max, "nmax");
        cfg.hb_k = static_cast<int>(as_count(hb_k, "k", 1));
        cfg.hb_v = as_count(hb_v, "V");
        cfg.samples = as_count(samples, "samples");
        cfg.u = as_signed(u, "u");
        cfg.v = as_signed(v, "v");
        cfg.kq_max = as_count(kq_max, "qmax");
        cfg.chi = as_count(chi, "chi");
        cfg.s = as_signed(s, "s");
        cfg.q_sweep = as_count(q_sweep, "q-sweep");
        cfg.output = format == "json" ? OutputFormat::json : OutputFormat::csv;
        const std::vector<double> iv = parse_list(join(interval), "I");
        check(iv.size() == 2, "I: expected c,d");
        cfg.c = iv[0];
        cfg.d = iv[1];
        if (!tuple.empty()) cfg.tuple = parse_list(join(tuple), "t");
        if (osc) {
            // oscint reads the same flags on its own scale.
            cfg.osc_x = app.count("--X") ? x : 100.0;
            cfg.osc_q = app.count("--q") ? q : 3.0;
            cfg.osc_u = u;
            cfg.osc_sigma = app.count("--sigma") ? cfg.sigma : 1.0;
            if (!app.count("--alpha")) cfg.alpha = 0.5;
            const std::vector<double> wv = parse_list(join(window), "window");
            check(wv.size() == 2, "window: expected y,delta");
            cfg.window_y = wv[0];
            cfg.window_delta = wv[1];
        }
        cfg.validate();
        if (cfg.threads > 0) set_thread_count(cfg.threads);

        o.rec.command = cfg.command;
        o.rec.params = cfg.echo();
        commands().at(cfg.command).first(cfg, o);
        if (cfg.timing)
            o.rec.elapsed_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

        const std::string text = cfg.output == OutputFormat::json ? o.rec.to_json() : o.rec.to_csv();
        if (cfg.out_path.empty()) out << text;
        else write_atomic(cfg.out_path, text);
        if (!cfg.plot_dir.empty())
            for (const Plot& p : o.plots)
                write_atomic(fs::path(cfg.plot_dir) / (cfg.command + "_" + p.name + ".csv"), plot_csv(p, o.rec));
        for (const std::string& n : o.notes) err << "fpl: " << n << "\n";
    } catch (const Error& e) {
        err << "fpl: " << fpl::to_string(e.kind()) << ": " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::bad_alloc&) {
        err << "fpl: resource: out of memory\n";
        return 4;
    } catch (const fs::filesystem_error& e) {
        err << "fpl: io: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "fpl: internal: " << e.what() << "\n";
        return 3;
    }
    if (!o.rec.invariants_hold()) {
        for (const auto& [k, ok] : o.rec.invariant_flags)
            if (!ok) err << "fpl: invariant violated: " << k << "\n";
        return 3;
    }
    return 0;
}

}  // namespace fpl::cli
