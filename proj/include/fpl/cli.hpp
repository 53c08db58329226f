#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "fpl/error.hpp"

namespace fpl::cli {

inline constexpr const char* kVersion = "1.0.0";

enum class OutputFormat { csv, json };

// Every knob any subcommand reads. Integer-valued fields accept "1e6" on the
// command line; validate() rejects anything non-integral.
struct RunConfig {
    std::string command;

    double alpha = 0.1;
    double c = 0.0, d = 0.5;  // the interval I
    std::uint64_t x = 100'000;
    std::uint64_t y = 0;  // 0: 2X for expsum, 200 for the Gaussian phase
    std::uint64_t q = 1;
    std::uint64_t a = 1;
    std::uint64_t q_max = 31;  // Q
    double h = 1.0;

    // Constants the analysis leaves unspecified; echoed so every run records them.
    double c_log = 6.0;  // C: |h| <= (log X)^C
    double a0 = 1.0, b0 = 1.0;
    double d0 = 10.0, f0 = 10.0, a_i = 8.0;
    double vdc_constant = 8.0;

    unsigned threads = 0;  // 0: library default
    std::string cache_path;  // empty: $FPL_CACHE_DIR, then ./fpl_cache
    OutputFormat output = OutputFormat::csv;
    std::string out_path;   // empty: stdout
    std::string plot_dir;   // empty: no plot files
    bool timing = true;
    std::uint64_t seed = 1;

    // Subcommand specifics.
    std::uint64_t build = 0;    // cache --build N
    std::uint64_t n_max = 3000; // decompose-check
    int hb_k = 5;
    std::uint64_t hb_v = 0;     // 0: ceil(n^(1/k)) + 1 per n
    std::vector<double> tuple;  // classify --t
    double sigma = 0.2;
    std::uint64_t samples = 0;  // classify: random tuples when --t is absent
    std::int64_t u = 1, v = 1;  // kloosterman
    std::uint64_t kq_max = 0;   // kloosterman --qmax sweep
    std::uint64_t chi = 0;      // gauss / oscint
    std::int64_t s = 1;         // gauss frequency, oscint dual variable
    std::uint64_t q_sweep = 0;  // expsum: max_a |T| q / X for q <= q_sweep
    bool prime_moduli = false;  // bv, kloosterman --qmax
    std::string phase = "first";
    std::string method = "both";
    double osc_x = 100.0;  // oscint X
    double m = 2.0, n = 5.0, osc_u = 1.0, osc_q = 3.0, osc_sigma = 1.0;
    double window_y = 3.0, window_delta = 0.2;
    double tol = 1e-10;
    int terms = 1;

    // Throws Error(argument) naming the offending field.
    void validate() const;
    std::vector<std::pair<std::string, std::string>> echo() const;
};

struct NamedValue {
    std::string name;
    double re = 0.0;
    double im = 0.0;
    bool complex = false;
    friend bool operator==(const NamedValue&, const NamedValue&) = default;
};

struct ResultRecord {
    std::string command;
    std::vector<std::pair<std::string, std::string>> params;
    std::vector<NamedValue> values;
    std::vector<std::pair<std::string, bool>> invariant_flags;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    double elapsed_ms = 0.0;
    std::string version = kVersion;

    bool invariants_hold() const;
    std::string to_json() const;
    static ResultRecord from_json(const std::string& text);
    std::string to_csv() const;

    friend bool operator==(const ResultRecord&, const ResultRecord&) = default;
};

// Shortest text that reads back to the same double.
std::string format_number(double v);

// 3 for invariant, accuracy and truncation failures, 4 for resource limits,
// 2 for everything else (the input was at fault).
int exit_code(ErrorKind kind) noexcept;

// Exit status: 0 ok, 2 config error, 3 invariant violation, 4 resource limit.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fpl::cli
