// Acceptance runner: one PASS/FAIL line per criterion. Exit status is nonzero
// when any selected criterion fails.

#include <CLI11.hpp>

#include <cstdio>
#include <vector>

#include "fpl/acceptance.hpp"
#include "fpl/error.hpp"
#include "fpl/parallel.hpp"

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria", "fpl_acceptance"};
    std::vector<int> ids;
    unsigned threads = 0;
    bool quick = false;
    app.add_option("--criterion", ids, "criteria to run (default: all)")->check(CLI::Range(1, fpl::kCriterionCount));
    app.add_option("--threads", threads, "worker threads (0: default)");
    app.add_flag("--quick", quick, "reduced sizes");
    CLI11_PARSE(app, argc, argv);

    if (threads > 0) fpl::set_thread_count(threads);
    if (ids.empty())
        for (int i = 1; i <= fpl::kCriterionCount; ++i) ids.push_back(i);

    int failed = 0;
    for (int id : ids) {
        try {
            const fpl::CriterionResult r =
                fpl::run_criterion(id, quick ? fpl::AcceptanceScale::quick : fpl::AcceptanceScale::full);
            std::printf("[%s] %2d %-24s %8.2f s  %s\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds,
                        r.summary.c_str());
            failed += !r.passed;
        } catch (const fpl::Error& e) {
            std::printf("[FAIL] %2d error: %s\n", id, e.what());
            ++failed;
        }
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
