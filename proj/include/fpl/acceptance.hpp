#pragma once

#include <cstdint>
#include <string>

namespace fpl {

// quick: reduced sizes for the CLI selftest; full: the stated acceptance sizes.
enum class AcceptanceScale { quick, full };

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string summary;      // one line of measured values
    double seconds = 0.0;
    double time_limit = 0.0;  // 0: none
    // Canonical text of every computed value (doubles as %.17g); what the
    // determinism criterion compares across thread counts.
    std::string payload;

    std::uint64_t digest() const noexcept;
};

inline constexpr int kCriterionCount = 11;

// Runs criterion `id` (1..11) on the current thread count, except 11, which
// reruns 1..10 (1..8 at quick scale) at 1, 4 and 8 threads and restores the
// previous count.
CriterionResult run_criterion(int id, AcceptanceScale scale = AcceptanceScale::full);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& text) noexcept;

}  // namespace fpl
