#pragma once

#include <vector>

namespace fpl {

// C^inf step: 0 for t <= 0, 1 for t >= 1, f(t) / (f(t) + f(1 - t)) between,
// where f(t) = exp(-1/t).
double smooth_step(double t) noexcept;

// psi: 1 on [1, y], 0 outside [1 - delta, y + delta].
struct BumpWindow {
    double y = 2.0;
    double delta = 0.1;
    double b0 = 1.0;  // recorded in metadata only; delta is what shapes the window
};

BumpWindow make_bump(double y, double delta, double b0 = 1.0);
double eval_bump(const BumpWindow& w, double x) noexcept;

// Highest derivative order window_derivative supports.
inline constexpr int kMaxWindowDerivative = 6;

// j-th derivative of the bump at x (numerical).
double window_derivative(const BumpWindow& w, int j, double x);

// Master window Psi: 1 on [-1, 1], 0 outside [-theta, theta].
double master_window(double x, double theta) noexcept;

struct GridG {
    double theta = 2.0;
    int max_power = 0;

    double at(int l) const;
    std::vector<double> values() const;
    // Index l with D = theta^l (relative tolerance 1e-12), or -1.
    int index_of(double d) const noexcept;
};

struct DyadicPartition {
    double theta = 2.0;
    double a0 = 1.0;
    int max_power = 0;

    GridG grid() const { return {theta, max_power}; }
};

DyadicPartition make_partition(double theta, double a0, int max_power);

// Psi(x / D) - Psi(theta x / D); D must lie on the grid.
double eval_member(const DyadicPartition& p, double d, double x);
double eval_member_at(const DyadicPartition& p, int l, double x);

// Sum over the grid of eval_member; equals 1 on [1, theta^(max_power - 1)].
double partition_sum(const DyadicPartition& p, double x);

}  // namespace fpl
