#include "fpl/smoothing.hpp"

#include <algorithm>
#include <cmath>

#include "fpl/error.hpp"
#include "fpl/numdiff.hpp"

namespace fpl {

double smooth_step(double t) noexcept {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    // f(t) / (f(t) + f(1-t)) = 1 / (1 + exp(1/t - 1/(1-t)))
    return 1.0 / (1.0 + std::exp(1.0 / t - 1.0 / (1.0 - t)));
}

BumpWindow make_bump(double y, double delta, double b0) {
    require(y > 1.0, "make_bump: y must exceed 1");
    require(delta > 0.0 && delta < 0.25 && delta < (y - 1.0) / 2.0,
            "make_bump: delta must lie in (0, min(1/4, (y-1)/2))");
    require(b0 >= 1.0, "make_bump: b0 must be >= 1");
    return {y, delta, b0};
}

double eval_bump(const BumpWindow& w, double x) noexcept {
    if (x >= 1.0 && x <= w.y) return 1.0;
    if (x <= 1.0 - w.delta || x >= w.y + w.delta) return 0.0;
    if (x < 1.0) return smooth_step((x - (1.0 - w.delta)) / w.delta);
    return smooth_step((w.y + w.delta - x) / w.delta);
}

double window_derivative(const BumpWindow& w, int j, double x) {
    require(j >= 0, "window_derivative: negative order");
    if (j > kMaxWindowDerivative)
        throw Error(ErrorKind::unsupported, "window_derivative: order above 6 is not implemented");
    if (j == 0) return eval_bump(w, x);
    const double h0 = w.delta / 32.0;
    // Stencil entirely inside a flat region: every derivative vanishes identically.
    const double reach = minimal_half_width(j) * h0;
    const double a = x - reach, b = x + reach;
    if ((a >= 1.0 && b <= w.y) || b <= 1.0 - w.delta || a >= w.y + w.delta) return 0.0;
    auto f = [&w](double t) { return eval_bump(w, t); };
    return richardson_derivative(f, x, j, h0, 4).value;
}

double master_window(double x, double theta) noexcept {
    const double a = std::abs(x);
    if (a <= 1.0) return 1.0;
    if (a >= theta) return 0.0;
    return smooth_step((theta - a) / (theta - 1.0));
}

double GridG::at(int l) const {
    require(l >= 0 && l <= max_power, "GridG: index out of range");
    return std::pow(theta, l);
}

std::vector<double> GridG::values() const {
    std::vector<double> out;
    out.reserve(max_power + 1);
    for (int l = 0; l <= max_power; ++l) out.push_back(std::pow(theta, l));
    return out;
}

int GridG::index_of(double d) const noexcept {
    if (!(d > 0.0)) return -1;
    const double l = std::round(std::log(d) / std::log(theta));
    if (l < 0 || l > max_power) return -1;
    const double g = std::pow(theta, l);
    return std::abs(d - g) <= 1e-12 * g ? static_cast<int>(l) : -1;
}

DyadicPartition make_partition(double theta, double a0, int max_power) {
    require(theta > 1.0, "make_partition: theta must exceed 1");
    require(a0 >= 1.0, "make_partition: a0 must be >= 1");
    require(max_power >= 1, "make_partition: max_power must be >= 1");
    return {theta, a0, max_power};
}

double eval_member_at(const DyadicPartition& p, int l, double x) {
    require(l >= 0 && l <= p.max_power, "eval_member: D not on grid");
    require(x >= 0.0, "eval_member: x must be non-negative");
    const double d = std::pow(p.theta, l);
    if (x <= d / p.theta || x >= d * p.theta) return 0.0;
    return master_window(x / d, p.theta) - master_window(p.theta * x / d, p.theta);
}

double eval_member(const DyadicPartition& p, double d, double x) {
    const int l = p.grid().index_of(d);
    if (l < 0) throw_argument("eval_member: D not on grid");
    return eval_member_at(p, l, x);
}

double partition_sum(const DyadicPartition& p, double x) {
    require(x >= 0.0, "partition_sum: x must be non-negative");
    if (x == 0.0) return 0.0;
    // Only members with x in (D/theta, D theta) are non-zero.
    const int centre = static_cast<int>(std::floor(std::log(x) / std::log(p.theta)));
    const int lo = std::max(0, centre - 2);
    const int hi = std::min(p.max_power, centre + 2);
    double s = 0.0;
    for (int l = lo; l <= hi; ++l) s += eval_member_at(p, l, x);
    return s;
}

}  // namespace fpl
