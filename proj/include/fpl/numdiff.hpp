#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "fpl/error.hpp"

namespace fpl {

// Weights c_k such that f^(order)(x) ~ sum_k c_k f(x + k h) / h^order over the
// symmetric stencil k = -m..m (Fornberg's recursion).
std::vector<double> central_stencil(int order, int half_width);

// Smallest symmetric stencil half-width able to resolve `order`.
inline int minimal_half_width(int order) { return order == 0 ? 0 : (order + 1) / 2; }

template <typename T>
struct DerivativeEstimate {
    T value{};
    double error = 0.0;  // |difference| between the last two Richardson diagonals
};

// order-th derivative of f at x from central differences at steps h0, h0/2, ...,
// combined by Richardson extrapolation (even error expansion in h).
template <typename F>
auto richardson_derivative(const F& f, double x, int order, double h0, int levels = 4)
    -> DerivativeEstimate<decltype(f(x))> {
    using T = decltype(f(x));
    require(order >= 0, "richardson_derivative: negative order");
    require(h0 > 0.0 && levels >= 1, "richardson_derivative: bad step schedule");
    if (order == 0) return {f(x), 0.0};

    const int m = minimal_half_width(order);
    const std::vector<double> w = central_stencil(order, m);
    std::vector<std::vector<T>> table(levels);
    double h = h0;
    for (int i = 0; i < levels; ++i, h *= 0.5) {
        T acc{};
        for (int k = -m; k <= m; ++k) {
            const double c = w[k + m];
            if (c != 0.0) acc += c * f(x + k * h);
        }
        table[i].push_back(acc / std::pow(h, order));
        double factor = 4.0;
        for (int j = 1; j <= i; ++j, factor *= 4.0) {
            table[i].push_back(table[i][j - 1] + (table[i][j - 1] - table[i - 1][j - 1]) / (factor - 1.0));
        }
    }
    DerivativeEstimate<T> out;
    out.value = table[levels - 1][levels - 1];
    if (levels >= 2) out.error = std::abs(out.value - table[levels - 2][levels - 2]);
    return out;
}

}  // namespace fpl
