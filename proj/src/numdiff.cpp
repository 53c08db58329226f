#include "fpl/numdiff.hpp"

namespace fpl {

std::vector<double> central_stencil(int order, int half_width) {
    require(order >= 0 && half_width >= 0 && 2 * half_width >= order,
            "central_stencil: stencil too small for the derivative order");
    const int n = 2 * half_width + 1;
    std::vector<double> nodes(n);
    for (int i = 0; i < n; ++i) nodes[i] = i - half_width;

    // Fornberg (1988), expansion point 0.
    std::vector<std::vector<double>> c(n, std::vector<double>(order + 1, 0.0));
    c[0][0] = 1.0;
    double c1 = 1.0;
    for (int i = 1; i < n; ++i) {
        double c2 = 1.0;
        for (int j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            for (int k = std::min(i, order); k >= 0; --k) {
                const double prev_i = k > 0 ? c[i - 1][k - 1] : 0.0;
                if (j == i - 1) c[i][k] = c1 * (k * prev_i - nodes[i - 1] * c[i - 1][k]) / c2;
            }
            for (int k = std::min(i, order); k >= 0; --k) {
                const double prev_j = k > 0 ? c[j][k - 1] : 0.0;
                c[j][k] = (nodes[i] * c[j][k] - k * prev_j) / c3;
            }
        }
        c1 = c2;
    }
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = c[i][order];
    return out;
}

}  // namespace fpl
