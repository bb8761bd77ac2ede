#pragma once

// Closed-form curvature and connection data for axisymmetric conformal
// factors, derived by hand for the tests.

#include <cmath>

namespace oracle {

// R = e^{-2u} (1 - Lap_round u) for u = a cos(xi) + c, using Lap cos = -2 cos.
inline double curvature_cos(double a, double c, double xi) {
    return std::exp(-2.0 * (a * std::cos(xi) + c)) * (1.0 + 2.0 * a * std::cos(xi));
}

// u = a cos^2(xi): Lap u = u'' + cot(xi) u' = -2a (3 cos^2 - 1).
inline double curvature_cos2(double a, double xi) {
    const double c = std::cos(xi);
    return std::exp(-2.0 * a * c * c) * (1.0 + 2.0 * a * (3.0 * c * c - 1.0));
}

// Christoffel difference of e^{2u} g_round against g_round in (xi, theta):
// H^p_ij = delta^p_i u_j + delta^p_j u_i - g_ij grad^p u, with only u_xi = u'.
// Returns H^p_ij for p, i, j in {0, 1}.
inline double conformal_christoffel_difference(int p, int i, int j, double xi, double du) {
    const double s2 = std::sin(xi) * std::sin(xi);
    if (p == 0) {
        if (i == 0 && j == 0) return du;
        if (i == 1 && j == 1) return -s2 * du;
        return 0.0;
    }
    if ((i == 0 && j == 1) || (i == 1 && j == 0)) return du;
    return 0.0;
}

}  // namespace oracle
