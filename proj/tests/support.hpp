#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "kfl/grid.hpp"
#include "kfl/metric.hpp"
#include "kfl/spectral.hpp"

namespace testing_support {

inline const std::vector<double>& reference_coefficients() {
    static const std::vector<double> c{0.0, 0.0, 1.0, 0.5};
    return c;
}

inline kfl::ConformalMetric perturbed(int n, double amplitude = 0.05,
                                      const std::vector<double>& coeffs = reference_coefficients()) {
    return kfl::ConformalMetric::from_polynomial(kfl::make_grid(n), amplitude, coeffs);
}

// Random polynomial in cos(xi): smooth and even across both poles.
inline Eigen::VectorXd random_smooth(const kfl::LatitudeGrid& grid, std::uint64_t seed, int degree = 5,
                                     double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<double> c(degree + 1);
    for (double& x : c) x = scale * unit(rng);
    return kfl::sample(grid, [&](double xi) {
        double acc = 0.0;
        for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * std::cos(xi) + *it;
        return acc;
    });
}

// Random smooth sector-k profile with the pole vanishing orders of a global field.
inline kfl::SectorVectorField random_sector_field(const kfl::ConformalMetric& m, int k, std::uint64_t seed) {
    const Eigen::VectorXd poly = random_smooth(m.grid(), seed, 5);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const std::complex<double> phase(unit(rng), unit(rng));
    Eigen::VectorXcd p(m.grid().size());
    for (int i = 0; i < p.size(); ++i) {
        const double xi = m.grid().node(i);
        p[i] = std::pow(std::sin(0.5 * xi), std::abs(k + 1)) * std::pow(std::cos(0.5 * xi), std::abs(k - 1)) *
               poly[i] * phase;
    }
    return kfl::make_sector_field(m.grid_ptr(), k, p);
}

inline double sup_abs(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace testing_support
