#pragma once

#include <functional>

#include <Eigen/Core>

#include "kfl/grid.hpp"

namespace kfl {

inline constexpr double kMinConformalFactor = 1e-12;

// S^1-symmetric metric g = e^{2u} g_round on a latitude grid.
class ConformalMetric {
public:
    // Validates u (finite, non-degenerate, regular at both poles) but keeps
    // its area as given.
    static ConformalMetric from_samples(GridPtr grid, Eigen::VectorXd u);

    // As from_samples, then shifts u by a constant so the area is 4 pi.
    static ConformalMetric normalized(GridPtr grid, Eigen::VectorXd u);

    static ConformalMetric round(GridPtr grid);

    // u = amplitude * P(cos xi) with P given by ascending coefficients,
    // normalised to area 4 pi.
    static ConformalMetric from_polynomial(GridPtr grid, double amplitude,
                                           const std::vector<double>& coefficients);

    const GridPtr& grid_ptr() const { return grid_; }
    const LatitudeGrid& grid() const { return *grid_; }
    const Eigen::VectorXd& u() const { return u_; }

    // e^{2u} per node.
    const Eigen::VectorXd& factor() const { return factor_; }

    // Cell areas under g, i.e. the quadrature weights of omega.
    const Eigen::VectorXd& omega() const { return omega_; }

    double area() const { return omega_.sum(); }

    double integrate(const Eigen::VectorXd& f) const { return omega_.dot(f); }

private:
    ConformalMetric(GridPtr grid, Eigen::VectorXd u);

    GridPtr grid_;
    Eigen::VectorXd u_;
    Eigen::VectorXd factor_;
    Eigen::VectorXd omega_;
};

// Throws an input error when the extrapolated one-sided derivative at either
// pole exceeds the grid tolerance.
void check_pole_regularity(const LatitudeGrid& grid, const Eigen::VectorXd& f, const char* what);

// Largest extrapolated |f'| at the two poles, relative to the tolerance used by
// check_pole_regularity (values above 1 fail).
double pole_regularity_defect(const LatitudeGrid& grid, const Eigen::VectorXd& f);

Eigen::VectorXd sample(const LatitudeGrid& grid, const std::function<double(double)>& fn);

}  // namespace kfl
