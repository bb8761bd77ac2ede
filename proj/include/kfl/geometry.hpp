#pragma once

#include <Eigen/Core>

#include "kfl/grid.hpp"
#include "kfl/metric.hpp"

namespace kfl {

// Scalar curvature R = e^{-2u} (1 - Lap0 u), normalised so the round sphere has R = 1.
ScalarField gauss_curvature(const ConformalMetric& m);

// Complex Laplacian: half the Laplace-Beltrami operator of g.
ScalarField laplacian(const ConformalMetric& m, const ScalarField& f);

struct PoissonOptions {
    double solvability_tol = 1e-10;  // on |int rhs omega| / (int |rhs| omega)
    double residual_tol = 1e-8;      // on sup|Lap h - rhs| / (1 + sup|rhs|)
};

// Solves Lap_g h = rhs with int h omega = 0.
ScalarField poisson_solve(const ConformalMetric& m, const ScalarField& rhs, const PoissonOptions& opts = {});

struct RicciPotential {
    ScalarField h;
    double mu;
};

// mu is the average scalar curvature; h solves Lap h = R - mu with zero mean.
RicciPotential ricci_potential(const ConformalMetric& m);

namespace ops {

// Finite-volume round Laplace-Beltrami operator with zero flux through the poles.
Eigen::VectorXd round_laplacian(const LatitudeGrid& grid, const Eigen::VectorXd& f);

// Nodal central difference d/dxi. Ghost values across a pole are parity * the
// boundary value, so parity = +1 for quantities even in xi at the poles.
Eigen::VectorXd central_difference(const LatitudeGrid& grid, const Eigen::VectorXd& f, double parity = 1.0);

Eigen::VectorXcd central_difference(const LatitudeGrid& grid, const Eigen::VectorXcd& f, double parity);

// Three-point second difference with even ghosts.
Eigen::VectorXd second_difference(const LatitudeGrid& grid, const Eigen::VectorXd& f);

// Solves a tridiagonal system (sub, diag, super) x = rhs.
Eigen::VectorXd solve_tridiagonal(Eigen::VectorXd sub, Eigen::VectorXd diag, Eigen::VectorXd super,
                                  Eigen::VectorXd rhs);

}  // namespace ops

}  // namespace kfl
