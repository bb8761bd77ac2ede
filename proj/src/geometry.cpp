#include "kfl/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "kfl/error.hpp"

namespace kfl {

namespace ops {

Eigen::VectorXd round_laplacian(const LatitudeGrid& grid, const Eigen::VectorXd& f) {
    const int n = grid.size();
    const double coef = grid.flux_factor() / grid.spacing();
    const double two_pi = 2.0 * std::numbers::pi;
    Eigen::VectorXd out(n);
    double left = 0.0;  // flux through face i
    for (int i = 0; i < n; ++i) {
        const double right = (i + 1 < n) ? coef * grid.face_sin(i + 1) * (f[i + 1] - f[i]) : 0.0;
        out[i] = two_pi * (right - left) / grid.weights()[i];
        left = right;
    }
    return out;
}

Eigen::VectorXd central_difference(const LatitudeGrid& grid, const Eigen::VectorXd& f, double parity) {
    const int n = grid.size();
    const double inv = 0.5 / grid.spacing();
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) {
        const double lo = (i > 0) ? f[i - 1] : parity * f[0];
        const double hi = (i + 1 < n) ? f[i + 1] : parity * f[n - 1];
        out[i] = (hi - lo) * inv;
    }
    return out;
}

Eigen::VectorXcd central_difference(const LatitudeGrid& grid, const Eigen::VectorXcd& f, double parity) {
    return central_difference(grid, Eigen::VectorXd(f.real()), parity).cast<std::complex<double>>() +
           std::complex<double>(0.0, 1.0) *
               central_difference(grid, Eigen::VectorXd(f.imag()), parity).cast<std::complex<double>>();
}

Eigen::VectorXd second_difference(const LatitudeGrid& grid, const Eigen::VectorXd& f) {
    const int n = grid.size();
    const double inv = 1.0 / (grid.spacing() * grid.spacing());
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) {
        const double lo = (i > 0) ? f[i - 1] : f[0];
        const double hi = (i + 1 < n) ? f[i + 1] : f[n - 1];
        out[i] = (hi - 2.0 * f[i] + lo) * inv;
    }
    return out;
}

Eigen::VectorXd solve_tridiagonal(Eigen::VectorXd sub, Eigen::VectorXd diag, Eigen::VectorXd super,
                                  Eigen::VectorXd rhs) {
    const Eigen::Index n = diag.size();
    for (Eigen::Index i = 1; i < n; ++i) {
        if (diag[i - 1] == 0.0) fail(ErrorKind::numerical, "zero pivot in tridiagonal solve");
        const double m = sub[i] / diag[i - 1];
        diag[i] -= m * super[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    if (diag[n - 1] == 0.0) fail(ErrorKind::numerical, "zero pivot in tridiagonal solve");
    rhs[n - 1] /= diag[n - 1];
    for (Eigen::Index i = n - 2; i >= 0; --i) rhs[i] = (rhs[i] - super[i] * rhs[i + 1]) / diag[i];
    return rhs;
}

}  // namespace ops

ScalarField gauss_curvature(const ConformalMetric& m) {
    const Eigen::VectorXd lap = ops::round_laplacian(m.grid(), m.u());
    Eigen::VectorXd r = (1.0 - lap.array()) / m.factor().array();
    if (!r.allFinite()) fail(ErrorKind::degenerate_metric, "scalar curvature is not finite");
    return ScalarField(m.grid_ptr(), std::move(r));
}

ScalarField laplacian(const ConformalMetric& m, const ScalarField& f) {
    require_same_grid(m.grid(), *f.grid, "laplacian");
    check_pole_regularity(m.grid(), f.values, "laplacian argument");
    Eigen::VectorXd out = 0.5 * ops::round_laplacian(m.grid(), f.values).array() / m.factor().array();
    return ScalarField(m.grid_ptr(), std::move(out));
}

ScalarField poisson_solve(const ConformalMetric& m, const ScalarField& rhs, const PoissonOptions& opts) {
    require_same_grid(m.grid(), *rhs.grid, "poisson_solve");
    const LatitudeGrid& grid = m.grid();
    const int n = grid.size();
    const Eigen::VectorXd& omega = m.omega();

    const double mean = omega.dot(rhs.values);
    const double scale = omega.dot(rhs.values.cwiseAbs());
    if (std::abs(mean) > opts.solvability_tol * scale + 1e-300) {
        fail(ErrorKind::solvability, "poisson_solve: right-hand side has non-zero mean (" + std::to_string(mean) +
                                         " against total " + std::to_string(scale) + ")");
    }
    if (scale == 0.0) return ScalarField(m.grid_ptr(), Eigen::VectorXd::Zero(n));

    // In flux form: 2 pi [a_{i+1}(h_{i+1} - h_i) - a_i(h_i - h_{i-1})] = 2 omega_i rhs_i.
    // Pinning h_0 = 0 and dropping row 0 leaves a non-singular tridiagonal system;
    // the dropped row holds automatically because the right-hand side has zero mean.
    const double two_pi = 2.0 * std::numbers::pi;
    const double coef = grid.flux_factor() / grid.spacing();
    const int k = n - 1;
    Eigen::VectorXd sub = Eigen::VectorXd::Zero(k), diag(k), super = Eigen::VectorXd::Zero(k), b(k);
    for (int j = 0; j < k; ++j) {
        const int i = j + 1;
        const double a_left = two_pi * coef * grid.face_sin(i);
        const double a_right = (i + 1 < n) ? two_pi * coef * grid.face_sin(i + 1) : 0.0;
        diag[j] = -(a_left + a_right);
        if (j > 0) sub[j] = a_left;
        if (j + 1 < k) super[j] = a_right;
        b[j] = 2.0 * omega[i] * rhs.values[i];
    }
    const Eigen::VectorXd tail = ops::solve_tridiagonal(sub, diag, super, b);
    Eigen::VectorXd h(n);
    h[0] = 0.0;
    h.tail(k) = tail;
    h.array() -= omega.dot(h) / omega.sum();
    if (!h.allFinite()) fail(ErrorKind::numerical, "poisson_solve produced non-finite values");

    const Eigen::VectorXd lap = 0.5 * ops::round_laplacian(grid, h).array() / m.factor().array();
    const double residual = (lap - rhs.values).cwiseAbs().maxCoeff();
    if (residual > opts.residual_tol * (1.0 + rhs.values.cwiseAbs().maxCoeff())) {
        fail(ErrorKind::numerical, "poisson_solve residual " + std::to_string(residual) + " above tolerance");
    }
    return ScalarField(m.grid_ptr(), std::move(h));
}

RicciPotential ricci_potential(const ConformalMetric& m) {
    const ScalarField r = gauss_curvature(m);
    const double mu = m.integrate(r.values) / m.area();
    Eigen::VectorXd dev = r.values.array() - mu;
    // Remove the rounding-level mean so the solvability check sees an exact zero.
    dev.array() -= m.integrate(dev) / m.area();
    ScalarField h = poisson_solve(m, ScalarField(m.grid_ptr(), std::move(dev)));
    return {std::move(h), mu};
}

}  // namespace kfl
