#include "kfl/metric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "kfl/error.hpp"

namespace kfl {

double pole_regularity_defect(const LatitudeGrid& grid, const Eigen::VectorXd& f) {
    const int n = grid.size();
    const double h = grid.spacing();
    double dmax = 0.0;
    for (int i = 0; i + 1 < n; ++i) dmax = std::max(dmax, std::abs(f[i + 1] - f[i]) / h);
    // Linear extrapolation of the first two face differences to the pole face.
    const double north = std::abs(2.0 * (f[1] - f[0]) - (f[2] - f[1])) / h;
    const double south = std::abs(2.0 * (f[n - 1] - f[n - 2]) - (f[n - 2] - f[n - 3])) / h;
    // A kink at the pole gives a defect of order |f'(0)|; smooth data gives
    // O(h^3 f'''') which this first-order tolerance absorbs.
    const double tol = 1e-8 + 2.0 * h * dmax;
    return std::max(north, south) / tol;
}

void check_pole_regularity(const LatitudeGrid& grid, const Eigen::VectorXd& f, const char* what) {
    const double defect = pole_regularity_defect(grid, f);
    if (defect > 1.0) {
        fail(ErrorKind::input, std::string(what) + " is not regular at a pole (derivative defect " +
                                   std::to_string(defect) + "x tolerance)");
    }
}

Eigen::VectorXd sample(const LatitudeGrid& grid, const std::function<double(double)>& fn) {
    Eigen::VectorXd out(grid.size());
    for (int i = 0; i < grid.size(); ++i) out[i] = fn(grid.node(i));
    return out;
}

ConformalMetric::ConformalMetric(GridPtr grid, Eigen::VectorXd u) : grid_(std::move(grid)), u_(std::move(u)) {
    factor_ = (2.0 * u_.array()).exp().matrix();
    omega_ = grid_->weights().cwiseProduct(factor_);
}

ConformalMetric ConformalMetric::from_samples(GridPtr grid, Eigen::VectorXd u) {
    if (!grid) fail(ErrorKind::input, "metric without a grid");
    if (u.size() != grid->size()) fail(ErrorKind::input, "conformal factor has the wrong number of samples");
    if (!u.allFinite()) fail(ErrorKind::degenerate_metric, "conformal factor is not finite");
    const double min_factor = std::exp(2.0 * u.minCoeff());
    if (!(min_factor >= kMinConformalFactor)) {
        fail(ErrorKind::degenerate_metric, "conformal factor e^{2u} = " + std::to_string(min_factor) +
                                               " is below the degeneracy floor");
    }
    if (!std::isfinite(std::exp(2.0 * u.maxCoeff()))) {
        fail(ErrorKind::degenerate_metric, "conformal factor overflows");
    }
    check_pole_regularity(*grid, u, "conformal factor");
    return ConformalMetric(std::move(grid), std::move(u));
}

ConformalMetric ConformalMetric::normalized(GridPtr grid, Eigen::VectorXd u) {
    ConformalMetric raw = from_samples(grid, u);
    const double shift = 0.5 * std::log(4.0 * std::numbers::pi / raw.area());
    u.array() += shift;
    return from_samples(std::move(grid), std::move(u));
}

ConformalMetric ConformalMetric::round(GridPtr grid) {
    const int n = grid->size();
    return from_samples(std::move(grid), Eigen::VectorXd::Zero(n));
}

ConformalMetric ConformalMetric::from_polynomial(GridPtr grid, double amplitude,
                                                 const std::vector<double>& coefficients) {
    Eigen::VectorXd u = sample(*grid, [&](double xi) {
        const double x = std::cos(xi);
        double acc = 0.0;
        for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * x + *it;
        return amplitude * acc;
    });
    return normalized(std::move(grid), std::move(u));
}

}  // namespace kfl
