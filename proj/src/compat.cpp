#include "kfl/compat.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "kfl/error.hpp"

namespace kfl::compat {

void validate_metric(const Eigen::MatrixXd& g) {
    if (g.rows() != g.cols() || g.rows() == 0 || g.rows() % 2 != 0) {
        fail(ErrorKind::input, "metric tensor must be a non-empty square matrix of even size");
    }
    if (!g.allFinite()) fail(ErrorKind::input, "metric tensor is not finite");
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff())) {
        fail(ErrorKind::input, "metric tensor is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 0.0)) fail(ErrorKind::input, "metric tensor is not positive definite");
}

void validate_complex_structure(const Eigen::MatrixXd& j) {
    if (j.rows() != j.cols() || j.rows() == 0 || j.rows() % 2 != 0) {
        fail(ErrorKind::input, "complex structure must be a non-empty square matrix of even size");
    }
    if (!j.allFinite()) fail(ErrorKind::input, "complex structure is not finite");
    const Eigen::MatrixXd sq = j * j + Eigen::MatrixXd::Identity(j.rows(), j.cols());
    if (sq.cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, j.cwiseAbs().maxCoeff() * j.cwiseAbs().maxCoeff())) {
        fail(ErrorKind::input, "complex structure does not square to -I");
    }
}

double hermitian_compat_residual(const Eigen::MatrixXd& g, const Eigen::MatrixXd& j) {
    if (g.rows() != j.rows() || g.cols() != j.cols()) fail(ErrorKind::input, "metric and complex structure shapes differ");
    validate_metric(g);
    validate_complex_structure(j);
    return (g - j.transpose() * g * j).cwiseAbs().maxCoeff();
}

double complex_structure_norm_sq(const Eigen::MatrixXd& g, const Eigen::MatrixXd& j) {
    if (g.rows() != j.rows() || g.cols() != j.cols()) fail(ErrorKind::input, "metric and complex structure shapes differ");
    validate_metric(g);
    return (j.transpose() * g * j * g.inverse()).trace();
}

namespace {

void check_field(const TensorField& f, const char* what) {
    if (!f.grid) fail(ErrorKind::input, std::string(what) + ": field without a grid");
    if (static_cast<int>(f.values.size()) != f.grid->size()) {
        fail(ErrorKind::input, std::string(what) + ": field length does not match the grid");
    }
    for (const auto& v : f.values) {
        if (!v.allFinite()) fail(ErrorKind::input, std::string(what) + ": field is not finite");
    }
}

void check_metric_field(const TensorField& g, const char* what) {
    check_field(g, what);
    for (const auto& v : g.values) {
        if (!(v.determinant() > 0.0) || !(v(0, 0) > 0.0)) {
            fail(ErrorKind::input, std::string(what) + ": metric field is degenerate");
        }
    }
}

}  // namespace

std::vector<Eigen::Matrix2d> xi_derivative(const TensorField& f) {
    const int n = f.grid->size();
    const double inv = 0.5 / f.grid->spacing();
    std::vector<Eigen::Matrix2d> out(n);
    for (int i = 0; i < n; ++i) {
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                const double parity = ((a == 0) + (b == 0)) % 2 == 0 ? 1.0 : -1.0;
                const double lo = (i > 0) ? f.values[i - 1](a, b) : parity * f.values[0](a, b);
                const double hi = (i + 1 < n) ? f.values[i + 1](a, b) : parity * f.values[n - 1](a, b);
                out[i](a, b) = (hi - lo) * inv;
            }
    }
    return out;
}

ChristoffelField christoffel(const TensorField& g) {
    check_metric_field(g, "christoffel");
    const auto dg = xi_derivative(g);
    // d[k](i, j) = d_k g_ij; only k = xi is non-zero.
    ChristoffelField out(g.values.size());
    for (std::size_t node = 0; node < g.values.size(); ++node) {
        const Eigen::Matrix2d gi = g.values[node].inverse();
        auto d = [&](int k, int i, int j) { return k == 0 ? dg[node](i, j) : 0.0; };
        for (int p = 0; p < 2; ++p)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    double acc = 0.0;
                    for (int k = 0; k < 2; ++k) acc += gi(p, k) * (d(i, k, j) + d(j, k, i) - d(k, i, j));
                    out[node][p](i, j) = 0.5 * acc;
                }
    }
    return out;
}

ChristoffelField christoffel_difference(const TensorField& g_ref, const TensorField& g) {
    check_metric_field(g_ref, "christoffel_difference");
    check_metric_field(g, "christoffel_difference");
    require_same_grid(*g_ref.grid, *g.grid, "christoffel_difference");
    const ChristoffelField gamma = christoffel(g_ref);
    const auto dg = xi_derivative(g);
    ChristoffelField out(g.values.size());
    for (std::size_t node = 0; node < g.values.size(); ++node) {
        const Eigen::Matrix2d& gm = g.values[node];
        const Eigen::Matrix2d gi = gm.inverse();
        const auto& G = gamma[node];
        // D_k g_ij with the reference connection.
        auto cov = [&](int k, int i, int j) {
            double v = (k == 0) ? dg[node](i, j) : 0.0;
            for (int m = 0; m < 2; ++m) v -= G[m](k, i) * gm(m, j) + G[m](k, j) * gm(i, m);
            return v;
        };
        for (int p = 0; p < 2; ++p)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    double acc = 0.0;
                    for (int k = 0; k < 2; ++k) acc += gi(p, k) * (cov(j, k, i) + cov(i, j, k) - cov(k, i, j));
                    out[node][p](i, j) = 0.5 * acc;
                }
    }
    return out;
}

double nabla_j_relation_residual(const TensorField& g_ref, const TensorField& g, const TensorField& j,
                                 double pole_margin) {
    check_field(j, "nabla_j_relation_residual");
    require_same_grid(*g_ref.grid, *j.grid, "nabla_j_relation_residual");
    const ChristoffelField gamma = christoffel(g_ref);
    const ChristoffelField h = christoffel_difference(g_ref, g);
    const auto dj = xi_derivative(j);
    double worst = 0.0;
    for (std::size_t node = 0; node < j.values.size(); ++node) {
        if (std::sin(j.grid->node(static_cast<int>(node))) < pole_margin) continue;
        const Eigen::Matrix2d& J = j.values[node];
        const auto& G = gamma[node];
        const auto& H = h[node];
        for (int k = 0; k < 2; ++k)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    double nabla = (k == 0) ? dj[node](a, b) : 0.0;
                    double star = 0.0;
                    for (int m = 0; m < 2; ++m) {
                        nabla += G[a](k, m) * J(m, b) - G[m](k, b) * J(a, m);
                        star += H[m](k, b) * J(a, m) - H[a](k, m) * J(m, b);
                    }
                    worst = std::max(worst, std::abs(nabla - star));
                }
    }
    return worst;
}

TensorField round_metric_field(GridPtr grid) {
    TensorField out{grid, {}};
    for (int i = 0; i < grid->size(); ++i) {
        const double s = std::sin(grid->node(i));
        Eigen::Matrix2d g;
        g << 1.0, 0.0, 0.0, s * s;
        out.values.push_back(g);
    }
    return out;
}

TensorField conformal_metric_field(const ConformalMetric& m) {
    TensorField out = round_metric_field(m.grid_ptr());
    for (int i = 0; i < m.grid().size(); ++i) out.values[i] *= m.factor()[i];
    return out;
}

TensorField pulled_back_metric_field(GridPtr grid, const Profile& f, const Profile& df, const Profile& u) {
    TensorField out{grid, {}};
    for (int i = 0; i < grid->size(); ++i) {
        const double x = grid->node(i);
        const double fx = f(x), d = df(x), s = std::sin(fx);
        Eigen::Matrix2d g;
        g << d * d, 0.0, 0.0, s * s;
        out.values.push_back(std::exp(2.0 * u(fx)) * g);
    }
    return out;
}

TensorField pulled_back_complex_structure(GridPtr grid, const Profile& f, const Profile& df) {
    TensorField out{grid, {}};
    for (int i = 0; i < grid->size(); ++i) {
        const double x = grid->node(i);
        const double d = df(x), s = std::sin(f(x));
        Eigen::Matrix2d j;
        j << 0.0, -s / d, d / s, 0.0;
        out.values.push_back(j);
    }
    return out;
}

}  // namespace kfl::compat
