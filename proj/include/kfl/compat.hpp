#pragma once

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "kfl/grid.hpp"
#include "kfl/metric.hpp"

namespace kfl::compat {

// Pointwise validators; both throw input errors.
void validate_metric(const Eigen::MatrixXd& g);
void validate_complex_structure(const Eigen::MatrixXd& j);

// sup-norm of g - J^T g J; zero iff J is g-orthogonal.
double hermitian_compat_residual(const Eigen::MatrixXd& g, const Eigen::MatrixXd& j);

// |J|_g^2 = g_{ac} g^{bd} J^a_b J^c_d = tr(J^T g J g^{-1}). Equals 2n for a compatible pair.
double complex_structure_norm_sq(const Eigen::MatrixXd& g, const Eigen::MatrixXd& j);

// S^1-invariant 2x2 tensor fields in (xi, theta) coordinates on the latitude
// grid. Derivatives in theta vanish; xi derivatives are central differences.
struct TensorField {
    GridPtr grid;
    std::vector<Eigen::Matrix2d> values;
};

// H^p_{ij} stored as h[node][p](i, j).
using ChristoffelField = std::vector<std::array<Eigen::Matrix2d, 2>>;

// H^p_{ij} = (1/2) g^{pk} (D_j g_{ki} + D_i g_{jk} - D_k g_{ij}) with D the
// Levi-Civita connection of g_ref. This is Gamma(g) - Gamma(g_ref).
ChristoffelField christoffel_difference(const TensorField& g_ref, const TensorField& g);

// sup over nodes and indices of |D_k J^a_b - (H * J)_k^a_b| with
// (H * J)_k^a_b = H^m_{kb} J^a_m - H^a_{km} J^m_b, which vanishes when g's own
// connection preserves J. Nodes with sin(xi) < pole_margin are skipped; the
// polar coordinates make xi-differences first order in sup norm next to the poles.
double nabla_j_relation_residual(const TensorField& g_ref, const TensorField& g, const TensorField& j,
                                 double pole_margin = 0.0);

// Christoffel symbols Gamma^p_{ij} of a field, by the same differences.
ChristoffelField christoffel(const TensorField& g);

// xi-derivative of each component. Ghost values across a pole take the sign
// (-1)^(number of xi indices), the parity of a smooth tensor in polar coordinates.
std::vector<Eigen::Matrix2d> xi_derivative(const TensorField& f);

using Profile = std::function<double(double)>;

// Fixtures on the latitude grid.
TensorField round_metric_field(GridPtr grid);
TensorField conformal_metric_field(const ConformalMetric& m);

// Pull-back of e^{2u} g_round through xi -> f(xi): e^{2u(f)} (f'^2 dxi^2 + sin^2 f dtheta^2).
TensorField pulled_back_metric_field(GridPtr grid, const Profile& f, const Profile& df, const Profile& u);

// Rotation by +90 degrees for the orientation d_xi, d_theta of the pulled-back
// round metric: J d_xi = (f' / sin f) d_theta, J d_theta = -(sin f / f') d_xi.
// f = identity gives the standard structure of the round sphere.
TensorField pulled_back_complex_structure(GridPtr grid, const Profile& f, const Profile& df);

}  // namespace kfl::compat
