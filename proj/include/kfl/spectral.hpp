#pragma once

#include <complex>
#include <map>
#include <vector>

#include <Eigen/Core>

#include "kfl/grid.hpp"
#include "kfl/metric.hpp"
#include "kfl/trajectory.hpp"

namespace kfl {

// A (1,0) vector field V = p(xi) e^{i(k+1) theta} d/dz written through its
// unitary-frame component p, which is S^1-invariant up to the phase e^{ik theta}.
// Smooth fields have p vanishing to order |k+1| at xi = 0 and |k-1| at xi = pi;
// the discrete forms below encode those orders as pole closure terms.
struct SectorVectorField {
    GridPtr grid;
    int sector = 0;
    Eigen::VectorXcd profile;
};

SectorVectorField make_sector_field(GridPtr grid, int sector, Eigen::VectorXcd profile);

// grad^{1,0} h: sector 0 with profile e^{-u} h' / sqrt 2.
SectorVectorField gradient_field(const ConformalMetric& m, const Eigen::VectorXd& h);

// Tridiagonal quadratic forms of one sector. Faces carry
//   D-+ p = (p_{i+1} - p_i) / h -+ l'_f (p_i + p_{i+1}) / 2,   l' = u' + (cos xi + k) / sin xi,
// weighted by pi sin(xi_f) h, plus the pole closure terms. With these forms
// ||nabla V||^2 - ||dbar V||^2 = int R |V|^2 omega holds exactly.
struct SectorForms {
    int sector = 0;
    Eigen::VectorXd dbar_diag, dbar_off;
    Eigen::VectorXd nabla_diag, nabla_off;
    Eigen::VectorXd mass;
};

SectorForms sector_forms(const ConformalMetric& m, int sector);

double dbar_energy(const ConformalMetric& m, const SectorVectorField& V);
double nabla_energy(const ConformalMetric& m, const SectorVectorField& V);
double mass_norm(const ConformalMetric& m, const SectorVectorField& V);
std::complex<double> inner(const ConformalMetric& m, const SectorVectorField& V, const SectorVectorField& W);
double curvature_pairing(const ConformalMetric& m, const SectorVectorField& V);

// Eigenvalues of dbar_energy against mass in one sector, ascending.
Eigen::VectorXd sector_spectrum(const ConformalMetric& m, int sector);

inline constexpr double kKernelRatio = 1e-8;

struct SpectralReport {
    int sector_cap = 0;
    std::map<int, double> sector_lambda;  // lowest positive eigenvalue per sector
    std::map<int, int> kernel_dim;
    int total_kernel_dim = 0;
    double lambda_min = 0.0;
    int lambda_sector = 0;
    bool tail_increasing = true;
    bool cap_warning = false;
};

SpectralReport lambda_min(const ConformalMetric& m, int sector_cap = 8);

struct HolomorphicKernel {
    SpectralReport report;
    std::vector<SectorVectorField> basis;  // orthonormal in the g inner product
};

// Throws a degeneracy error unless the discrete kernel has dimension 3.
HolomorphicKernel holomorphic_kernel(const ConformalMetric& m, int sector_cap = 8);

// The discrete holomorphic field of sector 0, scaled to best match the
// rotation generator profile e^u sin(xi).
SectorVectorField rotation_generator(const ConformalMetric& m);

SectorVectorField project_holo(const ConformalMetric& m, const SectorVectorField& V, const HolomorphicKernel& kernel);
SectorVectorField project_holo(const ConformalMetric& m, const SectorVectorField& V);

// Fut(W) through a holomorphy potential: W = grad^{1,0} theta_W and
// Fut(W) = -int theta_W (R - mu) omega. Independent of any derivative of h.
std::complex<double> futaki_via_potential(const ConformalMetric& m, const SectorVectorField& W);

struct ProjectionIdentity {
    double lhs = 0.0;  // ||pi grad h||^2
    double rhs = 0.0;  // Fut(pi grad h)
    double gap = 0.0;
};

ProjectionIdentity projection_futaki_identity(const ConformalMetric& m);

// |nabla V|^2 - |dbar V|^2 - int R |V|^2 omega, relative to |V|^2 + |nabla V|^2.
double bochner_kodaira_residual(const ConformalMetric& m, const SectorVectorField& V);

struct KeyInequalityRow {
    double t = 0.0;
    double lhs = 0.0;  // centred Ydot
    double rhs = 0.0;
    double slack = 0.0;
    bool satisfied = true;
    double Y = 0.0;
    double lambda = 0.0;
    double rate = 0.0;  // Ydot / Y
    bool in_tail = false;
    bool rate_in_band = true;
};

std::vector<KeyInequalityRow> key_inequality_check(const Trajectory& traj);

}  // namespace kfl
