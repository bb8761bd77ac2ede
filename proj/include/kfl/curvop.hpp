#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace kfl::curvop {

using cd = std::complex<double>;

// Pointwise Kahler curvature tensor in complex dimension 2, stored as
// R_{abar b cbar d} in a unitary frame with 0-based indices.
class CurvatureTensor2 {
public:
    static CurvatureTensor2 zero();

    // Validates the Kahler symmetries and Hermitian reality to `tol`
    // (relative to the largest component). Throws an input error naming the
    // identity that fails.
    static CurvatureTensor2 from_components(const std::array<cd, 16>& raw, double tol = 1e-12);

    cd operator()(int a, int b, int c, int d) const { return r_[index(a, b, c, d)]; }
    const std::array<cd, 16>& components() const { return r_; }

    // R_{abar b} = sum_c R_{abar b cbar c}
    Eigen::Matrix2cd ricci() const;
    double scalar() const;

    // Components in the frame e'_a = sum_p U_{pa} e_p.
    CurvatureTensor2 frame_change(const Eigen::Matrix2cd& u) const;

    static int index(int a, int b, int c, int d) { return ((a * 2 + b) * 2 + c) * 2 + d; }

private:
    explicit CurvatureTensor2(const std::array<cd, 16>& r) : r_(r) {}
    std::array<cd, 16> r_{};
};

// Orthonormal basis of real (1,1)-forms, viewed as Hermitian 2x2 matrices with
// inner product tr(phi psi): the Kahler direction I/sqrt2, then the Pauli
// matrices over sqrt2.
const std::array<Eigen::Matrix2cd, 4>& form_basis();

struct CurvatureOperatorMatrix {
    Eigen::Matrix4d full;

    double scalar_block() const { return full(0, 0); }
    Eigen::Vector3d coupling() const { return full.block<3, 1>(1, 0); }
    Eigen::Matrix3d traceless() const { return full.block<3, 3>(1, 1); }
};

CurvatureOperatorMatrix operator_matrix(const CurvatureTensor2& t);

// Inverse of operator_matrix. The 4x4 matrix must be symmetric with
// full(0,0) equal to the trace of the 3x3 block; otherwise no Kahler tensor
// produces it and an input error is raised.
CurvatureTensor2 from_operator(const Eigen::Matrix4d& op, double tol = 1e-12);

// m1 <= m2 <= m3.
Eigen::Vector3d traceless_eigenvalues(const CurvatureTensor2& t);

struct ConditionC {
    bool ricci_nonneg = false;
    bool two_nonneg = false;
    Eigen::Vector2d ricci_eigenvalues;
    Eigen::Vector3d m;

    bool holds() const { return ricci_nonneg && two_nonneg; }
};

ConditionC condition_c(const CurvatureTensor2& t);

struct BoundCheck {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool ok = true;
};

struct BoundReport {
    double scalar = 0.0;
    Eigen::Vector3d m;
    Eigen::Vector4d full_eigenvalues;
    double traceless_ricci_norm = 0.0;  // operator norm |S|
    double traceless_ricci_trace_sq = 0.0;  // tr(S^2)
    double spectral_bound = 0.0;            // C/2 + |S|
    std::vector<BoundCheck> checks;

    bool all_ok() const;
};

// Requires condition (C) and 0 <= R <= C.
BoundReport eigenvalue_bounds(const CurvatureTensor2& t, double c);

Eigen::Matrix2cd random_unitary(std::mt19937_64& rng);
Eigen::Matrix3d random_rotation(std::mt19937_64& rng);

// Draws tensors satisfying condition (C) with 0 <= R <= r_max: Op(S)
// eigenvalues from the 2-nonnegative cone, traceless Ricci inside the ball
// that keeps Ricci non-negative, a random SO(3) conjugation, reconstruction,
// and a random unitary frame change.
class ConditionCSampler {
public:
    ConditionCSampler(std::uint64_t seed, double r_max);

    CurvatureTensor2 next();
    int rejections() const { return rejections_; }

private:
    std::mt19937_64 rng_;
    double r_max_;
    int rejections_ = 0;
};

// Parses 16 lines "a b c d re im" (1-based indices, any order, '#' comments).
std::array<cd, 16> parse_components(const std::string& text);

}  // namespace kfl::curvop
