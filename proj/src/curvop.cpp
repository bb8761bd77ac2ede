#include "kfl/curvop.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "kfl/error.hpp"

namespace kfl::curvop {

namespace {

double max_abs(const std::array<cd, 16>& r) {
    double m = 0.0;
    for (const cd& z : r) m = std::max(m, std::abs(z));
    return m;
}

}  // namespace

CurvatureTensor2 CurvatureTensor2::zero() { return CurvatureTensor2(std::array<cd, 16>{}); }

CurvatureTensor2 CurvatureTensor2::from_components(const std::array<cd, 16>& raw, double tol) {
    for (const cd& z : raw) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            fail(ErrorKind::input, "curvature tensor has non-finite components");
        }
    }
    const double bound = tol * std::max(1.0, max_abs(raw));
    struct Identity {
        const char* name;
        int (*other)(int, int, int, int);
        bool conjugate;
    };
    const Identity identities[] = {
        {"R_{abar b cbar d} = R_{cbar b abar d}", [](int a, int b, int c, int d) { return index(c, b, a, d); }, false},
        {"R_{abar b cbar d} = R_{abar d cbar b}", [](int a, int b, int c, int d) { return index(a, d, c, b); }, false},
        {"R_{abar b cbar d} = conj(R_{bbar a dbar c})", [](int a, int b, int c, int d) { return index(b, a, d, c); },
         true},
    };
    for (const Identity& id : identities) {
        double worst = 0.0;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c)
                    for (int d = 0; d < 2; ++d) {
                        const cd lhs = raw[index(a, b, c, d)];
                        cd rhs = raw[id.other(a, b, c, d)];
                        if (id.conjugate) rhs = std::conj(rhs);
                        worst = std::max(worst, std::abs(lhs - rhs));
                    }
        if (worst > bound) {
            fail(ErrorKind::input, std::string("curvature tensor violates ") + id.name + " (defect " +
                                       std::to_string(worst) + ")");
        }
    }
    return CurvatureTensor2(raw);
}

Eigen::Matrix2cd CurvatureTensor2::ricci() const {
    Eigen::Matrix2cd ric = Eigen::Matrix2cd::Zero();
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) ric(a, b) += (*this)(a, b, c, c);
    return ric;
}

double CurvatureTensor2::scalar() const { return ricci().trace().real(); }

CurvatureTensor2 CurvatureTensor2::frame_change(const Eigen::Matrix2cd& u) const {
    std::array<cd, 16> out{};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
                for (int d = 0; d < 2; ++d) {
                    cd acc = 0.0;
                    for (int p = 0; p < 2; ++p)
                        for (int q = 0; q < 2; ++q)
                            for (int r = 0; r < 2; ++r)
                                for (int s = 0; s < 2; ++s) {
                                    acc += std::conj(u(p, a)) * u(q, b) * std::conj(u(r, c)) * u(s, d) *
                                           (*this)(p, q, r, s);
                                }
                    out[index(a, b, c, d)] = acc;
                }
    return CurvatureTensor2(out);
}

const std::array<Eigen::Matrix2cd, 4>& form_basis() {
    static const std::array<Eigen::Matrix2cd, 4> basis = [] {
        const cd i(0.0, 1.0);
        const double s = 1.0 / std::numbers::sqrt2;
        std::array<Eigen::Matrix2cd, 4> e;
        e[0] << s, 0, 0, s;
        e[1] << 0, s, s, 0;
        e[2] << 0, -i * s, i * s, 0;
        e[3] << s, 0, 0, -s;
        return e;
    }();
    return basis;
}

CurvatureOperatorMatrix operator_matrix(const CurvatureTensor2& t) {
    // Q(phi, psi) = sum R_{bbar a dbar c} phi_{ab} psi_{cd}
    const auto& e = form_basis();
    CurvatureOperatorMatrix out;
    for (int al = 0; al < 4; ++al)
        for (int be = 0; be < 4; ++be) {
            cd acc = 0.0;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    for (int c = 0; c < 2; ++c)
                        for (int d = 0; d < 2; ++d) acc += t(b, a, d, c) * e[al](a, b) * e[be](c, d);
            out.full(al, be) = acc.real();
        }
    // Symmetric up to rounding; make it exact.
    out.full = 0.5 * (out.full + out.full.transpose()).eval();
    return out;
}

CurvatureTensor2 from_operator(const Eigen::Matrix4d& op, double tol) {
    const double scale = std::max(1.0, op.cwiseAbs().maxCoeff());
    if ((op - op.transpose()).cwiseAbs().maxCoeff() > tol * scale) {
        fail(ErrorKind::input, "curvature operator matrix is not symmetric");
    }
    if (std::abs(op(0, 0) - op.block<3, 3>(1, 1).trace()) > tol * scale) {
        fail(ErrorKind::input, "curvature operator matrix breaks the trace relation m1 + m2 + m3 = R/2");
    }
    const auto& e = form_basis();
    std::array<cd, 16> r{};
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q)
            for (int s = 0; s < 2; ++s)
                for (int w = 0; w < 2; ++w) {
                    cd acc = 0.0;
                    for (int al = 0; al < 4; ++al)
                        for (int be = 0; be < 4; ++be) acc += op(al, be) * e[al](p, q) * e[be](s, w);
                    r[CurvatureTensor2::index(p, q, s, w)] = acc;
                }
    return CurvatureTensor2::from_components(r, 1e-10);
}

Eigen::Vector3d traceless_eigenvalues(const CurvatureTensor2& t) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(operator_matrix(t).traceless(), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

ConditionC condition_c(const CurvatureTensor2& t) {
    ConditionC out;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> ric(t.ricci(), Eigen::EigenvaluesOnly);
    out.ricci_eigenvalues = ric.eigenvalues();
    out.m = traceless_eigenvalues(t);
    out.ricci_nonneg = out.ricci_eigenvalues.minCoeff() >= -1e-12;
    out.two_nonneg = out.m[0] + out.m[1] >= -1e-12;
    return out;
}

bool BoundReport::all_ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.ok; });
}

BoundReport eigenvalue_bounds(const CurvatureTensor2& t, double c) {
    const ConditionC cc = condition_c(t);
    const double r = t.scalar();
    if (!cc.holds()) fail(ErrorKind::input, "eigenvalue_bounds: tensor does not satisfy condition (C)");
    if (r < -1e-12 || r > c * (1.0 + 1e-12) + 1e-12) {
        fail(ErrorKind::input, "eigenvalue_bounds: scalar curvature outside [0, C]");
    }
    const CurvatureOperatorMatrix op = operator_matrix(t);
    BoundReport rep;
    rep.scalar = r;
    rep.m = cc.m;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> full(op.full, Eigen::EigenvaluesOnly);
    rep.full_eigenvalues = full.eigenvalues();

    const Eigen::Matrix2cd s = t.ricci() - 0.5 * r * Eigen::Matrix2cd::Identity();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> ses(s, Eigen::EigenvaluesOnly);
    rep.traceless_ricci_norm = ses.eigenvalues().cwiseAbs().maxCoeff();
    rep.traceless_ricci_trace_sq = (s * s).trace().real();
    rep.spectral_bound = 0.5 * c + rep.traceless_ricci_norm;

    const double eps = 1e-12 * std::max(1.0, c);
    auto add = [&](const std::string& name, double lhs, double rhs) {
        rep.checks.push_back({name, lhs, rhs, lhs <= rhs + eps});
    };
    const Eigen::Vector3d& m = rep.m;
    const double m_abs = m.cwiseAbs().maxCoeff();
    add("m3 <= C/2", m[2], 0.5 * c);
    add("m2 <= m3", m[1], m[2]);
    add("|m1| <= m2 + m3", std::abs(m[0]), m[1] + m[2]);
    add("m2 + m3 <= C", m[1] + m[2], c);
    add("max |Op(S)_ij| <= max |m_i|", op.traceless().cwiseAbs().maxCoeff(), m_abs);
    add("spectral radius of Op(R) <= C/2 + |S|", rep.full_eigenvalues.cwiseAbs().maxCoeff(), rep.spectral_bound);
    add("|S|^2 <= tr(S^2)", rep.traceless_ricci_norm * rep.traceless_ricci_norm, rep.traceless_ricci_trace_sq);
    add("|m1 + m2 + m3 - R/2|", std::abs(m.sum() - 0.5 * r), 0.0);
    // The coupling row of Op(R) is the traceless Ricci in the form basis.
    add("|coupling| = |S|", std::abs(op.coupling().norm() - rep.traceless_ricci_norm), 0.0);
    return rep;
}

Eigen::Matrix2cd random_unitary(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Matrix2cd z;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) z(i, j) = cd(n(rng), n(rng));
    Eigen::HouseholderQR<Eigen::Matrix2cd> qr(z);
    Eigen::Matrix2cd q = qr.householderQ();
    const Eigen::Matrix2cd rr = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < 2; ++j) {
        const cd d = rr(j, j);
        if (std::abs(d) > 0) q.col(j) *= d / std::abs(d);
    }
    return q;
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Matrix3d z;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) z(i, j) = n(rng);
    Eigen::HouseholderQR<Eigen::Matrix3d> qr(z);
    Eigen::Matrix3d q = qr.householderQ();
    const Eigen::Matrix3d rr = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < 3; ++j)
        if (rr(j, j) < 0) q.col(j) *= -1.0;
    if (q.determinant() < 0) q.col(0) *= -1.0;
    return q;
}

ConditionCSampler::ConditionCSampler(std::uint64_t seed, double r_max) : rng_(seed), r_max_(r_max) {
    if (!(r_max > 0.0)) fail(ErrorKind::input, "condition (C) sampler needs a positive curvature bound");
}

CurvatureTensor2 ConditionCSampler::next() {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    while (true) {
        // 2-nonnegative cone: m2 >= 0, m3 >= m2, -m2 <= m1 <= m2.
        const double m3 = unit(rng_);
        const double m2 = m3 * unit(rng_);
        const double m1 = m2 * (2.0 * unit(rng_) - 1.0);
        const double total = m1 + m2 + m3;
        if (!(total > 0.0)) {
            ++rejections_;
            continue;
        }
        const double target_r = r_max_ * unit(rng_);
        const double scale = 0.5 * target_r / total;
        const Eigen::Vector3d m(scale * m1, scale * m2, scale * m3);
        const double r = 2.0 * m.sum();

        // Traceless Ricci with operator norm at most R/2 keeps Ricci >= 0.
        Eigen::Vector3d dir(normal(rng_), normal(rng_), normal(rng_));
        dir.normalize();
        const Eigen::Vector3d coupling = dir * (0.5 * r * unit(rng_));

        const Eigen::Matrix3d o = random_rotation(rng_);
        Eigen::Matrix4d op = Eigen::Matrix4d::Zero();
        op(0, 0) = 0.5 * r;
        op.block<3, 1>(1, 0) = coupling;
        op.block<1, 3>(0, 1) = coupling.transpose();
        op.block<3, 3>(1, 1) = o * m.asDiagonal() * o.transpose();
        op = 0.5 * (op + op.transpose()).eval();
        op(0, 0) = op.block<3, 3>(1, 1).trace();
        try {
            return from_operator(op).frame_change(random_unitary(rng_));
        } catch (const Error&) {
            ++rejections_;
        }
    }
}

std::array<cd, 16> parse_components(const std::string& text) {
    std::array<cd, 16> out{};
    std::array<bool, 16> seen{};
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        int a, b, c, d;
        double re, im;
        if (!(ls >> a)) continue;  // blank or comment
        if (!(ls >> b >> c >> d >> re >> im)) {
            fail(ErrorKind::input, "curvature record line " + std::to_string(line_no) + ": expected 'a b c d re im'");
        }
        std::string extra;
        if (ls >> extra) fail(ErrorKind::input, "curvature record line " + std::to_string(line_no) + ": trailing data");
        for (int v : {a, b, c, d}) {
            if (v < 1 || v > 2) {
                fail(ErrorKind::input, "curvature record line " + std::to_string(line_no) + ": index out of range");
            }
        }
        const int idx = CurvatureTensor2::index(a - 1, b - 1, c - 1, d - 1);
        if (seen[idx]) fail(ErrorKind::input, "curvature record line " + std::to_string(line_no) + ": duplicate entry");
        seen[idx] = true;
        out[idx] = cd(re, im);
    }
    for (bool s : seen) {
        if (!s) fail(ErrorKind::input, "curvature record must list all 16 components");
    }
    return out;
}

}  // namespace kfl::curvop
