#include <chrono>
#include <cmath>

#include <gtest/gtest.h>

#include "kfl/curvop.hpp"
#include "kfl/error.hpp"
#include "oracles/quadratic_form.hpp"

using namespace kfl::curvop;

namespace {

CurvatureTensor2 symmetric_space(double scale) {
    std::array<cd, 16> r{};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
                for (int d = 0; d < 2; ++d)
                    r[CurvatureTensor2::index(a, b, c, d)] = scale * double((a == b) * (c == d) + (a == d) * (c == b));
    return CurvatureTensor2::from_components(r);
}

Eigen::Matrix4d block_operator(const Eigen::Vector3d& m) {
    Eigen::Matrix4d op = Eigen::Matrix4d::Zero();
    op(0, 0) = m.sum();
    op.block<3, 3>(1, 1) = m.asDiagonal();
    return op;
}

oracle::Component as_component(const CurvatureTensor2& t) {
    return [t](int a, int b, int c, int d) { return t(a, b, c, d); };
}

Eigen::VectorXd sorted(Eigen::VectorXd v) {
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

TEST(CurvatureTensor, ZeroTensorHasZeroEverything) {
    const CurvatureTensor2 z = CurvatureTensor2::zero();
    EXPECT_EQ(z.scalar(), 0.0);
    EXPECT_EQ(operator_matrix(z).full.norm(), 0.0);
    EXPECT_TRUE(condition_c(z).holds());
    EXPECT_TRUE(eigenvalue_bounds(z, 0.0).all_ok());
}

TEST(CurvatureTensor, SymmetricSpacePatternMatchesQuadraticFormOracle) {
    const CurvatureTensor2 t = symmetric_space(1.0);
    EXPECT_NEAR(t.scalar(), 6.0, 1e-14);
    EXPECT_LT((t.ricci() - 3.0 * Eigen::Matrix2cd::Identity()).norm(), 1e-14);
    const Eigen::VectorXd lib = sorted(operator_matrix(t).full.eigenvalues().real());
    EXPECT_LT((lib - oracle::form_spectrum(as_component(t), oracle::skewed_hermitian_basis())).norm(), 1e-12);
    EXPECT_LT((traceless_eigenvalues(t) - oracle::form_spectrum(as_component(t), oracle::skewed_traceless_basis()))
                  .norm(),
              1e-12);
}

TEST(CurvatureTensor, SampledTensorsMatchQuadraticFormOracle) {
    ConditionCSampler sampler(7, 10.0);
    for (int i = 0; i < 50; ++i) {
        const CurvatureTensor2 t = sampler.next();
        const Eigen::VectorXd lib = sorted(operator_matrix(t).full.eigenvalues().real());
        const Eigen::VectorXd ref = oracle::form_spectrum(as_component(t), oracle::skewed_hermitian_basis());
        EXPECT_LT((lib - ref).norm(), 1e-10 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
    }
}

TEST(CurvatureTensor, BrokenPairSymmetryIsRejected) {
    std::array<cd, 16> r = symmetric_space(1.0).components();
    r[CurvatureTensor2::index(0, 1, 1, 0)] += 1e-3;
    try {
        CurvatureTensor2::from_components(r);
        ADD_FAILURE();
    } catch (const kfl::Error& e) {
        EXPECT_EQ(e.kind(), kfl::ErrorKind::input);
    }
    r[CurvatureTensor2::index(0, 1, 1, 0)] = NAN;
    EXPECT_THROW(CurvatureTensor2::from_components(r), kfl::Error);
}

TEST(CurvatureTensor, EinsteinTensorHasBlockDiagonalOperator) {
    const CurvatureOperatorMatrix op = operator_matrix(symmetric_space(0.7));
    EXPECT_LT(op.coupling().norm(), 1e-14);
    const CurvatureTensor2 e = from_operator(block_operator({1.0, 1.0, 0.0}));
    EXPECT_LT(operator_matrix(e).coupling().norm(), 1e-14);
    EXPECT_LT((e.ricci() - 2.0 * Eigen::Matrix2cd::Identity()).norm(), 1e-14);
}

TEST(CurvatureTensor, FromOperatorRejectsInconsistentMatrices) {
    Eigen::Matrix4d op = block_operator({1.0, 2.0, 3.0});
    op(0, 0) += 0.5;
    EXPECT_THROW(from_operator(op), kfl::Error);
    op = block_operator({1.0, 2.0, 3.0});
    op(1, 2) = 0.3;
    EXPECT_THROW(from_operator(op), kfl::Error);
}

TEST(ConditionC, TwoNonnegativityOfTheTracelessBlock) {
    EXPECT_TRUE(condition_c(from_operator(block_operator({-1.0, 2.0, 2.0}))).two_nonneg);
    EXPECT_FALSE(condition_c(from_operator(block_operator({-2.0, 1.0, 4.0}))).two_nonneg);
    EXPECT_FALSE(condition_c(from_operator(block_operator({-2.0, 1.0, 4.0}))).holds());
}

TEST(Bounds, EinsteinExampleAttainsTheSpectralBound) {
    const CurvatureTensor2 e = from_operator(block_operator({1.0, 1.0, 0.0}));
    EXPECT_NEAR(e.scalar(), 4.0, 1e-14);
    const BoundReport rep = eigenvalue_bounds(e, 4.0);
    EXPECT_LT((rep.full_eigenvalues - Eigen::Vector4d(0.0, 1.0, 1.0, 2.0)).norm(), 1e-12);
    EXPECT_TRUE(rep.all_ok());
    EXPECT_NEAR(rep.spectral_bound, 2.0, 1e-14);
}

TEST(Bounds, ScalarAboveTheBoundIsAnError) {
    EXPECT_THROW(eigenvalue_bounds(symmetric_space(1.0), 5.0), kfl::Error);
    EXPECT_THROW(eigenvalue_bounds(from_operator(block_operator({-2.0, 1.0, 4.0})), 10.0), kfl::Error);
}

TEST(Bounds, ThousandSampledTensorsSatisfyEveryBound) {
    const auto start = std::chrono::steady_clock::now();
    ConditionCSampler sampler(2024, 8.0);
    int violations = 0;
    for (int i = 0; i < 1000; ++i) {
        const CurvatureTensor2 t = sampler.next();
        const double r = t.scalar();
        ASSERT_TRUE(condition_c(t).holds());
        ASSERT_GE(r, -1e-12);
        ASSERT_LE(r, 8.0 + 1e-12);
        if (!eigenvalue_bounds(t, std::max(r, 0.0) * 1.1 + 1e-12).all_ok()) ++violations;
    }
    EXPECT_EQ(violations, 0);
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 5.0);
}

TEST(Covariance, UnitaryFrameChangePreservesInvariants) {
    ConditionCSampler sampler(99, 5.0);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        const CurvatureTensor2 t = sampler.next();
        const CurvatureTensor2 s = t.frame_change(random_unitary(rng));
        EXPECT_NEAR(s.scalar(), t.scalar(), 1e-10);
        EXPECT_LT((traceless_eigenvalues(s) - traceless_eigenvalues(t)).norm(), 1e-10);
        EXPECT_LT((sorted(operator_matrix(s).full.eigenvalues().real()) -
                   sorted(operator_matrix(t).full.eigenvalues().real()))
                      .norm(),
                  1e-10);
    }
}

TEST(Covariance, TraceIdentity) {
    ConditionCSampler sampler(3, 5.0);
    for (int i = 0; i < 100; ++i) {
        const CurvatureTensor2 t = sampler.next();
        EXPECT_NEAR(traceless_eigenvalues(t).sum(), t.scalar() / 2.0, 1e-12 * std::max(1.0, t.scalar()));
        EXPECT_NEAR(operator_matrix(t).scalar_block(), t.scalar() / 2.0, 1e-12 * std::max(1.0, t.scalar()));
    }
}

TEST(Parsing, ComponentFileErrors) {
    std::string ok;
    for (int a = 1; a <= 2; ++a)
        for (int b = 1; b <= 2; ++b)
            for (int c = 1; c <= 2; ++c)
                for (int d = 1; d <= 2; ++d)
                    ok += std::to_string(a) + " " + std::to_string(b) + " " + std::to_string(c) + " " +
                          std::to_string(d) + " " + std::to_string(int((a == b) * (c == d) + (a == d) * (c == b))) +
                          " 0\n";
    const auto parsed = parse_components("# pattern\n" + ok);
    EXPECT_NEAR(CurvatureTensor2::from_components(parsed).scalar(), 6.0, 1e-14);
    EXPECT_THROW(parse_components("1 1 1 1 1 0\n"), kfl::Error);
    EXPECT_THROW(parse_components(ok + "1 1 1 1 1 0\n"), kfl::Error);
    EXPECT_THROW(parse_components("3 1 1 1 1 0\n" + ok.substr(ok.find('\n') + 1)), kfl::Error);
    EXPECT_THROW(parse_components("1 1 1 1 x 0\n" + ok.substr(ok.find('\n') + 1)), kfl::Error);
}
