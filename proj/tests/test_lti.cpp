#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "roomctl/errors.hpp"
#include "roomctl/lti.hpp"

using namespace roomctl;

namespace {

double rel_lyap_residual(const Matrix& a, const Matrix& q, const Matrix& x) {
    return (a * x + x * a.transpose() + q).norm() / x.norm();
}

std::vector<double> frequency_grid() {
    std::vector<double> w;
    for (int k = -40; k <= 40; ++k) {
        w.push_back(std::pow(10.0, k / 10.0));
    }
    w.push_back(0.0);
    return w;
}

} // namespace

TEST(Lyapunov, ScalarClosedForm) {
    const Matrix x = solve_lyapunov(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 2.0));
    EXPECT_NEAR(x(0, 0), 1.0, 1e-15);
}

TEST(Lyapunov, MatchesKroneckerOracleOnRandomStableSystems) {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = oracle::random_stable(5, rng);
        const Matrix w = oracle::random_matrix(5, 5, rng);
        const Matrix q = w + w.transpose();
        const Matrix x = solve_lyapunov(a, q);
        EXPECT_LE(rel_lyap_residual(a, q, x), 1e-10);
        EXPECT_LE((x - oracle::kronecker_lyapunov(a, q)).norm() / x.norm(), 1e-10);
    }
}

TEST(Lyapunov, TransposedFormReusesSchur) {
    std::mt19937 rng(11);
    const Matrix a = oracle::random_stable(8, rng);
    const Matrix w = oracle::random_matrix(8, 3, rng);
    const Matrix q = w * w.transpose();
    const RealSchur schur = real_schur(a);
    const Matrix x = solve_lyapunov(schur, q, true);
    EXPECT_LE((a.transpose() * x + x * a + q).norm() / x.norm(), 1e-12);
}

TEST(Lyapunov, BlockedPathOnLargerSystems) {
    // Sizes above the sweep threshold exercise the recursive splitting,
    // including splits next to 2×2 diagonal blocks.
    std::mt19937 rng(5);
    for (Eigen::Index n : {65, 130, 301}) {
        const Matrix a = oracle::random_stable(n, rng);
        const Matrix w = oracle::random_matrix(n, 4, rng);
        const Matrix q = w * w.transpose();
        const RealSchur schur = real_schur(a);
        const Matrix x = solve_lyapunov(schur, q, false);
        EXPECT_LE(rel_lyap_residual(a, q, x), 1e-10) << n;
        const Matrix xt = solve_lyapunov(schur, q, true);
        EXPECT_LE((a.transpose() * xt + xt * a + q).norm() / xt.norm(), 1e-10) << n;
    }
}

TEST(Lyapunov, PositiveSemidefiniteRightHandSideGivesGramian) {
    std::mt19937 rng(3);
    const Matrix a = oracle::random_stable(6, rng);
    const Matrix b = oracle::random_matrix(6, 2, rng);
    const Matrix x = solve_lyapunov(a, b * b.transpose());
    const Eigen::SelfAdjointEigenSolver<Matrix> es(x);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12 * x.norm());
}

TEST(Lyapunov, RejectsUnstableMatrix) {
    Matrix a(2, 2);
    a << 0.5, 1.0, 0.0, -1.0;
    EXPECT_THROW(solve_lyapunov(a, Matrix::Identity(2, 2)), NumericFailure);
}

TEST(Riccati, ScalarControlClosedForm) {
    // a=0, b=1, r=1, q=1: -σ² + 1 = 0, stabilizing σ = 1
    const auto sol = solve_riccati_control(Matrix::Zero(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1),
                                           Matrix::Ones(1, 1), 0.0);
    EXPECT_NEAR(sol.X(0, 0), 1.0, 1e-12);
    EXPECT_LT(sol.closed_loop_abscissa, 0.0);
}

TEST(Riccati, ScalarFilterDual) {
    const auto sol = solve_riccati_filter(Matrix::Zero(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1),
                                          Matrix::Ones(1, 1), 0.0);
    EXPECT_NEAR(sol.X(0, 0), 1.0, 1e-12);
}

TEST(Riccati, ZeroInputReducesToLyapunov) {
    Matrix a(2, 2);
    a << -1.0, 0.3, 0.0, -2.0;
    const Matrix b = Matrix::Zero(2, 1);
    const Matrix q = Matrix::Identity(2, 2);
    const auto sol = solve_riccati_control(a, b, Matrix::Ones(1, 1), q, 0.0);
    const Matrix lyap = oracle::kronecker_lyapunov(a.transpose(), q);
    EXPECT_LE((sol.X - lyap).norm(), 1e-12);
}

TEST(Riccati, MatchesHamiltonianOracleWithShift) {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix a = oracle::random_stable(6, rng);
        const Matrix b = oracle::random_matrix(6, 1, rng);
        const Matrix r = Matrix::Identity(1, 1);
        const Matrix q = Matrix::Identity(6, 6);
        const double alpha = 0.5;
        const auto sol = solve_riccati_control(a, b, r, q, alpha);
        Matrix shifted = a;
        shifted.diagonal().array() += alpha;
        const Matrix ref = oracle::hamiltonian_riccati(shifted, b * b.transpose(), q);
        EXPECT_LE((sol.X - ref).norm() / ref.norm(), 1e-8);
        EXPECT_LE(sol.residual_norm, 1e-9);
        EXPECT_LT(sol.closed_loop_abscissa, -alpha + 1e-10);
    }
}

TEST(Riccati, UnstablePlantUsesShiftInitializer) {
    std::mt19937 rng(99);
    Matrix a = oracle::random_stable(7, rng);
    a.diagonal().array() += 1.5; // several unstable modes
    const Matrix b = oracle::random_matrix(7, 2, rng);
    const Matrix r = Matrix::Identity(2, 2);
    const Matrix q = Matrix::Identity(7, 7);
    const auto sol = solve_riccati_control(a, b, r, q, 0.0);
    const Matrix ref = oracle::hamiltonian_riccati(a, b * b.transpose(), q);
    EXPECT_LE((sol.X - ref).norm() / ref.norm(), 1e-8);
    EXPECT_LT(sol.closed_loop_abscissa, 0.0);
}

TEST(Riccati, FilterEqualsControlOfTransposedData) {
    std::mt19937 rng(5);
    const Matrix a = oracle::random_stable(5, rng);
    const Matrix c = oracle::random_matrix(2, 5, rng);
    const Matrix r = 2.0 * Matrix::Identity(2, 2);
    const Matrix q = Matrix::Identity(5, 5);
    const auto filt = solve_riccati_filter(a, c, r, q, 1.0);
    const auto ctrl = solve_riccati_control(a.transpose(), c.transpose(), r, q, 1.0);
    EXPECT_LE((filt.X - ctrl.X).norm(), 1e-12 * ctrl.X.norm());
    EXPECT_LE((filt.gain - ctrl.gain.transpose()).norm(), 1e-12 * ctrl.gain.norm());
    EXPECT_LT(spectral_abscissa(Matrix(a - filt.gain * c)), -1.0 + 1e-10);
}

TEST(Riccati, StabilizingGainMirrorsUnstableModes) {
    std::mt19937 rng(17);
    Matrix a = oracle::random_stable(10, rng);
    a.diagonal().array() += 2.0;
    const Matrix b = oracle::random_matrix(10, 1, rng);
    const Matrix k = stabilizing_gain(a, b, Matrix::Identity(1, 1), 0.2);
    EXPECT_LT(spectral_abscissa(Matrix(a - b * k)), 0.0);
}

TEST(Riccati, StabilizingGainIsZeroForStableMatrix) {
    std::mt19937 rng(1);
    const Matrix a = oracle::random_stable(4, rng, 0.5);
    const Matrix k = stabilizing_gain(a, oracle::random_matrix(4, 1, rng), Matrix::Identity(1, 1), 0.1);
    EXPECT_EQ(k.norm(), 0.0);
}

TEST(BalancedTruncation, FullOrderReproducesSystem) {
    std::mt19937 rng(8);
    StateSpace sys{oracle::random_stable(8, rng), oracle::random_matrix(8, 2, rng), oracle::random_matrix(3, 8, rng),
                   Matrix::Zero(3, 2)};
    const auto red = balanced_truncation(sys, 8);
    EXPECT_LE(sample_frequency_error(sys, red.reduced, frequency_grid()), 1e-10);
    EXPECT_LT(spectral_abscissa(red.reduced.A), 0.0);
}

TEST(BalancedTruncation, TwoModeExampleMeetsBound) {
    Matrix a = Matrix::Zero(2, 2);
    a.diagonal() << -1.0, -100.0;
    StateSpace sys{a, Matrix::Ones(2, 1), Matrix::Ones(1, 2), Matrix::Zero(1, 1)};
    // Gramians by the Kronecker oracle; P = Q here, so the HSVs are eig(P).
    const Matrix p = oracle::kronecker_lyapunov(a, sys.B * sys.B.transpose());
    const Eigen::SelfAdjointEigenSolver<Matrix> es(p);
    const double sigma2 = es.eigenvalues()(0);
    const double sigma1 = es.eigenvalues()(1);

    const auto red = balanced_truncation(sys, 1);
    EXPECT_NEAR(red.hankel_singular_values[0], sigma1, 1e-12);
    EXPECT_NEAR(red.hankel_singular_values[1], sigma2, 1e-12);
    EXPECT_NEAR(red.error_bound, 2.0 * sigma2, 1e-12);
    // The kept state is the slow one.
    EXPECT_NEAR(red.reduced.A(0, 0), -1.0, 0.05);
    // Attained with equality at ω = 0 for a single truncated real mode.
    EXPECT_LE(sample_frequency_error(sys, red.reduced, frequency_grid()), 2.0 * sigma2 * (1.0 + 1e-12));
}

TEST(BalancedTruncation, HankelValuesInvariantUnderSimilarity) {
    std::mt19937 rng(21);
    StateSpace sys{oracle::random_stable(6, rng), oracle::random_matrix(6, 1, rng), oracle::random_matrix(1, 6, rng),
                   Matrix::Zero(1, 1)};
    Matrix t = oracle::random_matrix(6, 6, rng);
    t.diagonal().array() += 4.0;
    const Matrix ti = t.inverse();
    StateSpace sim{t * sys.A * ti, t * sys.B, sys.C * ti, sys.D};
    const auto a = balanced_truncation(sys, 3);
    const auto b = balanced_truncation(sim, 3);
    EXPECT_LE((a.hankel_singular_values - b.hankel_singular_values).norm(), 1e-8 * a.hankel_singular_values[0]);
    for (Eigen::Index i = 1; i < a.hankel_singular_values.size(); ++i) {
        EXPECT_LE(a.hankel_singular_values[i], a.hankel_singular_values[i - 1]);
    }
}

TEST(BalancedTruncation, RejectsUnstableSystem) {
    StateSpace sys{Matrix::Identity(2, 2), Matrix::Ones(2, 1), Matrix::Ones(1, 2), Matrix::Zero(1, 1)};
    EXPECT_THROW(balanced_truncation(sys, 1), NumericFailure);
}

TEST(FrequencyError, IdenticalSystemsAndConjugateSymmetry) {
    std::mt19937 rng(4);
    StateSpace sys{oracle::random_stable(4, rng), oracle::random_matrix(4, 1, rng), oracle::random_matrix(1, 4, rng),
                   Matrix::Zero(1, 1)};
    EXPECT_EQ(sample_frequency_error(sys, sys, {0.5, 1.0, 2.0}), 0.0);
    const Complex plus = transfer_value(sys, Complex(0.0, 1.3))(0, 0);
    const Complex minus = transfer_value(sys, Complex(0.0, -1.3))(0, 0);
    EXPECT_NEAR(std::abs(plus - std::conj(minus)), 0.0, 1e-14);
}
