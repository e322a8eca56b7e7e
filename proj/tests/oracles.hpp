#pragma once

// Independent reference computations used only by the tests. None of these
// go through the library's Schur/Newton code paths.

#include <random>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "roomctl/linalg.hpp"

namespace roomctl::oracle {

/// A X + X Aᵀ + Q = 0 through the n²×n² Kronecker system.
inline Matrix kronecker_lyapunov(const Matrix& a, const Matrix& q) {
    const Eigen::Index n = a.rows();
    Matrix k = Matrix::Zero(n * n, n * n);
    // vec(AX) = (I ⊗ A) vec X ; vec(XAᵀ) = (A ⊗ I) vec X
    for (Eigen::Index j = 0; j < n; ++j) {
        k.block(j * n, j * n, n, n) += a;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            k.block(i * n, j * n, n, n).diagonal().array() += a(i, j);
        }
    }
    const Vector rhs = -Eigen::Map<const Vector>(q.data(), n * n);
    const Vector x = k.fullPivLu().solve(rhs);
    return Eigen::Map<const Matrix>(x.data(), n, n);
}

/// Stabilizing solution of AᵀX + XA - X G X + Q = 0 from the stable invariant
/// subspace of the Hamiltonian [[A, -G], [-Q, -Aᵀ]] (eigenvector basis).
inline Matrix hamiltonian_riccati(const Matrix& a, const Matrix& g, const Matrix& q) {
    const Eigen::Index n = a.rows();
    Matrix h(2 * n, 2 * n);
    h << a, -g, -q, -a.transpose();
    const Eigen::EigenSolver<Matrix> es(h);
    ComplexMatrix basis(2 * n, n);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < 2 * n && k < n; ++i) {
        if (es.eigenvalues()[i].real() < 0.0) {
            basis.col(k++) = es.eigenvectors().col(i);
        }
    }
    const ComplexMatrix x = basis.bottomRows(n) * basis.topRows(n).inverse();
    return 0.5 * (x.real() + x.real().transpose());
}

/// Random matrix with spectrum shifted into Re < -margin.
inline Matrix random_stable(Eigen::Index n, std::mt19937& rng, double margin = 0.1) {
    std::normal_distribution<double> d;
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        a.data()[i] = d(rng);
    }
    const Eigen::EigenSolver<Matrix> es(a, false);
    double abscissa = -1e300;
    for (Eigen::Index i = 0; i < n; ++i) {
        abscissa = std::max(abscissa, es.eigenvalues()[i].real());
    }
    a.diagonal().array() -= abscissa + margin;
    return a;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937& rng) {
    std::normal_distribution<double> d;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = d(rng);
    }
    return m;
}

/// x(t) for ẋ = A x, x(0) = x0, via the matrix exponential.
inline Vector exponential_flow(const Matrix& a, const Vector& x0, double t) {
    const Matrix at = a * t;
    return at.exp() * x0;
}

} // namespace roomctl::oracle
