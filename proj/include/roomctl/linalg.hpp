#pragma once

#include <complex>
#include <functional>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace roomctl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Complex = std::complex<double>;

/// Real Schur form A = U T Uᵀ with T upper quasi-triangular (1×1 and 2×2
/// diagonal blocks, standardized as LAPACK returns them).
struct RealSchur {
    Matrix T;
    Matrix U;
    ComplexVector eigenvalues;
};

RealSchur real_schur(const Matrix& a);

/// Moves the eigenvalues accepted by `select` to the leading block of the
/// Schur form. Complex pairs are selected together. Returns the size of the
/// leading block.
Eigen::Index reorder_schur(RealSchur& schur, const std::function<bool(Complex)>& select);

ComplexVector eigenvalues(const Matrix& a);

/// Largest real part over the spectrum; -inf for an empty matrix.
double spectral_abscissa(const Matrix& a);

struct SymmetricEigen {
    Vector values; // ascending
    Matrix vectors;
};

SymmetricEigen symmetric_eigen(const Matrix& s);

struct Svd {
    Matrix u;
    Vector s; // nonincreasing
    Matrix vt;
};

Svd svd(const Matrix& a);

/// Symmetric factor S with S Sᵀ = P for a positive semidefinite P; negative
/// eigenvalues from round-off are clipped to zero.
Matrix psd_factor(const Matrix& p);

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

} // namespace roomctl
