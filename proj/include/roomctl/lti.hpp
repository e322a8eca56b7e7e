#pragma once

#include <vector>

#include "roomctl/linalg.hpp"

namespace roomctl {

/// Dense standard-form system ẋ = Ax + Bu, y = Cx + Du.
struct StateSpace {
    Matrix A;
    Matrix B;
    Matrix C;
    Matrix D;

    [[nodiscard]] Eigen::Index states() const { return A.rows(); }
    [[nodiscard]] Eigen::Index inputs() const { return B.cols(); }
    [[nodiscard]] Eigen::Index outputs() const { return C.rows(); }

    /// Throws DimensionMismatch when the blocks do not fit together.
    void validate() const;
};

/// G(s) = C (sI - A)⁻¹ B + D.
ComplexMatrix transfer_value(const StateSpace& sys, Complex s);

/// Solves A X + X Aᵀ + Q = 0 for stable A (Bartels-Stewart on the real Schur
/// form). Throws NumericFailure if A is not stable.
Matrix solve_lyapunov(const Matrix& a, const Matrix& q);

/// Same equation with a precomputed Schur form of A. With `transposed` the
/// equation solved is Aᵀ X + X A + Q = 0.
Matrix solve_lyapunov(const RealSchur& schur_of_a, const Matrix& q, bool transposed = false);

/// Solves T Y + Y Tᵀ = C for upper quasi-triangular T (any 1×1/2×2 blocking).
Matrix solve_quasi_triangular_lyapunov(const Matrix& t, const Matrix& c);

struct RiccatiOptions {
    double tolerance = 1e-9;    // on ||residual||_F / ||X||_F
    int max_iterations = 60;
    double initializer_shift = 0.1;
    bool line_search = true;
};

struct RiccatiSolution {
    Matrix X;
    /// Control: K with closed loop A - B K. Filter: L with closed loop A - L C.
    Matrix gain;
    double residual_norm = 0.0;
    /// Spectral abscissa of the unshifted closed loop (A - BK or A - LC).
    double closed_loop_abscissa = 0.0;
    int iterations = 0;
};

/// Stabilizing solution of
///   (A+αI)ᵀX + X(A+αI) - X B R⁻¹ Bᵀ X + Q = 0
/// by Newton-Kleinman with exact line search.
RiccatiSolution solve_riccati_control(const Matrix& a, const Matrix& b, const Matrix& r, const Matrix& q,
                                      double alpha, const RiccatiOptions& options = {});

/// Stabilizing solution of
///   (A+αI)Π + Π(A+αI)ᵀ - Π Cᵀ R⁻¹ C Π + Q = 0
/// (the dual of solve_riccati_control).
RiccatiSolution solve_riccati_filter(const Matrix& a, const Matrix& c, const Matrix& r, const Matrix& q,
                                     double alpha, const RiccatiOptions& options = {});

/// Residual AᵀX + XA - X B R⁻¹ Bᵀ X + Q.
Matrix riccati_residual(const Matrix& a, const Matrix& b, const Matrix& r, const Matrix& q, const Matrix& x);

/// Gain K such that A - B K is stable: eigenvalues with real part above
/// -shift are mirrored to the left of -shift; the rest is untouched.
/// Returns a zero gain when A is already stable.
Matrix stabilizing_gain(const Matrix& a, const Matrix& b, const Matrix& r, double shift = 0.1);

struct BalancedReduction {
    StateSpace reduced;
    Vector hankel_singular_values; // nonincreasing
    double error_bound = 0.0;      // 2 Σ_{k>r} σ_k
    Eigen::Index order = 0;
};

/// Square-root balanced truncation of a stable system to order r. An order
/// above the numerical rank of the Gramian product is clamped (with a
/// warning on stderr).
BalancedReduction balanced_truncation(const StateSpace& sys, Eigen::Index r);

/// max over ω of the spectral norm of G₁(iω) - G₂(iω).
double sample_frequency_error(const StateSpace& a, const StateSpace& b, const std::vector<double>& omegas);

} // namespace roomctl
