#include "roomctl/linalg.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include <lapacke.h>

#include "roomctl/errors.hpp"

namespace roomctl {

namespace {

void check_square(const Matrix& a, const char* what) {
    if (a.rows() != a.cols()) {
        throw DimensionMismatch(std::string(what) + ": matrix is not square");
    }
}

} // namespace

RealSchur real_schur(const Matrix& a) {
    check_square(a, "real_schur");
    const auto n = static_cast<lapack_int>(a.rows());
    RealSchur out;
    out.T = a;
    out.U.resize(n, n);
    out.eigenvalues.resize(n);
    if (n == 0) {
        return out;
    }
    std::vector<double> wr(n), wi(n);
    lapack_int sdim = 0;
    const lapack_int info = LAPACKE_dgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, n, out.T.data(), n,
                                          &sdim, wr.data(), wi.data(), out.U.data(), n);
    if (info != 0) {
        throw NumericFailure("real_schur: dgees failed with info " + std::to_string(info));
    }
    for (lapack_int i = 0; i < n; ++i) {
        out.eigenvalues[i] = Complex(wr[i], wi[i]);
    }
    return out;
}

Eigen::Index reorder_schur(RealSchur& schur, const std::function<bool(Complex)>& select) {
    const auto n = static_cast<lapack_int>(schur.T.rows());
    if (n == 0) {
        return 0;
    }
    std::vector<lapack_logical> flags(n, 0);
    for (lapack_int i = 0; i < n; ++i) {
        const Complex lambda = schur.eigenvalues[i];
        if (lambda.imag() != 0.0 && i + 1 < n && schur.eigenvalues[i + 1] == std::conj(lambda)) {
            const bool take = select(lambda) || select(std::conj(lambda));
            flags[i] = flags[i + 1] = take ? 1 : 0;
            ++i;
        } else {
            flags[i] = select(lambda) ? 1 : 0;
        }
    }
    const auto first_unselected = std::find(flags.begin(), flags.end(), 0);
    if (std::find(first_unselected, flags.end(), 1) == flags.end()) {
        return static_cast<Eigen::Index>(first_unselected - flags.begin()); // already ordered
    }
    std::vector<double> wr(n), wi(n);
    lapack_int m = 0;
    double s = 0.0;
    double sep = 0.0;
    // job 'N'/'E' crash in the LAPACKE shipped with this toolchain; 'B' is safe.
    const lapack_int info = LAPACKE_dtrsen(LAPACK_COL_MAJOR, 'B', 'V', flags.data(), n, schur.T.data(), n,
                                           schur.U.data(), n, wr.data(), wi.data(), &m, &s, &sep);
    if (info != 0) {
        throw NumericFailure("reorder_schur: dtrsen failed with info " + std::to_string(info));
    }
    for (lapack_int i = 0; i < n; ++i) {
        schur.eigenvalues[i] = Complex(wr[i], wi[i]);
    }
    return m;
}

ComplexVector eigenvalues(const Matrix& a) {
    check_square(a, "eigenvalues");
    const auto n = static_cast<lapack_int>(a.rows());
    ComplexVector out(n);
    if (n == 0) {
        return out;
    }
    Matrix work = a;
    std::vector<double> wr(n), wi(n);
    const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, work.data(), n, wr.data(), wi.data(),
                                          nullptr, 1, nullptr, 1);
    if (info != 0) {
        throw NumericFailure("eigenvalues: dgeev failed with info " + std::to_string(info));
    }
    for (lapack_int i = 0; i < n; ++i) {
        out[i] = Complex(wr[i], wi[i]);
    }
    return out;
}

double spectral_abscissa(const Matrix& a) {
    const ComplexVector lambda = eigenvalues(a);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& l : lambda) {
        best = std::max(best, l.real());
    }
    return best;
}

SymmetricEigen symmetric_eigen(const Matrix& s) {
    check_square(s, "symmetric_eigen");
    const auto n = static_cast<lapack_int>(s.rows());
    SymmetricEigen out;
    out.vectors = symmetrize(s);
    out.values.resize(n);
    if (n == 0) {
        return out;
    }
    const lapack_int info =
        LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, out.vectors.data(), n, out.values.data());
    if (info != 0) {
        throw NumericFailure("symmetric_eigen: dsyevd failed with info " + std::to_string(info));
    }
    return out;
}

Svd svd(const Matrix& a) {
    const auto m = static_cast<lapack_int>(a.rows());
    const auto n = static_cast<lapack_int>(a.cols());
    const lapack_int k = std::min(m, n);
    Svd out;
    out.u.resize(m, k);
    out.s.resize(k);
    out.vt.resize(k, n);
    if (k == 0) {
        return out;
    }
    Matrix work = a;
    const lapack_int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'S', m, n, work.data(), m, out.s.data(),
                                           out.u.data(), m, out.vt.data(), k);
    if (info != 0) {
        throw NumericFailure("svd: dgesdd failed with info " + std::to_string(info));
    }
    return out;
}

Matrix psd_factor(const Matrix& p) {
    const SymmetricEigen eig = symmetric_eigen(p);
    Vector root = eig.values.cwiseMax(0.0).cwiseSqrt();
    return eig.vectors * root.asDiagonal();
}

} // namespace roomctl
