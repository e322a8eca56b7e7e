#include "roomctl/lti.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include <Eigen/Dense>

#include "roomctl/errors.hpp"

namespace roomctl {

void StateSpace::validate() const {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || B.rows() != n || C.cols() != n || D.rows() != C.rows() || D.cols() != B.cols()) {
        throw DimensionMismatch("StateSpace: inconsistent block dimensions");
    }
}

ComplexMatrix transfer_value(const StateSpace& sys, Complex s) {
    sys.validate();
    ComplexMatrix shifted = -sys.A.cast<Complex>();
    shifted.diagonal().array() += s;
    const ComplexMatrix x = shifted.partialPivLu().solve(sys.B.cast<Complex>());
    return sys.C.cast<Complex>() * x + sys.D.cast<Complex>();
}

namespace {

struct Block {
    Eigen::Index start;
    Eigen::Index size;
};

template <class M>
std::vector<Block> diagonal_blocks(const M& t) {
    std::vector<Block> blocks;
    const Eigen::Index n = t.rows();
    for (Eigen::Index i = 0; i < n;) {
        if (i + 1 < n && t(i + 1, i) != 0.0) {
            blocks.push_back({i, 2});
            i += 2;
        } else {
            blocks.push_back({i, 1});
            i += 1;
        }
    }
    return blocks;
}

using Small = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;

// Solves T_ii Y + Y S = R for blocks of size ≤ 2.
Small small_sylvester(const Small& tii, const Small& s, const Small& rhs) {
    const Eigen::Index a = tii.rows();
    const Eigen::Index b = s.rows();
    Small k = Small::Zero(a * b, a * b);
    for (Eigen::Index c = 0; c < b; ++c) {
        for (Eigen::Index r = 0; r < a; ++r) {
            for (Eigen::Index rr = 0; rr < a; ++rr) {
                k(r + a * c, rr + a * c) += tii(r, rr);
            }
            for (Eigen::Index cc = 0; cc < b; ++cc) {
                k(r + a * c, r + a * cc) += s(cc, c);
            }
        }
    }
    SmallVec f(a * b);
    for (Eigen::Index c = 0; c < b; ++c) {
        for (Eigen::Index r = 0; r < a; ++r) {
            f(r + a * c) = rhs(r, c);
        }
    }
    const SmallVec y = k.fullPivLu().solve(f);
    Small out(a, b);
    for (Eigen::Index c = 0; c < b; ++c) {
        for (Eigen::Index r = 0; r < a; ++r) {
            out(r, c) = y(r + a * c);
        }
    }
    return out;
}

void require_stable(const ComplexVector& lambda, const char* what) {
    for (const auto& l : lambda) {
        if (!(l.real() < 0.0)) {
            throw NumericFailure(std::string(what) + ": matrix is not stable (eigenvalue with real part " +
                                 std::to_string(l.real()) + ")");
        }
    }
}

} // namespace

namespace {

using ConstRef = Eigen::Ref<const Matrix>;
using MutRef = Eigen::Ref<Matrix>;

// Column sweep for Ta X + X Tbᵀ = C with X overwriting C.
void sylvester_sweep(const ConstRef& ta, const ConstRef& tb, MutRef x) {
    const std::vector<Block> rows = diagonal_blocks(ta);
    const std::vector<Block> cols = diagonal_blocks(tb);
    const Eigen::Index n = tb.rows();
    for (auto jb = cols.rbegin(); jb != cols.rend(); ++jb) {
        const Eigen::Index j0 = jb->start;
        const Eigen::Index bj = jb->size;
        const Eigen::Index tail = n - j0 - bj;
        if (tail > 0) {
            x.middleCols(j0, bj).noalias() -= x.rightCols(tail) * tb.block(j0, j0 + bj, bj, tail).transpose();
        }
        const Small s = tb.block(j0, j0, bj, bj).transpose();
        for (auto ib = rows.rbegin(); ib != rows.rend(); ++ib) {
            const Eigen::Index i0 = ib->start;
            const Eigen::Index bi = ib->size;
            Small v;
            if (bi == 1 && bj == 1) {
                v.resize(1, 1);
                v(0, 0) = x(i0, j0) / (ta(i0, i0) + s(0, 0));
            } else {
                v = small_sylvester(ta.block(i0, i0, bi, bi), s, x.block(i0, j0, bi, bj));
            }
            x.block(i0, j0, bi, bj) = v;
            if (i0 > 0) {
                x.block(0, j0, i0, bj).noalias() -= ta.block(0, i0, i0, bi) * v;
            }
        }
    }
}

// Split index near the middle that does not cut a 2×2 diagonal block.
Eigen::Index split_point(const ConstRef& t) {
    Eigen::Index k = t.rows() / 2;
    if (t(k, k - 1) != 0.0) {
        ++k;
    }
    return k;
}

constexpr Eigen::Index kSweepSize = 64;

// Recursive blocking keeps most of the work in matrix-matrix products.
void sylvester_recursive(const ConstRef& ta, const ConstRef& tb, MutRef x) {
    const Eigen::Index m = ta.rows();
    const Eigen::Index n = tb.rows();
    if (m <= kSweepSize && n <= kSweepSize) {
        sylvester_sweep(ta, tb, x);
        return;
    }
    if (m >= n) {
        const Eigen::Index k = split_point(ta);
        sylvester_recursive(ta.bottomRightCorner(m - k, m - k), tb, x.bottomRows(m - k));
        x.topRows(k).noalias() -= ta.topRightCorner(k, m - k) * x.bottomRows(m - k);
        sylvester_recursive(ta.topLeftCorner(k, k), tb, x.topRows(k));
    } else {
        const Eigen::Index k = split_point(tb);
        sylvester_recursive(ta, tb.bottomRightCorner(n - k, n - k), x.rightCols(n - k));
        x.leftCols(k).noalias() -= x.rightCols(n - k) * tb.topRightCorner(k, n - k).transpose();
        sylvester_recursive(ta, tb.topLeftCorner(k, k), x.leftCols(k));
    }
}

} // namespace

Matrix solve_quasi_triangular_lyapunov(const Matrix& t, const Matrix& c) {
    const Eigen::Index n = t.rows();
    if (t.cols() != n || c.rows() != n || c.cols() != n) {
        throw DimensionMismatch("solve_quasi_triangular_lyapunov: dimension mismatch");
    }
    Matrix y = c;
    sylvester_recursive(t, t, y);
    return y;
}

Matrix solve_lyapunov(const RealSchur& schur, const Matrix& q, bool transposed) {
    const Eigen::Index n = schur.T.rows();
    if (q.rows() != n || q.cols() != n) {
        throw DimensionMismatch("solve_lyapunov: Q does not match A");
    }
    require_stable(schur.eigenvalues, "solve_lyapunov");
    Matrix c = -(schur.U.transpose() * q * schur.U);
    Matrix y;
    if (!transposed) {
        y = solve_quasi_triangular_lyapunov(schur.T, c);
    } else {
        // Tᵀ Y + Y T = C is brought to upper form by reversing the index order.
        const Matrix flipped = schur.T.transpose().reverse();
        y = solve_quasi_triangular_lyapunov(flipped, c.reverse()).reverse();
    }
    return symmetrize(schur.U * y * schur.U.transpose());
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
    if (a.rows() != a.cols()) {
        throw DimensionMismatch("solve_lyapunov: A is not square");
    }
    return solve_lyapunov(real_schur(a), q, false);
}

Matrix riccati_residual(const Matrix& a, const Matrix& b, const Matrix& r, const Matrix& q, const Matrix& x) {
    const Matrix bx = b.transpose() * x;
    const Matrix g_x = r.ldlt().solve(bx);
    Matrix res = a.transpose() * x;
    res += res.transpose().eval();
    res.noalias() -= bx.transpose() * g_x;
    res += q;
    return symmetrize(res);
}

Matrix stabilizing_gain(const Matrix& a, const Matrix& b, const Matrix& r, double shift) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n || b.rows() != n || r.rows() != b.cols() || r.cols() != b.cols()) {
        throw DimensionMismatch("stabilizing_gain: dimension mismatch");
    }
    if (!(shift > 0.0)) {
        throw InvalidParameter("stabilizing_gain: shift must be positive");
    }
    RealSchur schur = real_schur(a.transpose());
    const Eigen::Index k = reorder_schur(schur, [shift](Complex l) { return l.real() > -shift; });
    if (k == 0) {
        return Matrix::Zero(b.cols(), n);
    }
    // Uᵀ₁ A = T₁₁ᵀ Uᵀ₁: the leading block acts on the left invariant subspace.
    const Matrix u1 = schur.U.leftCols(k);
    Matrix lead = schur.T.topLeftCorner(k, k).transpose();
    lead.diagonal().array() += shift;
    const Matrix b1 = u1.transpose() * b;
    const Matrix g1 = b1 * r.ldlt().solve(b1.transpose());
    // (-lead) is stable, so Z solves a well-posed Lyapunov equation.
    const Matrix z = solve_lyapunov(Matrix(-lead), g1);
    const Eigen::LDLT<Matrix> zf(z);
    if (zf.info() != Eigen::Success || !(zf.vectorD().minCoeff() > 0.0)) {
        throw NumericFailure("stabilizing_gain: unstable modes are not controllable; no stabilizing initializer");
    }
    const Matrix k1 = r.ldlt().solve(b1.transpose() * zf.solve(Matrix::Identity(k, k)));
    Matrix closed = schur.T.topLeftCorner(k, k).transpose() - b1 * k1;
    if (!(spectral_abscissa(closed) < 0.0)) {
        throw NumericFailure("stabilizing_gain: initializer failed to stabilize the unstable modes");
    }
    return k1 * u1.transpose();
}

namespace {

double frob2(const Matrix& m) { return m.squaredNorm(); }

// Minimizes f(t) = a(1-t)² - 2b(1-t)t² + c t⁴ over (0, 2].
double exact_line_search(double a, double b, double c) {
    auto f = [&](double t) { return a * (1 - t) * (1 - t) - 2 * b * (1 - t) * t * t + c * t * t * t * t; };
    std::vector<double> candidates{1.0, 2.0};
    // f'(t)/2 = 2c t³ + 3b t² + (a - 2b) t - a
    const std::array<double, 4> coef{2 * c, 3 * b, a - 2 * b, -a};
    int lead = 0;
    const double scale = std::max({std::abs(coef[0]), std::abs(coef[1]), std::abs(coef[2]), std::abs(coef[3])});
    while (lead < 3 && std::abs(coef[lead]) <= 1e-14 * scale) {
        ++lead;
    }
    const int degree = 3 - lead;
    if (degree >= 1) {
        Matrix companion = Matrix::Zero(degree, degree);
        for (int i = 0; i < degree; ++i) {
            companion(0, i) = -coef[lead + 1 + i] / coef[lead];
        }
        for (int i = 1; i < degree; ++i) {
            companion(i, i - 1) = 1.0;
        }
        const ComplexVector roots = eigenvalues(companion);
        for (const auto& root : roots) {
            if (std::abs(root.imag()) <= 1e-10 * std::max(1.0, std::abs(root.real())) && root.real() > 0.0 &&
                root.real() <= 2.0) {
                candidates.push_back(root.real());
            }
        }
    }
    double best = 1.0;
    double best_f = f(1.0);
    for (double t : candidates) {
        if (f(t) < best_f) {
            best_f = f(t);
            best = t;
        }
    }
    return best;
}

} // namespace

RiccatiSolution solve_riccati_control(const Matrix& a, const Matrix& b, const Matrix& r, const Matrix& q,
                                      double alpha, const RiccatiOptions& options) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n || r.rows() != b.cols() ||
        r.cols() != b.cols()) {
        throw DimensionMismatch("solve_riccati_control: dimension mismatch");
    }
    if (r.llt().info() != Eigen::Success) {
        throw InvalidParameter("solve_riccati_control: R must be symmetric positive definite");
    }
    Matrix shifted = a;
    shifted.diagonal().array() += alpha;
    const Eigen::LDLT<Matrix> rf(r);
    const Matrix g = b * rf.solve(b.transpose());

    // Kleinman step from a stabilizing gain.
    Matrix k0 = Matrix::Zero(b.cols(), n);
    RealSchur schur = real_schur(shifted);
    const bool stable = std::all_of(schur.eigenvalues.begin(), schur.eigenvalues.end(),
                                    [](const Complex& l) { return l.real() < 0.0; });
    if (!stable) {
        k0 = stabilizing_gain(shifted, b, r, options.initializer_shift);
        schur = real_schur(Matrix(shifted - b * k0));
    }

    RiccatiSolution sol;
    sol.X = solve_lyapunov(schur, Matrix(q + k0.transpose() * r * k0), true);
    double previous = std::numeric_limits<double>::infinity();
    int slow_steps = 0;
    for (int it = 1;; ++it) {
        const Matrix res = riccati_residual(shifted, b, r, q, sol.X);
        const double xnorm = std::max(sol.X.norm(), std::numeric_limits<double>::min());
        sol.residual_norm = res.norm() / xnorm;
        sol.iterations = it;
        if (sol.residual_norm <= options.tolerance) {
            break;
        }
        slow_steps = sol.residual_norm > 0.9 * previous ? slow_steps + 1 : 0;
        if (it >= options.max_iterations || slow_steps >= 8) {
            throw NumericFailure("solve_riccati_control: Newton stagnation, relative residual " +
                                 std::to_string(sol.residual_norm));
        }
        previous = sol.residual_norm;

        // Newton step N: (A - G X)ᵀ N + N (A - G X) + R(X) = 0
        const RealSchur cs = real_schur(Matrix(shifted - g * sol.X));
        const Matrix step = solve_lyapunov(cs, res, true);
        double t = 1.0;
        if (options.line_search) {
            const Matrix v = symmetrize(step * g * step);
            t = exact_line_search(frob2(res), res.cwiseProduct(v).sum(), frob2(v));
        }
        sol.X = symmetrize(sol.X + t * step);
    }
    sol.gain = rf.solve(b.transpose() * sol.X);
    sol.closed_loop_abscissa = spectral_abscissa(Matrix(a - b * sol.gain));
    return sol;
}

RiccatiSolution solve_riccati_filter(const Matrix& a, const Matrix& c, const Matrix& r, const Matrix& q,
                                     double alpha, const RiccatiOptions& options) {
    RiccatiSolution dual = solve_riccati_control(a.transpose(), c.transpose(), r, q, alpha, options);
    dual.gain.transposeInPlace();
    return dual;
}

BalancedReduction balanced_truncation(const StateSpace& sys, Eigen::Index r) {
    sys.validate();
    const Eigen::Index n = sys.states();
    if (r < 1 || r > n) {
        throw InvalidParameter("balanced_truncation: order must lie in [1, n]");
    }
    const RealSchur schur = real_schur(sys.A);
    require_stable(schur.eigenvalues, "balanced_truncation");
    const Matrix p = solve_lyapunov(schur, sys.B * sys.B.transpose(), false);
    const Matrix q = solve_lyapunov(schur, sys.C.transpose() * sys.C, true);

    // Gramian factors from the symmetric eigendecomposition; round-off can
    // make trailing eigenvalues slightly negative, those directions are dropped.
    // Rank is decided on the Hankel values below, not here.
    auto factor = [n](const Matrix& gram) {
        const SymmetricEigen eig = symmetric_eigen(gram);
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = eig.values.size() - 1; i >= 0; --i) {
            if (eig.values[i] > 0.0) {
                keep.push_back(i);
            }
        }
        Matrix s(n, static_cast<Eigen::Index>(keep.size()));
        for (std::size_t k = 0; k < keep.size(); ++k) {
            s.col(static_cast<Eigen::Index>(k)) = eig.vectors.col(keep[k]) * std::sqrt(eig.values[keep[k]]);
        }
        return s;
    };
    const Matrix sc = factor(p);
    const Matrix so = factor(q);
    const Svd cross = svd(Matrix(so.transpose() * sc));

    BalancedReduction out;
    out.hankel_singular_values = cross.s;
    const Eigen::Index available = cross.s.size();
    Eigen::Index rank = 0;
    while (rank < available && cross.s[rank] > 1e-14 * cross.s[0]) {
        ++rank;
    }
    Eigen::Index order = r;
    if (order > rank) {
        std::clog << "warning: balanced_truncation order " << r << " exceeds numerical rank " << rank
                  << "; clamped\n";
        order = rank;
    }
    if (order == 0) {
        throw NumericFailure("balanced_truncation: system has zero Hankel rank");
    }
    out.order = order;
    out.error_bound = 2.0 * cross.s.tail(available - order).sum();

    const Vector inv_sqrt = cross.s.head(order).cwiseSqrt().cwiseInverse();
    const Matrix left = inv_sqrt.asDiagonal() * (cross.u.leftCols(order).transpose() * so.transpose());
    const Matrix right = sc * (cross.vt.topRows(order).transpose() * inv_sqrt.asDiagonal());
    out.reduced.A = left * sys.A * right;
    out.reduced.B = left * sys.B;
    out.reduced.C = sys.C * right;
    out.reduced.D = sys.D;
    return out;
}

double sample_frequency_error(const StateSpace& a, const StateSpace& b, const std::vector<double>& omegas) {
    if (a.inputs() != b.inputs() || a.outputs() != b.outputs()) {
        throw DimensionMismatch("sample_frequency_error: systems have different input/output sizes");
    }
    double worst = 0.0;
    for (double w : omegas) {
        const ComplexMatrix d = transfer_value(a, Complex(0.0, w)) - transfer_value(b, Complex(0.0, w));
        if (d.size() == 0) {
            continue;
        }
        const Eigen::JacobiSVD<ComplexMatrix> s(d);
        worst = std::max(worst, s.singularValues()(0));
    }
    return worst;
}

} // namespace roomctl
