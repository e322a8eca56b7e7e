#include "roomctl/plant.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "roomctl/errors.hpp"
#include "roomctl/io.hpp"

namespace roomctl {

PlantShapes room_shapes(ObservationSetup setup) {
    PlantShapes s;
    s.controls.push_back(ShapeSpec::indicator(0.0, 0.05, 0.1, 0.4));
    s.disturbances.push_back(ShapeSpec::boundary_indicator(1.0));
    const double weight = 1.0 / (0.2 * 0.2);
    if (setup == ObservationSetup::Near) {
        s.observations.push_back(ShapeSpec::indicator(0.7, 0.9, 0.1, 0.3, weight));
    } else {
        s.observations.push_back(ShapeSpec::indicator(0.1, 0.3, 0.7, 0.9, weight));
    }
    return s;
}

GeneralizedPlant build_plant(const Mesh& mesh, const VectorField& velocity, double reynolds, double prandtl,
                             const PlantShapes& shapes) {
    if (!(reynolds > 0.0) || !(prandtl > 0.0)) {
        throw InvalidParameter("build_plant: Re and Pr must be positive");
    }
    const auto n = static_cast<Eigen::Index>(mesh.num_p2());
    if (velocity.x.size() != n || velocity.y.size() != n) {
        throw DimensionMismatch("build_plant: velocity has " + std::to_string(velocity.x.size()) +
                                " nodes, mesh has " + std::to_string(n));
    }
    if (shapes.controls.empty() || shapes.observations.empty()) {
        throw InvalidParameter("build_plant: need at least one control and one observation shape");
    }

    GeneralizedPlant p;
    p.reynolds = reynolds;
    p.prandtl = prandtl;
    p.alpha = 1.0 / (reynolds * prandtl);
    p.dofs = dirichlet_map(mesh, BoundaryTag::Wall);

    const SparseMatrix mass = assemble_mass(mesh, Space::P2);
    const SparseMatrix stiff = assemble_stiffness(mesh, Space::P2);
    const SparseMatrix adv = assemble_advection(mesh, velocity);
    SparseMatrix a = -(p.alpha * stiff + adv);
    a.prune(0.0);

    p.M = p.dofs.reduce(mass);
    p.A = p.dofs.reduce(a);

    const auto nr = static_cast<Eigen::Index>(p.dofs.reduced_size());
    p.B.resize(nr, static_cast<Eigen::Index>(shapes.controls.size()));
    for (std::size_t j = 0; j < shapes.controls.size(); ++j) {
        p.B.col(static_cast<Eigen::Index>(j)) = p.dofs.reduce(assemble_load_domain(mesh, shapes.controls[j]));
    }
    p.Bd.resize(nr, static_cast<Eigen::Index>(shapes.disturbances.size()));
    for (std::size_t j = 0; j < shapes.disturbances.size(); ++j) {
        p.Bd.col(static_cast<Eigen::Index>(j)) =
            p.alpha * p.dofs.reduce(assemble_load_boundary(mesh, BoundaryTag::Inlet, shapes.disturbances[j]));
    }
    p.C.resize(static_cast<Eigen::Index>(shapes.observations.size()), nr);
    for (std::size_t i = 0; i < shapes.observations.size(); ++i) {
        p.C.row(static_cast<Eigen::Index>(i)) =
            p.dofs.reduce(assemble_load_domain(mesh, shapes.observations[i])).transpose();
    }
    p.D = Matrix::Zero(p.C.rows(), p.B.cols());
    p.Dd = Matrix::Zero(p.C.rows(), p.Bd.cols());

    auto warn_zero = [](const Matrix& m, const char* name) {
        if (m.size() > 0 && m.cwiseAbs().maxCoeff() == 0.0) {
            std::clog << "warning: plant map " << name << " is identically zero on this mesh\n";
        }
    };
    warn_zero(p.B, "B");
    warn_zero(p.Bd, "B_d");
    warn_zero(p.C, "C");
    return p;
}

namespace {

Eigen::LLT<Matrix> mass_cholesky(const GeneralizedPlant& plant) {
    Eigen::LLT<Matrix> llt(Matrix(plant.M));
    if (llt.info() != Eigen::Success) {
        throw NumericFailure("mass matrix is not positive definite");
    }
    return llt;
}

} // namespace

StateSpace to_standard_form(const GeneralizedPlant& plant) {
    const auto llt = mass_cholesky(plant);
    const auto l = llt.matrixL();
    StateSpace s;
    // L⁻¹ A L⁻ᵀ = (L⁻¹ (L⁻¹ A)ᵀ)ᵀ
    Matrix y = l.solve(Matrix(plant.A));
    Matrix yt = y.transpose();
    s.A = l.solve(yt).transpose();
    s.B = l.solve(plant.B);
    Matrix ct = plant.C.transpose();
    s.C = l.solve(ct).transpose();
    s.D = plant.D;
    return s;
}

Matrix standard_disturbance_map(const GeneralizedPlant& plant) {
    const auto llt = mass_cholesky(plant);
    return llt.matrixL().solve(plant.Bd);
}

namespace {

ComplexVector sort_rightmost(const ComplexVector& ev, Eigen::Index k) {
    std::vector<Complex> v(ev.data(), ev.data() + ev.size());
    std::stable_sort(v.begin(), v.end(), [](Complex a, Complex b) {
        if (a.real() != b.real()) {
            return a.real() > b.real();
        }
        return a.imag() > b.imag();
    });
    k = std::min<Eigen::Index>(k, static_cast<Eigen::Index>(v.size()));
    ComplexVector out(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        out(i) = v[static_cast<std::size_t>(i)];
    }
    return out;
}

} // namespace

ComplexVector shift_invert_rightmost(const SparseMatrix& a, const SparseMatrix& m, Eigen::Index k,
                                     const SpectrumOptions& options) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n || m.rows() != n || m.cols() != n) {
        throw DimensionMismatch("shift_invert_rightmost: pencil must be square and conforming");
    }
    if (k <= 0) {
        throw InvalidParameter("shift_invert_rightmost: k must be positive");
    }
    const double sigma = options.shift;
    SparseMatrix shifted = a - sigma * m;
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(shifted);
    lu.factorize(shifted);
    if (lu.info() != Eigen::Success) {
        throw NumericFailure("shift_invert_rightmost: A - σM is singular; choose another shift");
    }

    // Ritz values of op = (A - σM)⁻¹ M with largest modulus correspond to
    // eigenvalues λ = σ + 1/μ nearest σ.
    const Eigen::Index want = std::min<Eigen::Index>(n, 2 * k + 4);
    Eigen::Index dim = options.krylov_dim > 0 ? options.krylov_dim : std::max<Eigen::Index>(4 * k + 40, 80);
    dim = std::min(dim, n);

    Vector start = Vector::Ones(n) + Vector::LinSpaced(n, 0.0, 1.0);
    for (int restart = 0; restart <= options.max_restarts; ++restart) {
        Matrix v = Matrix::Zero(n, dim + 1);
        Matrix h = Matrix::Zero(dim + 1, dim);
        v.col(0) = start.normalized();
        Eigen::Index built = dim;
        for (Eigen::Index j = 0; j < dim; ++j) {
            Vector w = lu.solve(m * v.col(j));
            for (int pass = 0; pass < 2; ++pass) {
                const Vector coeff = v.leftCols(j + 1).transpose() * w;
                w -= v.leftCols(j + 1) * coeff;
                h.col(j).head(j + 1) += coeff;
            }
            const double beta = w.norm();
            h(j + 1, j) = beta;
            if (beta <= 1e-14 * h.col(j).head(j + 1).norm()) {
                built = j + 1; // invariant subspace found
                break;
            }
            v.col(j + 1) = w / beta;
        }
        const Matrix hm = h.topLeftCorner(built, built);
        Eigen::EigenSolver<Matrix> es(hm);
        if (es.info() != Eigen::Success) {
            throw NumericFailure("shift_invert_rightmost: Hessenberg eigensolver failed");
        }
        const ComplexVector mu = es.eigenvalues();
        const ComplexMatrix y = es.eigenvectors();
        std::vector<Eigen::Index> order(static_cast<std::size_t>(built));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](Eigen::Index i, Eigen::Index j) { return std::abs(mu(i)) > std::abs(mu(j)); });

        const Eigen::Index nwant = std::min(want, built);
        const double tail = built < dim + 1 ? h(built, built - 1) : 0.0;
        bool converged = true;
        Vector next = Vector::Zero(n);
        for (Eigen::Index q = 0; q < nwant; ++q) {
            const Eigen::Index i = order[static_cast<std::size_t>(q)];
            const double resid = std::abs(tail * y(built - 1, i));
            if (resid > options.tolerance * std::abs(mu(i))) {
                converged = false;
            }
            const ComplexVector ritz = v.leftCols(built).cast<Complex>() * y.col(i);
            next += ritz.real() + ritz.imag();
        }
        if (converged || built < dim) {
            ComplexVector lambda(nwant);
            for (Eigen::Index q = 0; q < nwant; ++q) {
                lambda(q) = sigma + 1.0 / mu(order[static_cast<std::size_t>(q)]);
            }
            return sort_rightmost(lambda, k);
        }
        start = next;
    }
    throw NumericFailure("shift_invert_rightmost: no convergence after " + std::to_string(options.max_restarts) +
                         " restarts");
}

ComplexVector rightmost_spectrum(const GeneralizedPlant& plant, Eigen::Index k, const SpectrumOptions& options) {
    if (k <= 0) {
        throw InvalidParameter("rightmost_spectrum: k must be positive");
    }
    if (plant.states() <= options.dense_limit) {
        return sort_rightmost(eigenvalues(to_standard_form(plant).A), k);
    }
    return shift_invert_rightmost(plant.A, plant.M, k, options);
}

ComplexMatrix transfer_value(const GeneralizedPlant& plant, Complex s) {
    using CSparse = Eigen::SparseMatrix<Complex>;
    CSparse pencil = s * plant.M.cast<Complex>() - plant.A.cast<Complex>();
    pencil.makeCompressed();
    Eigen::SparseLU<CSparse, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(pencil);
    lu.factorize(pencil);
    if (lu.info() != Eigen::Success) {
        throw NumericFailure("transfer_value: sM - A is singular");
    }
    const ComplexMatrix x = lu.solve(plant.B.cast<Complex>());
    return plant.C.cast<Complex>() * x + plant.D.cast<Complex>();
}

void export_plant(const GeneralizedPlant& plant, const std::string& dir, const std::string& metadata_json) {
    const std::filesystem::path root(dir);
    write_file(root / "M.coo", [&](std::ostream& o) { write_coordinate(plant.M, o); });
    write_file(root / "A.coo", [&](std::ostream& o) { write_coordinate(plant.A, o); });
    write_file(root / "B.coo", [&](std::ostream& o) { write_coordinate(plant.B, o); });
    write_file(root / "Bd.coo", [&](std::ostream& o) { write_coordinate(plant.Bd, o); });
    write_file(root / "C.coo", [&](std::ostream& o) { write_coordinate(plant.C, o); });
    write_file(root / "plant.json", [&](std::ostream& o) { o << metadata_json << '\n'; });
}

} // namespace roomctl
