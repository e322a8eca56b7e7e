#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "roomctl/errors.hpp"
#include "roomctl/fem.hpp"

using namespace roomctl;

namespace {

constexpr double kPi = std::numbers::pi;

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

// ∫ x^a y^b over the reference triangle
double reference_monomial(int a, int b) {
    return factorial(a) * factorial(b) / factorial(a + b + 2);
}

Matrix p1_mass_oracle(const std::array<Point, 3>& v) {
    const double area = 0.5 * std::abs((v[1].x - v[0].x) * (v[2].y - v[0].y) - (v[2].x - v[0].x) * (v[1].y - v[0].y));
    Matrix m = Matrix::Constant(3, 3, 1.0);
    m.diagonal().setConstant(2.0);
    return area / 12.0 * m;
}

Matrix p1_stiffness_oracle(const std::array<Point, 3>& v) {
    const double det = (v[1].x - v[0].x) * (v[2].y - v[0].y) - (v[2].x - v[0].x) * (v[1].y - v[0].y);
    Matrix grad(3, 2);
    for (int k = 0; k < 3; ++k) {
        const Point& p = v[static_cast<std::size_t>((k + 1) % 3)];
        const Point& q = v[static_cast<std::size_t>((k + 2) % 3)];
        grad(k, 0) = (p.y - q.y) / det;
        grad(k, 1) = (q.x - p.x) / det;
    }
    return 0.5 * std::abs(det) * grad * grad.transpose();
}

Matrix assemble_p1_oracle(const Mesh& mesh, Matrix (*element)(const std::array<Point, 3>&)) {
    const auto n = static_cast<Eigen::Index>(mesh.num_p1());
    Matrix global = Matrix::Zero(n, n);
    const auto vertices = mesh.p1_nodes();
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto idx = mesh.p1_triangle(t);
        const Matrix ke = element({vertices[static_cast<std::size_t>(idx[0])], vertices[static_cast<std::size_t>(idx[1])],
                                   vertices[static_cast<std::size_t>(idx[2])]});
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                global(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]) += ke(i, j);
            }
        }
    }
    return global;
}

double sine_mode(Point p) { return std::sin(kPi * p.x) * std::sin(kPi * p.y); }

} // namespace

TEST(Quadrature, TriangleRulesExactToDegree) {
    for (int degree : {1, 2, 5}) {
        const auto& rule = triangle_rule(degree);
        EXPECT_EQ(rule.degree, degree);
        for (int a = 0; a <= degree; ++a) {
            for (int b = 0; a + b <= degree; ++b) {
                double sum = 0.0;
                for (std::size_t q = 0; q < rule.points.size(); ++q) {
                    const double x = rule.points[q][1];
                    const double y = rule.points[q][2];
                    sum += rule.weights[q] * std::pow(x, a) * std::pow(y, b);
                }
                EXPECT_NEAR(sum, reference_monomial(a, b), 1e-14) << "degree " << degree << " x^" << a << " y^" << b;
            }
        }
    }
    EXPECT_EQ(triangle_rule(3).degree, 5);
    EXPECT_THROW(triangle_rule(6), InvalidParameter);
}

TEST(Quadrature, LineRuleExactToDegreeFive) {
    const auto& rule = gauss3();
    for (int k = 0; k <= 5; ++k) {
        double sum = 0.0;
        for (int q = 0; q < 3; ++q) {
            sum += rule.weights[static_cast<std::size_t>(q)] * std::pow(rule.points[static_cast<std::size_t>(q)], k);
        }
        EXPECT_NEAR(sum, 1.0 / (k + 1), 1e-15);
    }
}

TEST(Fem, ReferenceElementOracles) {
    const std::array<Point, 3> ref{Point{0, 0}, Point{1, 0}, Point{0, 1}};
    Matrix expected_k(3, 3);
    expected_k << 2, -1, -1, -1, 1, 0, -1, 0, 1;
    EXPECT_LT((p1_stiffness_oracle(ref) - 0.5 * expected_k).norm(), 1e-15);

    const std::array<Point, 3> unit{Point{0, 0}, Point{2, 0}, Point{0, 1}};
    Matrix expected_m(3, 3);
    expected_m << 2, 1, 1, 1, 2, 1, 1, 1, 2;
    EXPECT_LT((p1_mass_oracle(unit) - expected_m / 12.0).norm(), 1e-15);
}

TEST(Fem, P1AssemblyMatchesElementOracle) {
    const Mesh mesh = build_structured_mesh(Geometry::room(), 5);
    const Matrix m = Matrix(assemble_mass(mesh, Space::P1));
    const Matrix k = Matrix(assemble_stiffness(mesh, Space::P1));
    EXPECT_LT((m - assemble_p1_oracle(mesh, p1_mass_oracle)).norm(), 1e-15);
    EXPECT_LT((k - assemble_p1_oracle(mesh, p1_stiffness_oracle)).norm(), 1e-14);
}

TEST(Fem, MassTotalsDomainArea) {
    for (Space space : {Space::P1, Space::P2}) {
        const Mesh mesh = build_structured_mesh(Geometry::room(), 21);
        const SparseMatrix m = assemble_mass(mesh, space);
        const Vector one = Vector::Ones(m.rows());
        EXPECT_NEAR(one.dot(m * one), 1.0, 1e-12);
    }
}

TEST(Fem, P2MassRowSumsAreBasisIntegrals) {
    const Mesh mesh = build_structured_mesh(Geometry::room(), 9);
    const SparseMatrix m = assemble_mass(mesh, Space::P2);
    Vector expected = Vector::Zero(m.rows());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const double area = mesh.signed_area(t);
        for (int k = 3; k < 6; ++k) {
            expected[mesh.triangles[t][static_cast<std::size_t>(k)]] += area / 3.0;
        }
    }
    EXPECT_LT((m * Vector::Ones(m.rows()) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Fem, MassIsSymmetricPositiveDefinite) {
    for (int n : {5, 11}) {
        const Mesh mesh = build_structured_mesh(Geometry::room(), n);
        const Matrix m = Matrix(assemble_mass(mesh, Space::P2));
        EXPECT_LT((m - m.transpose()).norm(), 1e-16);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
        EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
    }
    const Mesh mesh = build_structured_mesh(Geometry::room(), 41);
    Eigen::SimplicialLLT<SparseMatrix> llt(assemble_mass(mesh, Space::P2));
    EXPECT_EQ(llt.info(), Eigen::Success);
}

TEST(Fem, StiffnessKernelIsConstants) {
    for (Space space : {Space::P1, Space::P2}) {
        const Mesh mesh = build_structured_mesh(Geometry::room(), 11);
        const SparseMatrix k = assemble_stiffness(mesh, space);
        EXPECT_LT((k * Vector::Ones(k.rows())).cwiseAbs().maxCoeff(), 1e-12);
        const Matrix kd = Matrix(k);
        EXPECT_LT((kd - kd.transpose()).norm(), 1e-12);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(kd);
        EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-12);
        EXPECT_GT(eig.eigenvalues()[1], 1e-3);
    }
}

TEST(Fem, RayleighQuotientOfSineMode) {
    const Mesh mesh = build_structured_mesh(Geometry::room(), 21);
    const Vector theta = interpolate(mesh, sine_mode);
    const double energy = theta.dot(assemble_stiffness(mesh, Space::P2) * theta);
    const double mass = theta.dot(assemble_mass(mesh, Space::P2) * theta);
    EXPECT_NEAR(energy, kPi * kPi / 2.0, 1e-3);
    EXPECT_NEAR(energy / mass, 2.0 * kPi * kPi, 2e-3 * 2.0 * kPi * kPi);
}

TEST(Fem, AdvectionOfZeroVelocityVanishes) {
    const Mesh mesh = build_structured_mesh(Geometry::room(), 9);
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(mesh.num_p2()));
    EXPECT_EQ(assemble_advection(mesh, {zero, zero}).norm(), 0.0);
}

TEST(Fem, AdvectionOfLinearProfileGivesBasisIntegrals) {
    const Mesh mesh = build_structured_mesh(Geometry::room(), 11);
    const auto n = static_cast<Eigen::Index>(mesh.num_p2());
    const SparseMatrix adv = assemble_advection(mesh, {Vector::Ones(n), Vector::Zero(n)});
    const Vector theta = interpolate(mesh, [](Point p) { return p.x; });
    const Vector mass_vector = assemble_mass(mesh, Space::P2) * Vector::Ones(n);
    EXPECT_LT((adv * theta - mass_vector).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Fem, AdvectionBoundaryFluxIdentity) {
    // v = (y, x) is divergence free; ∫ v·∇(x²) = ∮ x² v·n = 1/2
    const Mesh mesh = build_structured_mesh(Geometry::room(), 11);
    const VectorField v{interpolate(mesh, [](Point p) { return p.y; }), interpolate(mesh, [](Point p) { return p.x; })};
    const SparseMatrix adv = assemble_advection(mesh, v);
    const Vector theta = interpolate(mesh, [](Point p) { return p.x * p.x; });
    EXPECT_NEAR(Vector::Ones(adv.rows()).dot(adv * theta), 0.5, 1e-13);
}

TEST(Fem, AdvectionRejectsWrongVelocitySize) {
    const Mesh mesh = build_structured_mesh(Geometry::room(), 9);
    const Vector v = Vector::Zero(10);
    EXPECT_THROW(assemble_advection(mesh, {v, v}), DimensionMismatch);
}

TEST(Fem, DomainLoads) {
    const Mesh mesh = build_structured_mesh(Geometry::room(), 41);
    const Vector c1 = assemble_load_domain(mesh, ShapeSpec::indicator(0.7, 0.9, 0.1, 0.3, 1.0 / 0.04));
    EXPECT_NEAR(c1.sum(), 1.0, 1e-10);
    const Vector b = assemble_load_domain(mesh, ShapeSpec::indicator(0.0, 0.05, 0.1, 0.4));
    EXPECT_NEAR(b.sum(), 0.015, 1e-12);
    const Vector outside = assemble_load_domain(mesh, ShapeSpec::indicator(2.0, 3.0, 2.0, 3.0));
    EXPECT_EQ(outside.norm(), 0.0);
    const Vector zero = assemble_load_domain(mesh, ShapeSpec::indicator(0.2, 0.4, 0.2, 0.4, 0.0));
    EXPECT_EQ(zero.norm(), 0.0);
    const Vector p1 = assemble_load_domain(mesh, ShapeSpec::indicator(0.7, 0.9, 0.1, 0.3), Space::P1);
    EXPECT_EQ(p1.size(), static_cast<Eigen::Index>(mesh.num_p1()));
    EXPECT_NEAR(p1.sum(), 0.04, 1e-12);
    EXPECT_THROW(assemble_load_domain(mesh, ShapeSpec::boundary_indicator()), InvalidParameter);
}

TEST(Fem, OffGridRectangleLoad) {
    const Mesh mesh = build_structured_mesh(Geometry::room(), 21);
    const Vector load = assemble_load_domain(mesh, ShapeSpec::indicator(0.33, 0.61, 0.17, 0.52));
    EXPECT_NEAR(load.sum(), 0.28 * 0.35, 1e-3);
}

TEST(Fem, BoundaryLoads) {
    const Mesh mesh = build_structured_mesh(Geometry::room(), 41);
    EXPECT_NEAR(assemble_load_boundary(mesh, BoundaryTag::Inlet, ShapeSpec::boundary_indicator()).sum(), 0.3, 1e-12);
    EXPECT_NEAR(assemble_load_boundary(mesh, BoundaryTag::Outlet, ShapeSpec::boundary_indicator()).sum(), 0.4, 1e-12);
    EXPECT_EQ(assemble_load_boundary(mesh, BoundaryTag::Inlet, ShapeSpec::boundary_indicator(0.0)).norm(), 0.0);
    EXPECT_THROW(assemble_load_boundary(mesh, BoundaryTag::Interior, ShapeSpec::boundary_indicator()),
                 InvalidParameter);
}

TEST(Fem, BoundaryLoadIntegratesQuadraticTraces) {
    for (int n : {21, 41}) {
        const Mesh mesh = build_structured_mesh(Geometry::room(), n);
        const Vector load = assemble_load_boundary(mesh, BoundaryTag::Inlet, ShapeSpec::boundary_indicator());
        const Vector trace = interpolate(mesh, [](Point p) { return p.y * p.y; });
        EXPECT_NEAR(load.dot(trace), (0.064 - 0.001) / 3.0, 1e-15);
    }
    const Mesh mesh = build_structured_mesh(Geometry::room(), 21);
    const Vector flux = assemble_load_boundary(mesh, BoundaryTag::Inlet, ShapeSpec::inlet_flux(0.4));
    EXPECT_GT(flux.sum(), 0.1);
}

TEST(Fem, DirichletReduction) {
    const Mesh mesh = build_structured_mesh(Geometry::room(), 81);
    const DofMap map = dirichlet_map(mesh, BoundaryTag::Wall);
    EXPECT_EQ(map.full_size(), 6561U);
    EXPECT_EQ(map.reduced_size(), 6295U);
    const Mesh design = build_structured_mesh(Geometry::room(), 41);
    EXPECT_EQ(dirichlet_map(design, BoundaryTag::Wall).reduced_size(), 1547U);

    const Vector v = Vector::LinSpaced(static_cast<Eigen::Index>(map.full_size()), 1.0, 2.0);
    const Vector back = map.reinflate(map.reduce(v));
    for (std::size_t i = 0; i < map.full_size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        EXPECT_EQ(back[k], mesh.node_tags[i] == BoundaryTag::Wall ? 0.0 : v[k]);
    }
    EXPECT_THROW(map.reduce(Vector::Zero(3)), DimensionMismatch);
    EXPECT_THROW(map.reinflate(Vector::Zero(3)), DimensionMismatch);
}

TEST(Fem, DirichletWithoutTaggedNodesIsIdentity) {
    Mesh mesh = build_structured_mesh(Geometry::room(), 9);
    std::fill(mesh.node_tags.begin(), mesh.node_tags.end(), BoundaryTag::Interior);
    const SparseMatrix m = assemble_mass(mesh, Space::P2);
    const Vector load = assemble_load_domain(mesh, ShapeSpec::indicator(0.0, 0.5, 0.0, 0.5));
    const ReducedOperators ops = apply_dirichlet(mesh, BoundaryTag::Wall, {m}, {load});
    EXPECT_EQ(ops.map.reduced_size(), mesh.num_p2());
    EXPECT_EQ((Matrix(ops.matrices[0]) - Matrix(m)).norm(), 0.0);
    EXPECT_EQ((ops.vectors[0] - load).norm(), 0.0);
}

TEST(Fem, DirichletCoveringEverythingThrows) {
    Mesh mesh = build_structured_mesh(Geometry::room(), 9);
    std::fill(mesh.node_tags.begin(), mesh.node_tags.end(), BoundaryTag::Wall);
    EXPECT_THROW(dirichlet_map(mesh, BoundaryTag::Wall), InvalidParameter);
}

TEST(Fem, P2InterpolationOrder) {
    std::vector<double> errors;
    for (int n : {11, 21, 41}) {
        const Mesh mesh = build_structured_mesh(Geometry::room(), n);
        errors.push_back(l2_error(mesh, interpolate(mesh, sine_mode), sine_mode));
    }
    for (std::size_t k = 1; k < errors.size(); ++k) {
        const double ratio = errors[k - 1] / errors[k];
        EXPECT_NEAR(ratio, 8.0, 0.15 * 8.0);
    }
}

TEST(Fem, P2ReproducesQuadratics) {
    const Mesh mesh = build_structured_mesh(Geometry::room(), 7);
    const auto f = [](Point p) { return 1.0 + 2.0 * p.x - p.y + 3.0 * p.x * p.y - p.x * p.x + 0.5 * p.y * p.y; };
    const Vector coeffs = interpolate(mesh, f);
    EXPECT_LT(l2_error(mesh, coeffs, f), 1e-14);
    EXPECT_NEAR(evaluate_p2(mesh, coeffs, {0.37, 0.81}), f({0.37, 0.81}), 1e-13);
    EXPECT_THROW(evaluate_p2(mesh, coeffs, {1.5, 0.5}), InvalidParameter);
}
