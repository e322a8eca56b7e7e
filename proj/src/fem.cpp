#include "roomctl/fem.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "roomctl/errors.hpp"

namespace roomctl {

const QuadratureRule& triangle_rule(int degree) {
    static const QuadratureRule centroid{{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}}, {0.5}, 1};
    static const QuadratureRule three{{{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
                                       {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
                                       {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}},
                                      {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0},
                                      2};
    static const QuadratureRule seven = [] {
        const double r15 = std::sqrt(15.0);
        const double a = (6.0 - r15) / 21.0;
        const double b = (6.0 + r15) / 21.0;
        const double wa = (155.0 - r15) / 2400.0;
        const double wb = (155.0 + r15) / 2400.0;
        QuadratureRule r;
        r.degree = 5;
        r.points = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
                    {a, a, 1.0 - 2.0 * a},
                    {a, 1.0 - 2.0 * a, a},
                    {1.0 - 2.0 * a, a, a},
                    {b, b, 1.0 - 2.0 * b},
                    {b, 1.0 - 2.0 * b, b},
                    {1.0 - 2.0 * b, b, b}};
        r.weights = {9.0 / 80.0, wa, wa, wa, wb, wb, wb};
        return r;
    }();
    if (degree <= 1) {
        return centroid;
    }
    if (degree == 2) {
        return three;
    }
    if (degree <= 5) {
        return seven;
    }
    throw InvalidParameter("triangle_rule: no rule of degree " + std::to_string(degree));
}

const LineRule& gauss3() {
    static const LineRule rule = [] {
        const double d = 0.5 * std::sqrt(0.6);
        return LineRule{{0.5 - d, 0.5, 0.5 + d}, {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0}};
    }();
    return rule;
}

ElementGeometry::ElementGeometry(const std::array<Point, 3>& v) : vertices(v) {
    const double det = (v[1].x - v[0].x) * (v[2].y - v[0].y) - (v[2].x - v[0].x) * (v[1].y - v[0].y);
    area = 0.5 * std::abs(det);
    // λ_k = (a_k + b_k x + c_k y)/det with cyclic (k, k+1, k+2)
    for (int k = 0; k < 3; ++k) {
        const Point& p = v[(k + 1) % 3];
        const Point& q = v[(k + 2) % 3];
        grad_lambda[k] = {(p.y - q.y) / det, (q.x - p.x) / det};
    }
}

Point ElementGeometry::map(const std::array<double, 3>& l) const {
    return {l[0] * vertices[0].x + l[1] * vertices[1].x + l[2] * vertices[2].x,
            l[0] * vertices[0].y + l[1] * vertices[1].y + l[2] * vertices[2].y};
}

std::array<double, 6> p2_values(const std::array<double, 3>& l) {
    return {l[0] * (2.0 * l[0] - 1.0), l[1] * (2.0 * l[1] - 1.0), l[2] * (2.0 * l[2] - 1.0),
            4.0 * l[1] * l[2],         4.0 * l[2] * l[0],         4.0 * l[0] * l[1]};
}

std::array<std::array<double, 2>, 6> p2_gradients(const ElementGeometry& g, const std::array<double, 3>& l) {
    std::array<std::array<double, 2>, 6> out{};
    const auto& gl = g.grad_lambda;
    for (int k = 0; k < 3; ++k) {
        out[k] = {(4.0 * l[k] - 1.0) * gl[k][0], (4.0 * l[k] - 1.0) * gl[k][1]};
    }
    constexpr std::array<std::array<int, 2>, 3> pairs{{{1, 2}, {2, 0}, {0, 1}}};
    for (int m = 0; m < 3; ++m) {
        const int a = pairs[m][0];
        const int b = pairs[m][1];
        out[3 + m] = {4.0 * (l[a] * gl[b][0] + l[b] * gl[a][0]), 4.0 * (l[a] * gl[b][1] + l[b] * gl[a][1])};
    }
    return out;
}

std::array<double, 3> p1_values(const std::array<double, 3>& l) { return l; }

namespace {

ElementGeometry element(const Mesh& mesh, std::size_t t) {
    const auto& tri = mesh.triangles[t];
    return ElementGeometry({mesh.p2_nodes[tri[0]], mesh.p2_nodes[tri[1]], mesh.p2_nodes[tri[2]]});
}

std::vector<int> element_dofs(const Mesh& mesh, std::size_t t, Space space) {
    if (space == Space::P2) {
        const auto& tri = mesh.triangles[t];
        return {tri.begin(), tri.end()};
    }
    const auto p1 = mesh.p1_triangle(t);
    return {p1.begin(), p1.end()};
}

std::size_t space_size(const Mesh& mesh, Space space) {
    return space == Space::P2 ? mesh.num_p2() : mesh.num_p1();
}

// Values and gradients of the space's basis at one barycentric point.
struct BasisAt {
    std::vector<double> value;
    std::vector<std::array<double, 2>> grad;
};

BasisAt basis_at(const ElementGeometry& g, const std::array<double, 3>& l, Space space) {
    BasisAt b;
    if (space == Space::P2) {
        const auto v = p2_values(l);
        const auto d = p2_gradients(g, l);
        b.value.assign(v.begin(), v.end());
        b.grad.assign(d.begin(), d.end());
    } else {
        b.value.assign(l.begin(), l.end());
        b.grad.assign(g.grad_lambda.begin(), g.grad_lambda.end());
    }
    return b;
}

template <class ElementKernel>
SparseMatrix assemble_bilinear(const Mesh& mesh, Space space, ElementKernel&& kernel) {
    const std::size_t n = space_size(mesh, space);
    const std::size_t local = space == Space::P2 ? 6 : 3;
    std::vector<Triplet> entries;
    entries.reserve(mesh.triangles.size() * local * local);
    Matrix ke(local, local);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto dofs = element_dofs(mesh, t, space);
        ke.setZero();
        kernel(t, ke);
        for (std::size_t i = 0; i < local; ++i) {
            for (std::size_t j = 0; j < local; ++j) {
                entries.emplace_back(dofs[i], dofs[j], ke(i, j));
            }
        }
    }
    SparseMatrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    a.setFromTriplets(entries.begin(), entries.end());
    a.prune(0.0);
    a.makeCompressed();
    return a;
}

} // namespace

SparseMatrix assemble_mass(const Mesh& mesh, Space space) {
    const auto& rule = triangle_rule(space == Space::P2 ? 5 : 2);
    return assemble_bilinear(mesh, space, [&](std::size_t t, Matrix& ke) {
        const ElementGeometry g = element(mesh, t);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const BasisAt b = basis_at(g, rule.points[q], space);
            const double w = 2.0 * g.area * rule.weights[q];
            for (Eigen::Index i = 0; i < ke.rows(); ++i) {
                for (Eigen::Index j = 0; j < ke.cols(); ++j) {
                    ke(i, j) += w * b.value[i] * b.value[j];
                }
            }
        }
    });
}

SparseMatrix assemble_stiffness(const Mesh& mesh, Space space) {
    const auto& rule = triangle_rule(space == Space::P2 ? 2 : 1);
    return assemble_bilinear(mesh, space, [&](std::size_t t, Matrix& ke) {
        const ElementGeometry g = element(mesh, t);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const BasisAt b = basis_at(g, rule.points[q], space);
            const double w = 2.0 * g.area * rule.weights[q];
            for (Eigen::Index i = 0; i < ke.rows(); ++i) {
                for (Eigen::Index j = 0; j < ke.cols(); ++j) {
                    ke(i, j) += w * (b.grad[i][0] * b.grad[j][0] + b.grad[i][1] * b.grad[j][1]);
                }
            }
        }
    });
}

SparseMatrix assemble_advection(const Mesh& mesh, const VectorField& velocity) {
    const auto n = static_cast<Eigen::Index>(mesh.num_p2());
    if (velocity.x.size() != n || velocity.y.size() != n) {
        throw DimensionMismatch("assemble_advection: velocity field does not match the P2 node count");
    }
    const auto& rule = triangle_rule(5);
    return assemble_bilinear(mesh, Space::P2, [&](std::size_t t, Matrix& ke) {
        const ElementGeometry g = element(mesh, t);
        const auto& tri = mesh.triangles[t];
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto phi = p2_values(rule.points[q]);
            const auto dphi = p2_gradients(g, rule.points[q]);
            double vx = 0.0;
            double vy = 0.0;
            for (int k = 0; k < 6; ++k) {
                vx += velocity.x[tri[k]] * phi[k];
                vy += velocity.y[tri[k]] * phi[k];
            }
            const double w = 2.0 * g.area * rule.weights[q];
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 6; ++j) {
                    ke(i, j) += w * (vx * dphi[j][0] + vy * dphi[j][1]) * phi[i];
                }
            }
        }
    });
}

ShapeSpec ShapeSpec::indicator(double x0, double x1, double y0, double y1, double amplitude) {
    ShapeSpec s;
    s.kind = Kind::IndicatorRectangle;
    s.x0 = x0;
    s.x1 = x1;
    s.y0 = y0;
    s.y1 = y1;
    s.amplitude = amplitude;
    return s;
}

ShapeSpec ShapeSpec::boundary_indicator(double amplitude) {
    ShapeSpec s;
    s.kind = Kind::BoundaryIndicator;
    s.amplitude = amplitude;
    return s;
}

ShapeSpec ShapeSpec::inlet_flux(double shift) {
    ShapeSpec s;
    s.kind = Kind::InletFluxProfile;
    s.profile_shift = shift;
    return s;
}

double inlet_bump(double s) {
    if (s <= 0.5 || s >= 0.9) {
        return 0.0;
    }
    const double d = (0.5 - s) * (0.9 - s);
    return std::exp(-0.0001 / (d * d));
}

double ShapeSpec::operator()(Point p) const {
    switch (kind) {
    case Kind::IndicatorRectangle:
        return (p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1) ? amplitude : 0.0;
    case Kind::BoundaryIndicator:
        return amplitude;
    case Kind::InletFluxProfile:
        return amplitude * inlet_bump(p.y + profile_shift);
    }
    return 0.0;
}

namespace {

enum class Overlap { None, Full, Partial };

Overlap rectangle_overlap(const ShapeSpec& s, const std::array<Point, 3>& v) {
    double xmin = v[0].x, xmax = v[0].x, ymin = v[0].y, ymax = v[0].y;
    int inside = 0;
    for (const Point& p : v) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
        inside += (p.x >= s.x0 && p.x <= s.x1 && p.y >= s.y0 && p.y <= s.y1) ? 1 : 0;
    }
    if (inside == 3) {
        return Overlap::Full;
    }
    // Touching along an edge only contributes zero measure.
    if (xmax <= s.x0 || xmin >= s.x1 || ymax <= s.y0 || ymin >= s.y1) {
        return Overlap::None;
    }
    return Overlap::Partial;
}

// Integrates shape * basis over the barycentric sub-triangle `sub` of element g.
void integrate_sub(const ElementGeometry& g, const std::array<std::array<double, 3>, 3>& sub, int depth,
                   const ShapeSpec& shape, Space space, std::vector<double>& acc) {
    if (depth > 0) {
        std::array<std::array<double, 3>, 3> mid{};
        for (int k = 0; k < 3; ++k) {
            for (int c = 0; c < 3; ++c) {
                mid[k][c] = 0.5 * (sub[(k + 1) % 3][c] + sub[(k + 2) % 3][c]);
            }
        }
        integrate_sub(g, {sub[0], mid[2], mid[1]}, depth - 1, shape, space, acc);
        integrate_sub(g, {mid[2], sub[1], mid[0]}, depth - 1, shape, space, acc);
        integrate_sub(g, {mid[1], mid[0], sub[2]}, depth - 1, shape, space, acc);
        integrate_sub(g, {mid[0], mid[1], mid[2]}, depth - 1, shape, space, acc);
        return;
    }
    const auto& rule = triangle_rule(5);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
        std::array<double, 3> l{};
        for (int c = 0; c < 3; ++c) {
            l[c] = rule.points[q][0] * sub[0][c] + rule.points[q][1] * sub[1][c] + rule.points[q][2] * sub[2][c];
        }
        const double value = shape(g.map(l));
        if (value == 0.0) {
            continue;
        }
        const BasisAt b = basis_at(g, l, space);
        for (std::size_t i = 0; i < b.value.size(); ++i) {
            acc[i] += rule.weights[q] * value * b.value[i];
        }
    }
}

} // namespace

Vector assemble_load_domain(const Mesh& mesh, const ShapeSpec& shape, Space space) {
    if (shape.kind != ShapeSpec::Kind::IndicatorRectangle) {
        throw InvalidParameter("assemble_load_domain: shape must be a rectangle indicator");
    }
    constexpr int refine_depth = 4;
    Vector load = Vector::Zero(static_cast<Eigen::Index>(space_size(mesh, space)));
    const auto& rule = triangle_rule(5);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const ElementGeometry g = element(mesh, t);
        const Overlap o = rectangle_overlap(shape, g.vertices);
        if (o == Overlap::None) {
            continue;
        }
        const auto dofs = element_dofs(mesh, t, space);
        std::vector<double> local(dofs.size(), 0.0);
        if (o == Overlap::Full) {
            for (std::size_t q = 0; q < rule.points.size(); ++q) {
                const BasisAt b = basis_at(g, rule.points[q], space);
                for (std::size_t i = 0; i < dofs.size(); ++i) {
                    local[i] += rule.weights[q] * shape.amplitude * b.value[i];
                }
            }
        } else {
            const std::array<std::array<double, 3>, 3> whole{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
            integrate_sub(g, whole, refine_depth, shape, space, local);
            const double sub_area = 1.0 / static_cast<double>(1 << (2 * refine_depth));
            for (double& v : local) {
                v *= sub_area;
            }
        }
        for (std::size_t i = 0; i < dofs.size(); ++i) {
            load[dofs[i]] += 2.0 * g.area * local[i];
        }
    }
    if (load.isZero(0.0)) {
        std::clog << "warning: load shape [" << shape.x0 << ',' << shape.x1 << "]x[" << shape.y0 << ','
                  << shape.y1 << "] has empty support on the mesh\n";
    }
    return load;
}

Vector assemble_load_boundary(const Mesh& mesh, BoundaryTag tag, const ShapeSpec& shape) {
    if (tag == BoundaryTag::Interior) {
        throw InvalidParameter("assemble_load_boundary: interior is not a boundary tag");
    }
    const bool present = std::any_of(mesh.boundary_edges.begin(), mesh.boundary_edges.end(),
                                     [&](const BoundaryEdge& e) { return e.tag == tag; });
    if (!present) {
        throw InvalidParameter("assemble_load_boundary: no boundary edge tagged " + std::string(to_string(tag)));
    }
    Vector load = Vector::Zero(static_cast<Eigen::Index>(mesh.num_p2()));
    const auto& rule = gauss3();
    for (const auto& e : mesh.boundary_edges) {
        if (e.tag != tag) {
            continue;
        }
        const Point a = mesh.p2_nodes[e.nodes[0]];
        const Point b = mesh.p2_nodes[e.nodes[2]];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        for (int q = 0; q < 3; ++q) {
            const double s = rule.points[q];
            const Point p{a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)};
            // 1-D quadratic Lagrange basis at s for nodes (0, 1/2, 1)
            const std::array<double, 3> phi{(1.0 - s) * (1.0 - 2.0 * s), 4.0 * s * (1.0 - s), s * (2.0 * s - 1.0)};
            const double w = rule.weights[q] * len * shape(p);
            for (int k = 0; k < 3; ++k) {
                load[e.nodes[k]] += w * phi[k];
            }
        }
    }
    return load;
}

SparseMatrix DofMap::reduce(const SparseMatrix& a) const {
    if (static_cast<std::size_t>(a.rows()) != full_size() || static_cast<std::size_t>(a.cols()) != full_size()) {
        throw DimensionMismatch("DofMap::reduce: matrix does not match the full numbering");
    }
    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(a.nonZeros()));
    for (Eigen::Index col = 0; col < a.outerSize(); ++col) {
        const int rc = full_to_reduced[col];
        if (rc < 0) {
            continue;
        }
        for (SparseMatrix::InnerIterator it(a, col); it; ++it) {
            const int rr = full_to_reduced[it.row()];
            if (rr >= 0) {
                entries.emplace_back(rr, rc, it.value());
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(reduced_size());
    SparseMatrix out(n, n);
    out.setFromTriplets(entries.begin(), entries.end());
    out.makeCompressed();
    return out;
}

Vector DofMap::reduce(const Vector& v) const {
    if (static_cast<std::size_t>(v.size()) != full_size()) {
        throw DimensionMismatch("DofMap::reduce: vector does not match the full numbering");
    }
    Vector out(static_cast<Eigen::Index>(reduced_size()));
    for (std::size_t i = 0; i < reduced_size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = v[reduced_to_full[i]];
    }
    return out;
}

Matrix DofMap::reduce_rows(const Matrix& m) const {
    if (static_cast<std::size_t>(m.rows()) != full_size()) {
        throw DimensionMismatch("DofMap::reduce_rows: row count does not match the full numbering");
    }
    Matrix out(static_cast<Eigen::Index>(reduced_size()), m.cols());
    for (std::size_t i = 0; i < reduced_size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = m.row(reduced_to_full[i]);
    }
    return out;
}

Vector DofMap::reinflate(const Vector& v) const {
    if (static_cast<std::size_t>(v.size()) != reduced_size()) {
        throw DimensionMismatch("DofMap::reinflate: vector does not match the reduced numbering");
    }
    Vector out = Vector::Zero(static_cast<Eigen::Index>(full_size()));
    for (std::size_t i = 0; i < reduced_size(); ++i) {
        out[reduced_to_full[i]] = v[static_cast<Eigen::Index>(i)];
    }
    return out;
}

DofMap dirichlet_map(const Mesh& mesh, BoundaryTag tag) {
    DofMap map;
    map.full_to_reduced.assign(mesh.num_p2(), -1);
    for (std::size_t i = 0; i < mesh.num_p2(); ++i) {
        if (mesh.node_tags[i] != tag) {
            map.full_to_reduced[i] = static_cast<int>(map.reduced_to_full.size());
            map.reduced_to_full.push_back(static_cast<int>(i));
        }
    }
    if (map.reduced_to_full.empty()) {
        throw InvalidParameter("dirichlet_map: the Dirichlet tag covers every degree of freedom");
    }
    return map;
}

ReducedOperators apply_dirichlet(const Mesh& mesh, BoundaryTag tag, const std::vector<SparseMatrix>& matrices,
                                 const std::vector<Vector>& vectors) {
    ReducedOperators out;
    out.map = dirichlet_map(mesh, tag);
    for (const auto& a : matrices) {
        out.matrices.push_back(out.map.reduce(a));
    }
    for (const auto& v : vectors) {
        out.vectors.push_back(out.map.reduce(v));
    }
    return out;
}

Vector interpolate(const Mesh& mesh, const std::function<double(Point)>& f, Space space) {
    if (space == Space::P2) {
        Vector out(static_cast<Eigen::Index>(mesh.num_p2()));
        for (std::size_t i = 0; i < mesh.num_p2(); ++i) {
            out[static_cast<Eigen::Index>(i)] = f(mesh.p2_nodes[i]);
        }
        return out;
    }
    Vector out(static_cast<Eigen::Index>(mesh.num_p1()));
    for (std::size_t i = 0; i < mesh.num_p1(); ++i) {
        out[static_cast<Eigen::Index>(i)] = f(mesh.p2_nodes[mesh.p1_to_p2[i]]);
    }
    return out;
}

double l2_error(const Mesh& mesh, const Vector& coeffs, const std::function<double(Point)>& f, Space space) {
    const auto& rule = triangle_rule(5);
    double sum = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const ElementGeometry g = element(mesh, t);
        const auto dofs = element_dofs(mesh, t, space);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const BasisAt b = basis_at(g, rule.points[q], space);
            double uh = 0.0;
            for (std::size_t i = 0; i < dofs.size(); ++i) {
                uh += coeffs[dofs[i]] * b.value[i];
            }
            const double d = uh - f(g.map(rule.points[q]));
            sum += 2.0 * g.area * rule.weights[q] * d * d;
        }
    }
    return std::sqrt(sum);
}

double evaluate_p2(const Mesh& mesh, const Vector& coeffs, Point p) {
    const Geometry& geo = mesh.geometry;
    const double tol = 1e-12;
    if (p.x < geo.x0 - tol || p.x > geo.x1 + tol || p.y < geo.y0 - tol || p.y > geo.y1 + tol) {
        throw InvalidParameter("evaluate_p2: point outside the mesh");
    }
    const int cells = (mesh.n - 1) / 2;
    const double cell = 2.0 * mesh.h;
    const double sx = (p.x - geo.x0) / cell;
    const double sy = (p.y - geo.y0) / cell;
    const int ci = std::clamp(static_cast<int>(std::floor(sx)), 0, cells - 1);
    const int cj = std::clamp(static_cast<int>(std::floor(sy)), 0, cells - 1);
    const bool upper = (sy - cj) > (sx - ci);
    const std::size_t t = 2 * static_cast<std::size_t>(cj * cells + ci) + (upper ? 1 : 0);
    const ElementGeometry g = element(mesh, t);
    std::array<double, 3> l{};
    // λ_k(p) = λ_k(v0) + ∇λ_k·(p - v0); λ_k(v0) = δ_k0
    for (int k = 0; k < 3; ++k) {
        l[k] = (k == 0 ? 1.0 : 0.0) + g.grad_lambda[k][0] * (p.x - g.vertices[0].x) +
               g.grad_lambda[k][1] * (p.y - g.vertices[0].y);
    }
    const auto phi = p2_values(l);
    const auto& tri = mesh.triangles[t];
    double value = 0.0;
    for (int k = 0; k < 6; ++k) {
        value += coeffs[tri[k]] * phi[k];
    }
    return value;
}

} // namespace roomctl
