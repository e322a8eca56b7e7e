#pragma once

#include <array>
#include <functional>
#include <vector>

#include "roomctl/linalg.hpp"
#include "roomctl/mesh.hpp"

namespace roomctl {

enum class Space { P1, P2 };

/// Quadrature on the reference triangle (0,0),(1,0),(0,1); weights sum to 1/2.
struct QuadratureRule {
    std::vector<std::array<double, 3>> points; // barycentric
    std::vector<double> weights;
    int degree = 0;
};

/// Rules of degree 1 (centroid), 2 (3-point) and 5 (7-point). Other degrees
/// round up to the next available rule; above 5 throws.
const QuadratureRule& triangle_rule(int degree);

/// 3-point Gauss-Legendre on [0,1] (exact to degree 5).
struct LineRule {
    std::array<double, 3> points;
    std::array<double, 3> weights;
};
const LineRule& gauss3();

/// Affine element map with constant barycentric gradients.
struct ElementGeometry {
    std::array<Point, 3> vertices;
    double area = 0.0;
    std::array<std::array<double, 2>, 3> grad_lambda{}; // ∇λ_k

    explicit ElementGeometry(const std::array<Point, 3>& v);
    [[nodiscard]] Point map(const std::array<double, 3>& bary) const;
};

/// P2 basis (vertices, then midpoints opposite v0, v1, v2).
std::array<double, 6> p2_values(const std::array<double, 3>& l);
std::array<std::array<double, 2>, 6> p2_gradients(const ElementGeometry& g, const std::array<double, 3>& l);
std::array<double, 3> p1_values(const std::array<double, 3>& l);

struct VectorField {
    Vector x;
    Vector y;
};

SparseMatrix assemble_mass(const Mesh& mesh, Space space);
SparseMatrix assemble_stiffness(const Mesh& mesh, Space space);

/// N_ij = ∫ (v·∇φ_j) φ_i for P2 temperature and P2 velocity on the same mesh.
SparseMatrix assemble_advection(const Mesh& mesh, const VectorField& velocity);

/// Spatial weight functions used for control, observation and disturbance.
struct ShapeSpec {
    enum class Kind { IndicatorRectangle, BoundaryIndicator, InletFluxProfile };

    Kind kind = Kind::IndicatorRectangle;
    double x0 = 0.0;
    double x1 = 0.0;
    double y0 = 0.0;
    double y1 = 0.0;
    double amplitude = 1.0;
    double profile_shift = 0.0; // InletFluxProfile: evaluated at y + shift

    static ShapeSpec indicator(double x0, double x1, double y0, double y1, double amplitude = 1.0);
    static ShapeSpec boundary_indicator(double amplitude = 1.0);
    static ShapeSpec inlet_flux(double shift);

    /// Pointwise value. Rectangles are closed; boundary kinds ignore position.
    [[nodiscard]] double operator()(Point p) const;
};

/// The smooth bump exp(-1e-4 / ((0.5-s)(0.9-s))^2) on (0.5, 0.9), zero elsewhere.
double inlet_bump(double s);

/// Entries ∫_Ω b φ_i. Elements cut by the rectangle edge are integrated on a
/// refined sub-triangulation.
Vector assemble_load_domain(const Mesh& mesh, const ShapeSpec& shape, Space space = Space::P2);

/// Entries ∫_{Γ_tag} g φ_i over the P2 boundary edges carrying `tag`.
Vector assemble_load_boundary(const Mesh& mesh, BoundaryTag tag, const ShapeSpec& shape);

/// Map between full P2 node numbering and the reduced numbering that drops
/// Dirichlet nodes.
struct DofMap {
    std::vector<int> full_to_reduced; // -1 for eliminated
    std::vector<int> reduced_to_full;

    [[nodiscard]] std::size_t full_size() const { return full_to_reduced.size(); }
    [[nodiscard]] std::size_t reduced_size() const { return reduced_to_full.size(); }

    [[nodiscard]] SparseMatrix reduce(const SparseMatrix& a) const;
    [[nodiscard]] Vector reduce(const Vector& v) const;
    [[nodiscard]] Matrix reduce_rows(const Matrix& m) const;
    /// Zero-filled full vector from reduced coefficients.
    [[nodiscard]] Vector reinflate(const Vector& v) const;
};

/// Eliminates every P2 node carrying `tag`.
DofMap dirichlet_map(const Mesh& mesh, BoundaryTag tag);

struct ReducedOperators {
    std::vector<SparseMatrix> matrices;
    std::vector<Vector> vectors;
    DofMap map;
};

/// Row/column elimination of the `tag` nodes from full-size operators.
ReducedOperators apply_dirichlet(const Mesh& mesh, BoundaryTag tag, const std::vector<SparseMatrix>& matrices,
                                 const std::vector<Vector>& vectors);

/// Nodal interpolation into the given space.
Vector interpolate(const Mesh& mesh, const std::function<double(Point)>& f, Space space = Space::P2);

/// ||u_h - f||_{L²(Ω)} by degree-5 quadrature.
double l2_error(const Mesh& mesh, const Vector& coeffs, const std::function<double(Point)>& f,
                Space space = Space::P2);

/// Value of a P2 field at an arbitrary point of the structured mesh.
double evaluate_p2(const Mesh& mesh, const Vector& coeffs, Point p);

} // namespace roomctl
