#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace roomctl {

enum class Side : std::uint8_t { Left, Right, Bottom, Top };

enum class BoundaryTag : std::uint8_t { Interior, Inlet, Outlet, Wall };

std::string_view to_string(BoundaryTag tag);

/// Straight piece of the rectangle boundary: the part of `side` whose free
/// coordinate lies in [lo, hi].
struct Segment {
    Side side = Side::Left;
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] double length() const { return hi - lo; }
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Axis-aligned rectangular room with one inlet and one outlet segment. The
/// rest of the boundary is wall.
struct Geometry {
    double x0 = 0.0;
    double x1 = 1.0;
    double y0 = 0.0;
    double y1 = 1.0;
    Segment inlet{Side::Left, 0.1, 0.4};
    Segment outlet{Side::Right, 0.5, 0.9};

    /// The room used throughout the experiments: unit square, inlet on the
    /// left wall at 0.1..0.4, outlet on the right wall at 0.5..0.9.
    static Geometry room() { return {}; }

    /// Throws InvalidParameter if the segments are empty, overlap or leave
    /// the boundary.
    void validate() const;

    [[nodiscard]] bool on_boundary(Point p, double tol) const;
    [[nodiscard]] bool strictly_inside(const Segment& s, Point p, double tol) const;
};

struct BoundaryEdge {
    std::array<int, 3> nodes{}; // P2 indices: end, midpoint, end
    BoundaryTag tag = BoundaryTag::Wall;
};

/// Structured right-triangle mesh carrying both the P2 node grid and the P1
/// vertex subset. P2 nodes are row-major by (y, x); vertices are the P2 nodes
/// with even grid indices.
struct Mesh {
    int n = 0;        // P2 nodes per direction
    double h = 0.0;   // P2 node spacing
    Geometry geometry;

    std::vector<Point> p2_nodes;
    std::vector<int> p1_to_p2;   // vertex index -> P2 node index
    std::vector<int> p2_to_p1;   // P2 node index -> vertex index or -1
    std::vector<std::array<int, 6>> triangles; // P2 indices: v0 v1 v2, then midpoints opposite v0 v1 v2
    std::vector<BoundaryEdge> boundary_edges;
    std::vector<BoundaryTag> node_tags; // per P2 node

    [[nodiscard]] std::size_t num_p2() const { return p2_nodes.size(); }
    [[nodiscard]] std::size_t num_p1() const { return p1_to_p2.size(); }
    [[nodiscard]] int vertices_per_direction() const { return (n + 1) / 2; }
    [[nodiscard]] std::array<int, 3> p1_triangle(std::size_t t) const;
    [[nodiscard]] std::vector<Point> p1_nodes() const;
    [[nodiscard]] double signed_area(std::size_t t) const;
    [[nodiscard]] int node_index(int i, int j) const { return j * n + i; }
};

/// Builds the structured mesh with `n` P2 nodes per direction (n odd, n ≥ 5)
/// and classifies its boundary.
Mesh build_structured_mesh(const Geometry& geometry, int n);

/// (Re)computes node and edge tags. A boundary node is inlet/outlet when it
/// lies strictly inside that segment; segment endpoints are wall.
void classify_boundary(Mesh& mesh, const Geometry& geometry);

/// Counts P2 nodes carrying `tag`.
std::size_t count_tag(const Mesh& mesh, BoundaryTag tag);

/// CSV `index,x,y,tag` per P2 node.
void write_nodes_csv(const Mesh& mesh, std::ostream& out);

/// CSV `t0,t1,t2,t3,t4,t5` per triangle.
void write_triangles_csv(const Mesh& mesh, std::ostream& out);

} // namespace roomctl
