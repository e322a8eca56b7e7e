#include "roomctl/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <utility>

#include "roomctl/errors.hpp"

namespace roomctl {

std::string_view to_string(BoundaryTag tag) {
    switch (tag) {
    case BoundaryTag::Interior:
        return "interior";
    case BoundaryTag::Inlet:
        return "inlet";
    case BoundaryTag::Outlet:
        return "outlet";
    case BoundaryTag::Wall:
        return "wall";
    }
    return "unknown";
}

namespace {

struct SegmentEnds {
    Point a;
    Point b;
};

SegmentEnds ends(const Geometry& g, const Segment& s) {
    switch (s.side) {
    case Side::Left:
        return {{g.x0, s.lo}, {g.x0, s.hi}};
    case Side::Right:
        return {{g.x1, s.lo}, {g.x1, s.hi}};
    case Side::Bottom:
        return {{s.lo, g.y0}, {s.hi, g.y0}};
    case Side::Top:
        return {{s.lo, g.y1}, {s.hi, g.y1}};
    }
    return {};
}

bool same_point(Point a, Point b, double tol) {
    return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol;
}

double side_coordinate(const Geometry& g, Side side) {
    switch (side) {
    case Side::Left:
        return g.x0;
    case Side::Right:
        return g.x1;
    case Side::Bottom:
        return g.y0;
    case Side::Top:
        return g.y1;
    }
    return 0.0;
}

bool vertical(Side side) { return side == Side::Left || side == Side::Right; }

} // namespace

void Geometry::validate() const {
    if (!(x1 > x0) || !(y1 > y0)) {
        throw InvalidParameter("geometry: rectangle has non-positive extent");
    }
    for (const Segment* s : {&inlet, &outlet}) {
        if (!(s->length() > 0.0)) {
            throw InvalidParameter("geometry: boundary segment has non-positive length");
        }
        const double lo = vertical(s->side) ? y0 : x0;
        const double hi = vertical(s->side) ? y1 : x1;
        if (s->lo < lo || s->hi > hi) {
            throw InvalidParameter("geometry: boundary segment leaves its side");
        }
    }
    if (inlet.side == outlet.side) {
        if (!(inlet.hi < outlet.lo || outlet.hi < inlet.lo)) {
            throw InvalidParameter("geometry: inlet and outlet intersect");
        }
    } else {
        const auto a = ends(*this, inlet);
        const auto b = ends(*this, outlet);
        const double tol = 1e-12 * std::max(x1 - x0, y1 - y0);
        for (Point p : {a.a, a.b}) {
            for (Point q : {b.a, b.b}) {
                if (same_point(p, q, tol)) {
                    throw InvalidParameter("geometry: inlet and outlet share a corner");
                }
            }
        }
    }
}

bool Geometry::on_boundary(Point p, double tol) const {
    const bool inside_x = p.x >= x0 - tol && p.x <= x1 + tol;
    const bool inside_y = p.y >= y0 - tol && p.y <= y1 + tol;
    if (!inside_x || !inside_y) {
        return false;
    }
    return std::abs(p.x - x0) <= tol || std::abs(p.x - x1) <= tol || std::abs(p.y - y0) <= tol ||
           std::abs(p.y - y1) <= tol;
}

bool Geometry::strictly_inside(const Segment& s, Point p, double tol) const {
    const double fixed = vertical(s.side) ? p.x : p.y;
    const double free = vertical(s.side) ? p.y : p.x;
    if (std::abs(fixed - side_coordinate(*this, s.side)) > tol) {
        return false;
    }
    return free > s.lo + tol && free < s.hi - tol;
}

std::array<int, 3> Mesh::p1_triangle(std::size_t t) const {
    const auto& tri = triangles[t];
    return {p2_to_p1[tri[0]], p2_to_p1[tri[1]], p2_to_p1[tri[2]]};
}

std::vector<Point> Mesh::p1_nodes() const {
    std::vector<Point> out;
    out.reserve(p1_to_p2.size());
    for (int idx : p1_to_p2) {
        out.push_back(p2_nodes[idx]);
    }
    return out;
}

double Mesh::signed_area(std::size_t t) const {
    const auto& tri = triangles[t];
    const Point a = p2_nodes[tri[0]];
    const Point b = p2_nodes[tri[1]];
    const Point c = p2_nodes[tri[2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

Mesh build_structured_mesh(const Geometry& geometry, int n) {
    if (n < 5 || n % 2 == 0) {
        throw InvalidParameter("build_structured_mesh: node count per direction must be odd and >= 5, got " +
                               std::to_string(n));
    }
    geometry.validate();
    if (std::abs((geometry.x1 - geometry.x0) - (geometry.y1 - geometry.y0)) > 1e-14) {
        throw InvalidParameter("build_structured_mesh: uniform spacing requires a square domain");
    }

    Mesh mesh;
    mesh.n = n;
    mesh.geometry = geometry;
    mesh.h = (geometry.x1 - geometry.x0) / (n - 1);

    mesh.p2_nodes.reserve(static_cast<std::size_t>(n) * n);
    mesh.p2_to_p1.assign(static_cast<std::size_t>(n) * n, -1);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            // Exact endpoints avoid drift in the last column/row.
            const double x = i == n - 1 ? geometry.x1 : geometry.x0 + i * mesh.h;
            const double y = j == n - 1 ? geometry.y1 : geometry.y0 + j * mesh.h;
            mesh.p2_nodes.push_back({x, y});
            if (i % 2 == 0 && j % 2 == 0) {
                mesh.p2_to_p1[mesh.node_index(i, j)] = static_cast<int>(mesh.p1_to_p2.size());
                mesh.p1_to_p2.push_back(mesh.node_index(i, j));
            }
        }
    }

    const int cells = (n - 1) / 2;
    mesh.triangles.reserve(static_cast<std::size_t>(2 * cells * cells));
    for (int cj = 0; cj < cells; ++cj) {
        for (int ci = 0; ci < cells; ++ci) {
            const int i = 2 * ci;
            const int j = 2 * cj;
            const int bl = mesh.node_index(i, j);
            const int br = mesh.node_index(i + 2, j);
            const int tr = mesh.node_index(i + 2, j + 2);
            const int tl = mesh.node_index(i, j + 2);
            const int mid_bottom = mesh.node_index(i + 1, j);
            const int mid_right = mesh.node_index(i + 2, j + 1);
            const int mid_top = mesh.node_index(i + 1, j + 2);
            const int mid_left = mesh.node_index(i, j + 1);
            const int mid_diag = mesh.node_index(i + 1, j + 1);
            // (bl, br, tr): opposite bl is br-tr, opposite br is tr-bl, opposite tr is bl-br
            mesh.triangles.push_back({bl, br, tr, mid_right, mid_diag, mid_bottom});
            // (bl, tr, tl): opposite bl is tr-tl, opposite tr is tl-bl, opposite tl is bl-tr
            mesh.triangles.push_back({bl, tr, tl, mid_top, mid_left, mid_diag});
        }
    }

    classify_boundary(mesh, geometry);
    return mesh;
}

void classify_boundary(Mesh& mesh, const Geometry& geometry) {
    const double tol = 1e-9 * mesh.h;

    std::map<std::pair<int, int>, std::pair<int, int>> edge_count; // key -> (count, midpoint)
    for (const auto& tri : mesh.triangles) {
        const std::array<std::array<int, 3>, 3> local{{{tri[1], tri[2], tri[3]},
                                                       {tri[2], tri[0], tri[4]},
                                                       {tri[0], tri[1], tri[5]}}};
        for (const auto& e : local) {
            const auto key = std::minmax(e[0], e[1]);
            auto& slot = edge_count[{key.first, key.second}];
            slot.first += 1;
            slot.second = e[2];
        }
    }

    mesh.boundary_edges.clear();
    mesh.node_tags.assign(mesh.p2_nodes.size(), BoundaryTag::Interior);

    auto tag_of = [&](Point p) {
        if (geometry.strictly_inside(geometry.inlet, p, tol)) {
            return BoundaryTag::Inlet;
        }
        if (geometry.strictly_inside(geometry.outlet, p, tol)) {
            return BoundaryTag::Outlet;
        }
        return BoundaryTag::Wall;
    };

    for (const auto& [key, slot] : edge_count) {
        if (slot.first > 2) {
            throw ConsistencyError("classify_boundary: edge shared by more than two triangles");
        }
        if (slot.first != 1) {
            continue;
        }
        BoundaryEdge edge;
        edge.nodes = {key.first, slot.second, key.second};
        for (int node : edge.nodes) {
            if (!geometry.on_boundary(mesh.p2_nodes[node], tol)) {
                throw ConsistencyError("classify_boundary: boundary edge node " + std::to_string(node) +
                                       " is not on the domain boundary");
            }
            mesh.node_tags[node] = tag_of(mesh.p2_nodes[node]);
        }
        edge.tag = tag_of(mesh.p2_nodes[slot.second]);
        mesh.boundary_edges.push_back(edge);
    }
}

std::size_t count_tag(const Mesh& mesh, BoundaryTag tag) {
    return static_cast<std::size_t>(std::count(mesh.node_tags.begin(), mesh.node_tags.end(), tag));
}

void write_nodes_csv(const Mesh& mesh, std::ostream& out) {
    const auto old = out.precision(17);
    out << "index,x,y,tag\n";
    for (std::size_t i = 0; i < mesh.p2_nodes.size(); ++i) {
        out << i << ',' << mesh.p2_nodes[i].x << ',' << mesh.p2_nodes[i].y << ',' << to_string(mesh.node_tags[i])
            << '\n';
    }
    out.precision(old);
}

void write_triangles_csv(const Mesh& mesh, std::ostream& out) {
    out << "t0,t1,t2,t3,t4,t5\n";
    for (const auto& tri : mesh.triangles) {
        out << tri[0] << ',' << tri[1] << ',' << tri[2] << ',' << tri[3] << ',' << tri[4] << ',' << tri[5] << '\n';
    }
}

} // namespace roomctl
