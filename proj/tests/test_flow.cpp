#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <cstring>
#include <iostream>
#include <sstream>
#include <vector>

#include "roomctl/errors.hpp"
#include "roomctl/flow.hpp"

using namespace roomctl;

namespace {

// Simpson's rule on each P2 boundary edge: exact for the quadratic trace.
double boundary_flux(const Mesh& mesh, const VectorField& v, BoundaryTag tag, double normal_x) {
    double flux = 0.0;
    for (const auto& e : mesh.boundary_edges) {
        if (e.tag != tag) continue;
        const Point a = mesh.p2_nodes[static_cast<std::size_t>(e.nodes[0])];
        const Point b = mesh.p2_nodes[static_cast<std::size_t>(e.nodes[2])];
        const double len = std::hypot(a.x - b.x, a.y - b.y);
        flux += normal_x * len * (v.x[e.nodes[0]] + 4.0 * v.x[e.nodes[1]] + v.x[e.nodes[2]]) / 6.0;
    }
    return flux;
}

Geometry channel() {
    Geometry g;
    g.inlet = {Side::Left, 0.0, 1.0};
    g.outlet = {Side::Right, 0.0, 1.0};
    return g;
}

const Mesh& room_mesh() {
    static const Mesh mesh = build_structured_mesh(Geometry::room(), 41);
    return mesh;
}

const FlowState& room_stokes() {
    static const FlowState state = solve_stokes(room_mesh(), FlowSettings{});
    return state;
}

} // namespace

TEST(Inlet, ProfileValues) {
    EXPECT_NEAR(inlet_profile(0.7, InletProfileMode::Literal)[0], std::exp(-0.0625), 1e-15);
    EXPECT_NEAR(inlet_profile(0.7, InletProfileMode::Literal)[0], 0.9394, 1e-4);
    EXPECT_EQ(inlet_profile(0.5, InletProfileMode::Literal)[0], 0.0);
    EXPECT_EQ(inlet_profile(0.9, InletProfileMode::Literal)[0], 0.0);
    EXPECT_EQ(inlet_profile(0.1)[0], 0.0);
    EXPECT_GT(inlet_profile(0.4)[0], 0.0);
    EXPECT_EQ(inlet_profile(0.25)[0], inlet_profile(0.65, InletProfileMode::Literal)[0]);
    EXPECT_EQ(inlet_profile(0.25)[1], 0.0);
    EXPECT_EQ(inlet_profile(0.25, InletProfileMode::Literal)[0], 0.0);
}

TEST(Stokes, ZeroInletGivesZeroFlow) {
    FlowSettings settings;
    settings.inlet_velocity = [](Point) { return std::array<double, 2>{0.0, 0.0}; };
    const Mesh mesh = build_structured_mesh(Geometry::room(), 11);
    const FlowState s = solve_stokes(mesh, settings);
    EXPECT_EQ(s.velocity.x.norm(), 0.0);
    EXPECT_EQ(s.velocity.y.norm(), 0.0);
    EXPECT_EQ(s.pressure.norm(), 0.0);
}

TEST(Stokes, PoiseuilleIsReproduced) {
    const Mesh mesh = build_structured_mesh(channel(), 11);
    FlowSettings settings;
    settings.inlet_velocity = [](Point p) { return std::array<double, 2>{4.0 * p.y * (1.0 - p.y), 0.0}; };
    for (const auto& s : {solve_stokes(mesh, settings), solve_navier_stokes(mesh, settings, solve_stokes(mesh, settings))}) {
        for (std::size_t i = 0; i < mesh.num_p2(); ++i) {
            const Point p = mesh.p2_nodes[i];
            const auto k = static_cast<Eigen::Index>(i);
            EXPECT_NEAR(s.velocity.x[k], 4.0 * p.y * (1.0 - p.y), 1e-8);
            EXPECT_NEAR(s.velocity.y[k], 0.0, 1e-8);
        }
        // p = 8ν(1 - x) with the do-nothing outlet
        const auto vertices = mesh.p1_nodes();
        for (std::size_t v = 0; v < vertices.size(); ++v) {
            EXPECT_NEAR(s.pressure[static_cast<Eigen::Index>(v)], 8.0 / settings.reynolds * (1.0 - vertices[v].x), 1e-8);
        }
    }
}

TEST(Stokes, MassBalance) {
    const FlowState& s = room_stokes();
    const double in = boundary_flux(room_mesh(), s.velocity, BoundaryTag::Inlet, -1.0);
    const double out = boundary_flux(room_mesh(), s.velocity, BoundaryTag::Outlet, 1.0);
    EXPECT_LT(in, -1e-3);
    EXPECT_NEAR(in + out, 0.0, 1e-10);
    EXPECT_LE(s.divergence_norm, 1e-10);
}

TEST(Stokes, LiteralProfileHasNoInflow) {
    FlowSettings settings;
    settings.profile = InletProfileMode::Literal;
    const FlowState s = solve_stokes(room_mesh(), settings);
    EXPECT_EQ(s.velocity.x.norm(), 0.0);
}

TEST(NavierStokes, SmallReynoldsApproachesStokes) {
    // the convective correction is linear in Re
    std::vector<double> gaps;
    for (double re : {1e-3, 1e-4}) {
        FlowSettings settings;
        settings.reynolds = re;
        const FlowState stokes = solve_stokes(room_mesh(), settings);
        const FlowState ns = solve_navier_stokes(room_mesh(), settings, stokes);
        gaps.push_back(std::max((ns.velocity.x - stokes.velocity.x).cwiseAbs().maxCoeff(),
                                (ns.velocity.y - stokes.velocity.y).cwiseAbs().maxCoeff()));
    }
    EXPECT_LT(gaps[0], 1e-5);
    EXPECT_LT(gaps[1], 1e-6);
    EXPECT_NEAR(gaps[0] / gaps[1], 10.0, 0.5);
}

TEST(NavierStokes, RoomFlowConvergesQuadratically) {
    const Mesh mesh = build_structured_mesh(Geometry::room(), 81);
    const FlowSettings settings;
    const FlowState s = solve_navier_stokes(mesh, settings, solve_stokes(mesh, settings));
    EXPECT_LE(s.iterations, 10);
    EXPECT_LE(s.residual_norm, 1e-10);
    EXPECT_LE(s.divergence_norm, 1e-9);
    const auto& h = s.residual_history;
    ASSERT_GE(h.size(), 3U);
    for (std::size_t k = 2; k < h.size(); ++k) {
        EXPECT_LT(h[k], h[k - 1]) << "step " << k;
    }
    // last step that is not at the rounding floor
    std::size_t k = h.size() - 1;
    if (h[k] < 1e-13) --k;
    EXPECT_GT(std::log(h[k]) / std::log(h[k - 1]), 1.6);
    std::cout << "newton residuals:";
    for (double r : h) std::cout << ' ' << r;
    std::cout << '\n';

    for (std::size_t i = 0; i < mesh.num_p2(); ++i) {
        if (mesh.node_tags[i] == BoundaryTag::Wall) {
            EXPECT_EQ(s.velocity.x[static_cast<Eigen::Index>(i)], 0.0);
            EXPECT_EQ(s.velocity.y[static_cast<Eigen::Index>(i)], 0.0);
        }
    }
}

TEST(NavierStokes, ReportsDivergence) {
    FlowSettings settings;
    settings.max_iterations = 1;
    settings.tolerance = 1e-30;
    try {
        (void)solve_navier_stokes(room_mesh(), settings, room_stokes());
        FAIL() << "expected NewtonDivergence";
    } catch (const NewtonDivergence& e) {
        EXPECT_GT(e.last_residual(), 0.0);
    }
    settings.reynolds = 0.0;
    EXPECT_THROW(solve_stokes(room_mesh(), settings), InvalidParameter);
}

TEST(Restrict, SameMeshIsIdentity) {
    const VectorField& v = room_stokes().velocity;
    const VectorField r = restrict_velocity(v, room_mesh(), room_mesh());
    EXPECT_EQ(std::memcmp(r.x.data(), v.x.data(), sizeof(double) * static_cast<std::size_t>(v.x.size())), 0);
    EXPECT_EQ(std::memcmp(r.y.data(), v.y.data(), sizeof(double) * static_cast<std::size_t>(v.y.size())), 0);
}

TEST(Restrict, NestedMeshesAgreeAtSharedNodes) {
    const Mesh fine = build_structured_mesh(Geometry::room(), 81);
    const VectorField v{interpolate(fine, [](Point p) { return std::sin(3 * p.x) * p.y; }),
                        interpolate(fine, [](Point p) { return p.x - p.y * p.y; })};
    const VectorField r = restrict_velocity(v, fine, room_mesh());
    for (int j = 0; j < 41; ++j) {
        for (int i = 0; i < 41; ++i) {
            EXPECT_EQ(r.x[room_mesh().node_index(i, j)], v.x[fine.node_index(2 * i, 2 * j)]);
            EXPECT_EQ(r.y[room_mesh().node_index(i, j)], v.y[fine.node_index(2 * i, 2 * j)]);
        }
    }
}

TEST(Restrict, ConstantStaysConstant) {
    const Mesh source = build_structured_mesh(Geometry::room(), 21);
    const Mesh target = build_structured_mesh(Geometry::room(), 15);
    const auto n = static_cast<Eigen::Index>(source.num_p2());
    const VectorField r = restrict_velocity({Vector::Constant(n, 0.7), Vector::Constant(n, -2.0)}, source, target);
    EXPECT_LT((r.x.array() - 0.7).abs().maxCoeff(), 1e-14);
    EXPECT_LT((r.y.array() + 2.0).abs().maxCoeff(), 1e-14);
    EXPECT_THROW(restrict_velocity({Vector::Zero(3), Vector::Zero(3)}, source, target), DimensionMismatch);
}

TEST(FlowIo, VelocityCsvRoundTrip) {
    const VectorField& v = room_stokes().velocity;
    std::stringstream buffer;
    write_velocity_csv(room_mesh(), v, buffer);
    const VectorField back = read_velocity_csv(room_mesh(), buffer);
    EXPECT_EQ((back.x - v.x).norm(), 0.0);
    EXPECT_EQ((back.y - v.y).norm(), 0.0);

    std::stringstream other;
    write_velocity_csv(build_structured_mesh(Geometry::room(), 11), {Vector::Zero(121), Vector::Zero(121)}, other);
    EXPECT_ANY_THROW(read_velocity_csv(room_mesh(), other));
}
