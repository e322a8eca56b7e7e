#include "roomctl/flow.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <Eigen/SparseLU>

namespace roomctl {

std::array<double, 2> inlet_profile(double y, InletProfileMode mode) {
    const double s = mode == InletProfileMode::Remapped ? y + kInletRemapShift : y;
    return {inlet_bump(s), 0.0};
}

namespace {

// Full unknown vector layout: [ux (N2) | uy (N2) | p (N1)].
struct FlowLayout {
    Eigen::Index n2 = 0;
    Eigen::Index n1 = 0;
    std::vector<int> free_of_full; // -1 for Dirichlet velocity dofs
    std::vector<int> full_of_free;

    [[nodiscard]] Eigen::Index size() const { return 2 * n2 + n1; }
};

FlowLayout make_layout(const Mesh& mesh) {
    FlowLayout layout;
    layout.n2 = static_cast<Eigen::Index>(mesh.num_p2());
    layout.n1 = static_cast<Eigen::Index>(mesh.num_p1());
    layout.free_of_full.assign(static_cast<std::size_t>(layout.size()), -1);
    for (Eigen::Index k = 0; k < layout.size(); ++k) {
        bool fixed = false;
        if (k < 2 * layout.n2) {
            const BoundaryTag tag = mesh.node_tags[k % layout.n2];
            fixed = tag == BoundaryTag::Wall || tag == BoundaryTag::Inlet;
        }
        if (!fixed) {
            layout.free_of_full[k] = static_cast<int>(layout.full_of_free.size());
            layout.full_of_free.push_back(static_cast<int>(k));
        }
    }
    return layout;
}

std::function<std::array<double, 2>(Point)> inlet_function(const FlowSettings& settings) {
    if (settings.inlet_velocity) {
        return settings.inlet_velocity;
    }
    const InletProfileMode mode = settings.profile;
    return [mode](Point p) { return inlet_profile(p.y, mode); };
}

// Boundary data on Dirichlet nodes, zero elsewhere.
Vector lifted_state(const Mesh& mesh, const FlowLayout& layout, const FlowSettings& settings) {
    Vector u = Vector::Zero(layout.size());
    const auto inlet = inlet_function(settings);
    for (Eigen::Index i = 0; i < layout.n2; ++i) {
        if (mesh.node_tags[i] == BoundaryTag::Inlet) {
            const auto v = inlet(mesh.p2_nodes[i]);
            u[i] = v[0];
            u[layout.n2 + i] = v[1];
        }
    }
    return u;
}

struct Assembled {
    Vector residual;     // full size
    SparseMatrix jacobian; // full size
};

Assembled assemble_flow(const Mesh& mesh, const FlowLayout& layout, const Vector& state, double nu,
                        bool convection, bool with_jacobian) {
    const auto& rule = triangle_rule(5);
    const Eigen::Index n2 = layout.n2;
    const Eigen::Index off_p = 2 * n2;
    Assembled out;
    out.residual = Vector::Zero(layout.size());
    std::vector<Triplet> entries;
    if (with_jacobian) {
        entries.reserve(mesh.triangles.size() * 15 * 15);
    }

    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        const auto p1 = mesh.p1_triangle(t);
        const ElementGeometry g({mesh.p2_nodes[tri[0]], mesh.p2_nodes[tri[1]], mesh.p2_nodes[tri[2]]});

        std::array<Eigen::Index, 15> dofs{};
        for (int k = 0; k < 6; ++k) {
            dofs[k] = tri[k];
            dofs[6 + k] = n2 + tri[k];
        }
        for (int k = 0; k < 3; ++k) {
            dofs[12 + k] = off_p + p1[k];
        }
        Eigen::Matrix<double, 15, 1> re = Eigen::Matrix<double, 15, 1>::Zero();
        Eigen::Matrix<double, 15, 15> ke = Eigen::Matrix<double, 15, 15>::Zero();

        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto& l = rule.points[q];
            const auto phi = p2_values(l);
            const auto dphi = p2_gradients(g, l);
            const double w = 2.0 * g.area * rule.weights[q];

            double ux = 0, uy = 0, dux_dx = 0, dux_dy = 0, duy_dx = 0, duy_dy = 0, p = 0;
            for (int k = 0; k < 6; ++k) {
                const double vx = state[tri[k]];
                const double vy = state[n2 + tri[k]];
                ux += vx * phi[k];
                uy += vy * phi[k];
                dux_dx += vx * dphi[k][0];
                dux_dy += vx * dphi[k][1];
                duy_dx += vy * dphi[k][0];
                duy_dy += vy * dphi[k][1];
            }
            for (int k = 0; k < 3; ++k) {
                p += state[off_p + p1[k]] * l[k];
            }
            const double div = dux_dx + duy_dy;
            const double conv_x = convection ? ux * dux_dx + uy * dux_dy : 0.0;
            const double conv_y = convection ? ux * duy_dx + uy * duy_dy : 0.0;

            for (int i = 0; i < 6; ++i) {
                re[i] += w * (nu * (dux_dx * dphi[i][0] + dux_dy * dphi[i][1]) + conv_x * phi[i] - p * dphi[i][0]);
                re[6 + i] +=
                    w * (nu * (duy_dx * dphi[i][0] + duy_dy * dphi[i][1]) + conv_y * phi[i] - p * dphi[i][1]);
            }
            for (int k = 0; k < 3; ++k) {
                re[12 + k] -= w * l[k] * div;
            }

            if (!with_jacobian) {
                continue;
            }
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 6; ++j) {
                    const double diffusion = nu * (dphi[j][0] * dphi[i][0] + dphi[j][1] * dphi[i][1]);
                    double adv = 0.0;
                    double mass = 0.0;
                    if (convection) {
                        adv = (ux * dphi[j][0] + uy * dphi[j][1]) * phi[i];
                        mass = phi[j] * phi[i];
                    }
                    ke(i, j) += w * (diffusion + adv + dux_dx * mass);
                    ke(i, 6 + j) += w * dux_dy * mass;
                    ke(6 + i, j) += w * duy_dx * mass;
                    ke(6 + i, 6 + j) += w * (diffusion + adv + duy_dy * mass);
                }
                for (int k = 0; k < 3; ++k) {
                    ke(i, 12 + k) -= w * l[k] * dphi[i][0];
                    ke(6 + i, 12 + k) -= w * l[k] * dphi[i][1];
                    ke(12 + k, i) -= w * l[k] * dphi[i][0];
                    ke(12 + k, 6 + i) -= w * l[k] * dphi[i][1];
                }
            }
        }

        for (int i = 0; i < 15; ++i) {
            out.residual[dofs[i]] += re[i];
        }
        if (with_jacobian) {
            for (int i = 0; i < 15; ++i) {
                for (int j = 0; j < 15; ++j) {
                    if (ke(i, j) != 0.0) {
                        entries.emplace_back(dofs[i], dofs[j], ke(i, j));
                    }
                }
            }
        }
    }
    if (with_jacobian) {
        out.jacobian.resize(layout.size(), layout.size());
        out.jacobian.setFromTriplets(entries.begin(), entries.end());
        out.jacobian.makeCompressed();
    }
    return out;
}

Vector restrict_to_free(const FlowLayout& layout, const Vector& full) {
    Vector out(static_cast<Eigen::Index>(layout.full_of_free.size()));
    for (std::size_t i = 0; i < layout.full_of_free.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = full[layout.full_of_free[i]];
    }
    return out;
}

SparseMatrix restrict_to_free(const FlowLayout& layout, const SparseMatrix& a) {
    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(a.nonZeros()));
    for (Eigen::Index col = 0; col < a.outerSize(); ++col) {
        const int fc = layout.free_of_full[col];
        if (fc < 0) {
            continue;
        }
        for (SparseMatrix::InnerIterator it(a, col); it; ++it) {
            const int fr = layout.free_of_full[it.row()];
            if (fr >= 0) {
                entries.emplace_back(fr, fc, it.value());
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(layout.full_of_free.size());
    SparseMatrix out(n, n);
    out.setFromTriplets(entries.begin(), entries.end());
    out.makeCompressed();
    return out;
}

FlowState unpack(const FlowLayout& layout, const Vector& state) {
    FlowState s;
    s.velocity.x = state.head(layout.n2);
    s.velocity.y = state.segment(layout.n2, layout.n2);
    s.pressure = state.tail(layout.n1);
    return s;
}

Vector pack(const FlowLayout& layout, const FlowState& s) {
    if (s.velocity.x.size() != layout.n2 || s.velocity.y.size() != layout.n2 || s.pressure.size() != layout.n1) {
        throw DimensionMismatch("flow state does not match the mesh");
    }
    Vector state(layout.size());
    state << s.velocity.x, s.velocity.y, s.pressure;
    return state;
}

// Newton iteration shared by the Stokes (one linear step) and Navier-Stokes solves.
FlowState newton(const Mesh& mesh, const FlowSettings& settings, Vector state, bool convection) {
    if (!(settings.reynolds > 0.0)) {
        throw InvalidParameter("flow: Reynolds number must be positive");
    }
    const FlowLayout layout = make_layout(mesh);
    const double nu = 1.0 / settings.reynolds;

    // Boundary data is imposed exactly on the iterate.
    const Vector lift = lifted_state(mesh, layout, settings);
    for (Eigen::Index k = 0; k < layout.size(); ++k) {
        if (layout.free_of_full[k] < 0) {
            state[k] = lift[k];
        }
    }
    const double reference =
        restrict_to_free(layout, assemble_flow(mesh, layout, lift, nu, convection, false).residual).norm();
    const double scale = reference > 0.0 ? reference : 1.0;

    FlowState result;
    const int max_iterations = convection ? settings.max_iterations : 1;
    double rel = 0.0;
    for (int it = 0;; ++it) {
        Assembled a = assemble_flow(mesh, layout, state, nu, convection, true);
        const Vector r = restrict_to_free(layout, a.residual);
        rel = r.norm() / scale;
        result.residual_history.push_back(rel);
        const bool done = convection ? rel <= settings.tolerance || r.norm() <= 1e-14 : it == 1;
        if (done) {
            result.iterations = it;
            break;
        }
        if (it >= max_iterations) {
            throw NewtonDivergence("solve_navier_stokes: no convergence after " + std::to_string(it) +
                                       " Newton steps, relative residual " + std::to_string(rel),
                                   rel);
        }
        Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
        lu.compute(restrict_to_free(layout, a.jacobian));
        if (lu.info() != Eigen::Success) {
            throw NumericFailure("flow: singular saddle-point system (check boundary tagging)");
        }
        const Vector step = lu.solve(r);
        if (lu.info() != Eigen::Success || !step.allFinite()) {
            throw NumericFailure("flow: saddle-point solve failed");
        }
        for (std::size_t i = 0; i < layout.full_of_free.size(); ++i) {
            state[layout.full_of_free[i]] -= step[static_cast<Eigen::Index>(i)];
        }
    }

    FlowState out = unpack(layout, state);
    out.residual_norm = rel;
    out.residual_history = std::move(result.residual_history);
    out.iterations = result.iterations;
    const Vector res = assemble_flow(mesh, layout, state, nu, convection, false).residual;
    out.divergence_norm = res.tail(layout.n1).norm();
    return out;
}

} // namespace

FlowState solve_stokes(const Mesh& mesh, const FlowSettings& settings) {
    const FlowLayout layout = make_layout(mesh);
    return newton(mesh, settings, Vector::Zero(layout.size()), false);
}

FlowState solve_navier_stokes(const Mesh& mesh, const FlowSettings& settings, const FlowState& initial) {
    const FlowLayout layout = make_layout(mesh);
    return newton(mesh, settings, pack(layout, initial), true);
}

VectorField restrict_velocity(const VectorField& velocity, const Mesh& source, const Mesh& target) {
    const auto n = static_cast<Eigen::Index>(source.num_p2());
    if (velocity.x.size() != n || velocity.y.size() != n) {
        throw DimensionMismatch("restrict_velocity: field does not match the source mesh");
    }
    const Geometry& a = source.geometry;
    const Geometry& b = target.geometry;
    if (a.x0 != b.x0 || a.x1 != b.x1 || a.y0 != b.y0 || a.y1 != b.y1) {
        throw DimensionMismatch("restrict_velocity: meshes cover different domains");
    }
    if (source.n == target.n) {
        return velocity;
    }
    VectorField out;
    out.x.resize(static_cast<Eigen::Index>(target.num_p2()));
    out.y.resize(static_cast<Eigen::Index>(target.num_p2()));
    const bool nested = (source.n - 1) % (target.n - 1) == 0;
    const int stride = nested ? (source.n - 1) / (target.n - 1) : 0;
    for (int j = 0; j < target.n; ++j) {
        for (int i = 0; i < target.n; ++i) {
            const int k = target.node_index(i, j);
            if (nested) {
                const int s = source.node_index(stride * i, stride * j);
                out.x[k] = velocity.x[s];
                out.y[k] = velocity.y[s];
            } else {
                out.x[k] = evaluate_p2(source, velocity.x, target.p2_nodes[k]);
                out.y[k] = evaluate_p2(source, velocity.y, target.p2_nodes[k]);
            }
        }
    }
    return out;
}

void write_velocity_csv(const Mesh& mesh, const VectorField& v, std::ostream& out) {
    const auto old = out.precision(17);
    out << "x,y,vx,vy\n";
    for (std::size_t i = 0; i < mesh.num_p2(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        out << mesh.p2_nodes[i].x << ',' << mesh.p2_nodes[i].y << ',' << v.x[k] << ',' << v.y[k] << '\n';
    }
    out.precision(old);
}

VectorField read_velocity_csv(const Mesh& mesh, std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("x,y,vx,vy", 0) != 0) {
        throw InvalidParameter("read_velocity_csv: missing header");
    }
    VectorField v;
    v.x.resize(static_cast<Eigen::Index>(mesh.num_p2()));
    v.y.resize(static_cast<Eigen::Index>(mesh.num_p2()));
    std::size_t i = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        if (i >= mesh.num_p2()) {
            throw DimensionMismatch("read_velocity_csv: more rows than mesh nodes");
        }
        std::istringstream row(line);
        std::array<double, 4> vals{};
        char comma = 0;
        row >> vals[0] >> comma >> vals[1] >> comma >> vals[2] >> comma >> vals[3];
        if (!row) {
            throw InvalidParameter("read_velocity_csv: malformed row " + std::to_string(i + 1));
        }
        const Point p = mesh.p2_nodes[i];
        if (std::abs(p.x - vals[0]) > 1e-12 || std::abs(p.y - vals[1]) > 1e-12) {
            throw DimensionMismatch("read_velocity_csv: node coordinates do not match the mesh");
        }
        v.x[static_cast<Eigen::Index>(i)] = vals[2];
        v.y[static_cast<Eigen::Index>(i)] = vals[3];
        ++i;
    }
    if (i != mesh.num_p2()) {
        throw DimensionMismatch("read_velocity_csv: fewer rows than mesh nodes");
    }
    return v;
}

void write_pressure_csv(const Mesh& mesh, const Vector& p, std::ostream& out) {
    const auto old = out.precision(17);
    out << "x,y,p\n";
    for (std::size_t i = 0; i < mesh.num_p1(); ++i) {
        const Point q = mesh.p2_nodes[mesh.p1_to_p2[i]];
        out << q.x << ',' << q.y << ',' << p[static_cast<Eigen::Index>(i)] << '\n';
    }
    out.precision(old);
}

} // namespace roomctl
