#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

#include "roomctl/errors.hpp"
#include "roomctl/fem.hpp"
#include "roomctl/mesh.hpp"

namespace roomctl {

/// How the bump profile is placed on the inlet. The bump is supported
/// on 0.5 < s < 0.9; `Remapped` evaluates it at y + 0.4 so it covers the
/// inlet at 0.1..0.4, `Literal` evaluates it at y (zero inflow on that inlet).
enum class InletProfileMode { Remapped, Literal };

inline constexpr double kInletRemapShift = 0.4;

/// Inlet velocity (horizontal, vertical) at height y.
std::array<double, 2> inlet_profile(double y, InletProfileMode mode = InletProfileMode::Remapped);

/// Steady Taylor-Hood solution: P2 velocity, P1 pressure.
struct FlowState {
    VectorField velocity;
    Vector pressure;
    double residual_norm = 0.0;          // relative nonlinear residual
    double divergence_norm = 0.0;        // ||Bᵀv|| over P1 test functions
    std::vector<double> residual_history; // relative residual per Newton iterate
    int iterations = 0;
};

struct FlowSettings {
    double reynolds = 100.0;
    InletProfileMode profile = InletProfileMode::Remapped;
    /// Overrides `profile` when set: velocity prescribed on inlet nodes.
    std::function<std::array<double, 2>(Point)> inlet_velocity;
    double tolerance = 1e-10;
    int max_iterations = 25;
};

/// Newton did not reach the tolerance; carries the last relative residual.
class NewtonDivergence : public NumericFailure {
public:
    NewtonDivergence(const std::string& what, double last_residual)
        : NumericFailure(what), last_residual_(last_residual) {}
    [[nodiscard]] double last_residual() const { return last_residual_; }

private:
    double last_residual_;
};

/// Stokes problem with no-slip walls, prescribed inlet and do-nothing outlet.
FlowState solve_stokes(const Mesh& mesh, const FlowSettings& settings);

/// Newton iteration on the steady Navier-Stokes equations from `initial`.
FlowState solve_navier_stokes(const Mesh& mesh, const FlowSettings& settings, const FlowState& initial);

/// Velocity on `target`: a copy when the meshes coincide, nodal
/// interpolation of the P2 field otherwise.
VectorField restrict_velocity(const VectorField& velocity, const Mesh& source, const Mesh& target);

/// CSV `x,y,vx,vy` per P2 node.
void write_velocity_csv(const Mesh& mesh, const VectorField& v, std::ostream& out);
/// Reads a field written by write_velocity_csv; node coordinates must match.
VectorField read_velocity_csv(const Mesh& mesh, std::istream& in);

/// CSV `x,y,p` per P1 vertex.
void write_pressure_csv(const Mesh& mesh, const Vector& p, std::ostream& out);

} // namespace roomctl
