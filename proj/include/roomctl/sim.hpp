#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "roomctl/controller.hpp"
#include "roomctl/plant.hpp"

namespace roomctl {

/// Finite trigonometric signals sharing one frequency list:
///   y_r(t) = Σ_k a^c_k cos(ω_k t) + a^s_k sin(ω_k t), same for w_d with b.
/// Coefficient matrices have one column per frequency.
struct SignalSpec {
    std::vector<double> frequencies;
    Matrix ref_cos;
    Matrix ref_sin;
    Matrix dist_cos;
    Matrix dist_sin;

    /// y_r = sin t + 2 cos 2t, w_d = 1.5 cos 3t.
    static SignalSpec room_experiment();
    /// All coefficients zero with the given frequencies and sizes.
    static SignalSpec zero(std::vector<double> frequencies, Eigen::Index outputs, Eigen::Index disturbances);
    void validate() const;
};

struct SignalValue {
    Vector reference;
    Vector disturbance;
};

SignalValue eval_signals(const SignalSpec& spec, double t);

/// Generalized plant coupled to an error-feedback controller (D = D_d = 0):
///   M x' = A x + B K z + B_d w_d
///     z' = G1 z + G2 (C x - y_r)
struct ClosedLoop {
    SparseMatrix M;
    SparseMatrix A;
    Matrix B;
    Matrix Bd;
    Matrix C;
    ControllerRealization controller;

    [[nodiscard]] Eigen::Index plant_states() const { return M.rows(); }
    [[nodiscard]] Eigen::Index controller_states() const { return controller.dimension(); }
};

ClosedLoop assemble_closed_loop(const GeneralizedPlant& plant, const ControllerRealization& ctrl);

/// Dense closed-loop drift [[A, BK], [G2 C, G1]] for a standard-form plant.
Matrix closed_loop_matrix(const StateSpace& plant, const ControllerRealization& ctrl);

/// Spectral abscissa of the closed loop (dense; intended for design-size plants).
double closed_loop_abscissa(const GeneralizedPlant& plant, const ControllerRealization& ctrl);

struct EpsilonMargin {
    double epsilon = 0.0;
    double abscissa = 0.0;
};

/// Closed-loop abscissa of the low-gain controller on `plant` for each ε
/// (dense; design-size plants). A diagnostic for choosing ε by hand.
std::vector<EpsilonMargin> low_gain_epsilon_scan(const GeneralizedPlant& plant, const std::vector<ComplexMatrix>& values,
                                                 const InternalModel& model, const std::vector<double>& epsilons);

struct SimulationOptions {
    double t_end = 20.0;
    double dt = 0.01;
    std::vector<double> snapshot_times;
};

struct Snapshot {
    double time = 0.0;
    Vector state; // reduced plant coefficients
};

struct SimulationResult {
    std::vector<double> time;
    Matrix y;   // steps × p
    Matrix y_r; // steps × p
    Matrix e;   // steps × p
    Matrix u;   // steps × m
    std::vector<Snapshot> snapshots;
    double theta_min = 0.0; // over space-time, wall zeros included
    double theta_max = 0.0;
    Vector final_plant_state;
    Vector final_controller_state;
};

/// Crank-Nicolson with one sparse factorization of M/dt - A/2 and one dense
/// factorization of the controller Schur complement; exogenous signals are
/// evaluated at half steps.
SimulationResult simulate(const ClosedLoop& cl, const SignalSpec& signals, const SimulationOptions& options,
                          const Vector& x0, const Vector& z0);

/// Reduced coefficients of the constant-1 field (wall values are eliminated).
Vector unit_initial_state(const GeneralizedPlant& plant);

struct TrackingMetrics {
    double sup_tail = 0.0;   // max |e| over the final tail fraction of the horizon
    double sup_head = 0.0;   // max |e| over the initial fraction of the same length
    double decay_rate = 0.0; // +inf when the error vanishes identically
    double theta_min = 0.0;
    double theta_max = 0.0;
};

/// Decay rate: least-squares slope of -log of the envelope max_{s≥t} |e(s)|.
TrackingMetrics tracking_metrics(const SimulationResult& result, double tail_fraction = 0.2);

/// max |e| over t in [t0, t1].
double max_abs_error(const SimulationResult& result, double t0, double t1);

/// `t,y,y_r,e,u` with 17 significant digits (columns get a _k suffix when
/// there is more than one channel).
void write_trajectory_csv(const SimulationResult& result, const std::string& path);

/// `x,y,theta` per P2 node, walls filled with zeros.
void write_snapshot_csv(const Mesh& mesh, const DofMap& dofs, const Vector& state, const std::string& path);

} // namespace roomctl
