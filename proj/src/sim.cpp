#include "roomctl/sim.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "roomctl/errors.hpp"
#include "roomctl/io.hpp"

namespace roomctl {

SignalSpec SignalSpec::room_experiment() {
    SignalSpec s = zero({1.0, 2.0, 3.0}, 1, 1);
    s.ref_sin(0, 0) = 1.0;
    s.ref_cos(0, 1) = 2.0;
    s.dist_cos(0, 2) = 1.5;
    return s;
}

SignalSpec SignalSpec::zero(std::vector<double> frequencies, Eigen::Index outputs, Eigen::Index disturbances) {
    SignalSpec s;
    const auto q = static_cast<Eigen::Index>(frequencies.size());
    s.frequencies = std::move(frequencies);
    s.ref_cos = Matrix::Zero(outputs, q);
    s.ref_sin = Matrix::Zero(outputs, q);
    s.dist_cos = Matrix::Zero(disturbances, q);
    s.dist_sin = Matrix::Zero(disturbances, q);
    return s;
}

void SignalSpec::validate() const {
    const auto q = static_cast<Eigen::Index>(frequencies.size());
    if (ref_cos.cols() != q || ref_sin.cols() != q || dist_cos.cols() != q || dist_sin.cols() != q ||
        ref_cos.rows() != ref_sin.rows() || dist_cos.rows() != dist_sin.rows()) {
        throw DimensionMismatch("SignalSpec: coefficient matrices do not match the frequency list");
    }
}

SignalValue eval_signals(const SignalSpec& spec, double t) {
    spec.validate();
    const auto q = static_cast<Eigen::Index>(spec.frequencies.size());
    Vector c(q);
    Vector s(q);
    for (Eigen::Index k = 0; k < q; ++k) {
        const double wt = spec.frequencies[static_cast<std::size_t>(k)] * t;
        c(k) = std::cos(wt);
        s(k) = std::sin(wt);
    }
    return {spec.ref_cos * c + spec.ref_sin * s, spec.dist_cos * c + spec.dist_sin * s};
}

ClosedLoop assemble_closed_loop(const GeneralizedPlant& plant, const ControllerRealization& ctrl) {
    ctrl.validate();
    if (ctrl.inputs() != plant.outputs() || ctrl.outputs() != plant.inputs()) {
        throw DimensionMismatch("closed loop: controller is " + std::to_string(ctrl.inputs()) + "-in/" +
                                std::to_string(ctrl.outputs()) + "-out, plant is " +
                                std::to_string(plant.inputs()) + "-in/" + std::to_string(plant.outputs()) + "-out");
    }
    return {plant.M, plant.A, plant.B, plant.Bd, plant.C, ctrl};
}

Matrix closed_loop_matrix(const StateSpace& plant, const ControllerRealization& ctrl) {
    plant.validate();
    ctrl.validate();
    if (ctrl.inputs() != plant.outputs() || ctrl.outputs() != plant.inputs()) {
        throw DimensionMismatch("closed_loop_matrix: controller and plant do not conform");
    }
    const Eigen::Index n = plant.states();
    const Eigen::Index nz = ctrl.dimension();
    Matrix ae(n + nz, n + nz);
    ae.topLeftCorner(n, n) = plant.A;
    ae.topRightCorner(n, nz) = plant.B * ctrl.K;
    ae.bottomLeftCorner(nz, n) = ctrl.G2 * plant.C;
    ae.bottomRightCorner(nz, nz) = ctrl.G1;
    return ae;
}

double closed_loop_abscissa(const GeneralizedPlant& plant, const ControllerRealization& ctrl) {
    return spectral_abscissa(closed_loop_matrix(to_standard_form(plant), ctrl));
}

std::vector<EpsilonMargin> low_gain_epsilon_scan(const GeneralizedPlant& plant, const std::vector<ComplexMatrix>& values,
                                                 const InternalModel& model, const std::vector<double>& epsilons) {
    const StateSpace standard = to_standard_form(plant);
    std::vector<EpsilonMargin> out;
    for (double eps : epsilons) {
        const ControllerRealization ctrl = synthesize_low_gain(values, model, eps);
        out.push_back({eps, spectral_abscissa(closed_loop_matrix(standard, ctrl))});
    }
    return out;
}

Vector unit_initial_state(const GeneralizedPlant& plant) {
    return Vector::Ones(plant.states());
}

SimulationResult simulate(const ClosedLoop& cl, const SignalSpec& signals, const SimulationOptions& options,
                          const Vector& x0, const Vector& z0) {
    signals.validate();
    const Eigen::Index n = cl.plant_states();
    const Eigen::Index nz = cl.controller_states();
    const Eigen::Index p = cl.C.rows();
    const Eigen::Index m = cl.B.cols();
    if (!(options.dt > 0.0) || !(options.t_end >= options.dt)) {
        throw InvalidParameter("simulate: need dt > 0 and t_end >= dt");
    }
    if (x0.size() != n || z0.size() != nz) {
        throw DimensionMismatch("simulate: initial state sizes do not match the closed loop");
    }
    if (signals.ref_cos.rows() != p || signals.dist_cos.rows() != cl.Bd.cols()) {
        throw DimensionMismatch("simulate: signal channels do not match plant outputs/disturbances");
    }
    const ControllerRealization& k = cl.controller;
    const double dt = options.dt;
    const auto steps = static_cast<Eigen::Index>(std::llround(options.t_end / dt));

    SparseMatrix lhs = cl.M / dt - 0.5 * cl.A;
    lhs.makeCompressed();
    const SparseMatrix rhs_op = cl.M / dt + 0.5 * cl.A;
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(lhs);
    lu.factorize(lhs);
    if (lu.info() != Eigen::Success) {
        throw NumericFailure("simulate: factorization of M/dt - A/2 failed");
    }
    const Matrix w = lu.solve(cl.B); // P⁻¹B
    Matrix schur = -0.5 * k.G1;
    schur.diagonal().array() += 1.0 / dt;
    schur.noalias() -= 0.25 * (k.G2 * (cl.C * w)) * k.K;
    const Eigen::PartialPivLU<Matrix> slu(schur);
    Matrix z_rhs = 0.5 * k.G1;
    z_rhs.diagonal().array() += 1.0 / dt;

    SimulationResult res;
    res.time.resize(static_cast<std::size_t>(steps + 1));
    res.y.resize(steps + 1, p);
    res.y_r.resize(steps + 1, p);
    res.e.resize(steps + 1, p);
    res.u.resize(steps + 1, m);

    std::vector<double> snaps = options.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    std::size_t next_snap = 0;

    Vector x = x0;
    Vector z = z0;
    res.theta_min = std::min(0.0, x.minCoeff());
    res.theta_max = std::max(0.0, x.maxCoeff());
    auto record = [&](Eigen::Index i, double t) {
        const SignalValue sv = eval_signals(signals, t);
        res.time[static_cast<std::size_t>(i)] = t;
        res.y.row(i) = (cl.C * x).transpose();
        res.y_r.row(i) = sv.reference.transpose();
        res.e.row(i) = res.y.row(i) - res.y_r.row(i);
        res.u.row(i) = (k.K * z).transpose();
        res.theta_min = std::min(res.theta_min, x.minCoeff());
        res.theta_max = std::max(res.theta_max, x.maxCoeff());
        while (next_snap < snaps.size() && snaps[next_snap] <= t + 0.5 * dt) {
            if (snaps[next_snap] >= t - 0.5 * dt) {
                res.snapshots.push_back({t, x});
            }
            ++next_snap;
        }
    };
    record(0, 0.0);
    for (Eigen::Index i = 1; i <= steps; ++i) {
        const double t_mid = (static_cast<double>(i) - 0.5) * dt;
        const SignalValue sv = eval_signals(signals, t_mid);
        Vector r1 = rhs_op * x;
        r1.noalias() += 0.5 * (cl.B * (k.K * z));
        r1.noalias() += cl.Bd * sv.disturbance;
        Vector r2 = z_rhs * z;
        r2.noalias() += 0.5 * (k.G2 * (cl.C * x));
        r2.noalias() -= k.G2 * sv.reference;

        const Vector s1 = lu.solve(r1);
        const Vector z_next = slu.solve(Vector(r2 + 0.5 * (k.G2 * (cl.C * s1))));
        x = s1 + 0.5 * (w * (k.K * z_next));
        z = z_next;
        if (!x.allFinite() || !z.allFinite()) {
            throw NumericFailure("simulate: non-finite state at step " + std::to_string(i));
        }
        record(i, static_cast<double>(i) * dt);
    }
    res.final_plant_state = x;
    res.final_controller_state = z;
    return res;
}

double max_abs_error(const SimulationResult& result, double t0, double t1) {
    double worst = 0.0;
    for (std::size_t i = 0; i < result.time.size(); ++i) {
        const double t = result.time[i];
        if (t >= t0 - 1e-12 && t <= t1 + 1e-12) {
            worst = std::max(worst, result.e.row(static_cast<Eigen::Index>(i)).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

TrackingMetrics tracking_metrics(const SimulationResult& result, double tail_fraction) {
    if (result.time.empty()) {
        throw InvalidParameter("tracking_metrics: empty series");
    }
    if (!(tail_fraction > 0.0) || tail_fraction > 1.0) {
        throw InvalidParameter("tracking_metrics: tail fraction must lie in (0, 1]");
    }
    TrackingMetrics out;
    const double t0 = result.time.front();
    const double t1 = result.time.back();
    const double span = (t1 - t0) * tail_fraction;
    out.sup_tail = max_abs_error(result, t1 - span, t1);
    out.sup_head = max_abs_error(result, t0, t0 + span);
    out.theta_min = result.theta_min;
    out.theta_max = result.theta_max;

    const auto n = static_cast<Eigen::Index>(result.time.size());
    Vector env(n);
    double running = 0.0;
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        running = std::max(running, result.e.row(i).cwiseAbs().maxCoeff());
        env(i) = running;
    }
    if (env(0) == 0.0) {
        out.decay_rate = std::numeric_limits<double>::infinity();
        return out;
    }
    double st = 0.0;
    double sl = 0.0;
    double stt = 0.0;
    double stl = 0.0;
    double count = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (env(i) <= 0.0) {
            break;
        }
        const double t = result.time[static_cast<std::size_t>(i)];
        const double l = std::log(env(i));
        st += t;
        sl += l;
        stt += t * t;
        stl += t * l;
        count += 1.0;
    }
    const double denom = count * stt - st * st;
    out.decay_rate = denom > 0.0 ? -(count * stl - st * sl) / denom : 0.0;
    return out;
}

void write_trajectory_csv(const SimulationResult& result, const std::string& path) {
    const Eigen::Index p = result.y.cols();
    const Eigen::Index m = result.u.cols();
    auto names = [](const std::string& base, Eigen::Index count) {
        if (count == 1) {
            return base;
        }
        std::string out;
        for (Eigen::Index k = 0; k < count; ++k) {
            out += (k ? "," : "") + base + "_" + std::to_string(k + 1);
        }
        return out;
    };
    write_file(path, [&](std::ostream& o) {
        o.precision(17);
        o << "t," << names("y", p) << ',' << names("y_r", p) << ',' << names("e", p) << ',' << names("u", m)
          << '\n';
        for (std::size_t i = 0; i < result.time.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            o << result.time[i];
            for (const Matrix* mat : {&result.y, &result.y_r, &result.e, &result.u}) {
                for (Eigen::Index c = 0; c < mat->cols(); ++c) {
                    o << ',' << (*mat)(r, c);
                }
            }
            o << '\n';
        }
    });
}

void write_snapshot_csv(const Mesh& mesh, const DofMap& dofs, const Vector& state, const std::string& path) {
    if (dofs.full_size() != mesh.num_p2() || static_cast<std::size_t>(state.size()) != dofs.reduced_size()) {
        throw DimensionMismatch("write_snapshot_csv: state does not match mesh");
    }
    const Vector full = dofs.reinflate(state);
    write_file(path, [&](std::ostream& o) {
        o.precision(17);
        o << "x,y,theta\n";
        for (std::size_t i = 0; i < mesh.num_p2(); ++i) {
            o << mesh.p2_nodes[i].x << ',' << mesh.p2_nodes[i].y << ',' << full(static_cast<Eigen::Index>(i))
              << '\n';
        }
    });
}

} // namespace roomctl
