#include "roomctl/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "roomctl/errors.hpp"
#include "roomctl/io.hpp"

namespace roomctl {

namespace fs = std::filesystem;
using nlohmann::json;

FlowState compute_flow(const RunConfig& config, const Mesh& mesh) {
    const FlowSettings settings = config.flow_settings();
    const FlowState stokes = solve_stokes(mesh, settings);
    return solve_navier_stokes(mesh, settings, stokes);
}

RoomModels build_models(const RunConfig& config, const std::optional<FlowState>& flow) {
    RoomModels m;
    m.simulation_mesh = build_structured_mesh(config.geometry, config.simulation_n);
    m.design_mesh = build_structured_mesh(config.geometry, config.design_n);
    m.flow = flow ? *flow : compute_flow(config, m.simulation_mesh);
    const PlantShapes shapes = config.shapes();
    m.simulation_plant = build_plant(m.simulation_mesh, m.flow.velocity, config.reynolds, config.prandtl, shapes);
    const VectorField coarse = restrict_velocity(m.flow.velocity, m.simulation_mesh, m.design_mesh);
    m.design_plant = build_plant(m.design_mesh, coarse, config.reynolds, config.prandtl, shapes);
    return m;
}

DualObserverDesign design_dual(const RunConfig& config, const RoomModels& models) {
    const auto im = build_internal_model(config.signals.frequencies, static_cast<int>(models.design_plant.outputs()));
    return synthesize_dual_observer(to_standard_form(models.design_plant), im, config.dual);
}

namespace {

std::vector<ComplexMatrix> low_gain_values(const RunConfig& config, const GeneralizedPlant& plant) {
    std::vector<ComplexMatrix> values;
    for (double w : config.signals.frequencies) {
        values.push_back(transfer_value(plant, Complex(0.0, w)));
    }
    return values;
}

} // namespace

ControllerRealization design_low_gain(const RunConfig& config, const RoomModels& models) {
    const GeneralizedPlant& plant = models.simulation_plant;
    const auto im = build_internal_model(config.signals.frequencies, static_cast<int>(plant.outputs()));
    return synthesize_low_gain(low_gain_values(config, plant), im, config.epsilon);
}

std::vector<EpsilonMargin> scan_low_gain(const RunConfig& config, const RoomModels& models,
                                         const std::vector<double>& epsilons) {
    const auto im = build_internal_model(config.signals.frequencies, static_cast<int>(models.design_plant.outputs()));
    return low_gain_epsilon_scan(models.design_plant, low_gain_values(config, models.simulation_plant), im, epsilons);
}

SimulationResult run_simulation(const RunConfig& config, const GeneralizedPlant& plant,
                                const ControllerRealization& controller) {
    const ClosedLoop cl = assemble_closed_loop(plant, controller);
    return simulate(cl, config.signals, config.simulation, unit_initial_state(plant),
                    Vector::Zero(controller.dimension()));
}

std::string flow_fingerprint(const RunConfig& config) {
    RunConfig c;
    c.geometry = config.geometry;
    c.reynolds = config.reynolds;
    c.inlet_profile = config.inlet_profile;
    c.flow_tolerance = config.flow_tolerance;
    c.flow_max_iterations = config.flow_max_iterations;
    c.simulation_n = config.simulation_n;
    return write_config(c);
}

std::string controller_fingerprint(const RunConfig& config) {
    RunConfig c = config;
    c.name = RunConfig{}.name;
    c.output_dir = RunConfig{}.output_dir;
    c.controller = RunConfig{}.controller;
    c.simulation = RunConfig{}.simulation;
    c.tail_fraction = RunConfig{}.tail_fraction;
    const auto q = static_cast<Eigen::Index>(c.signals.frequencies.size());
    c.signals.ref_cos = c.signals.ref_sin = Matrix::Zero(c.signals.ref_cos.rows(), q);
    c.signals.dist_cos = c.signals.dist_sin = Matrix::Zero(c.signals.dist_cos.rows(), q);
    return write_config(c);
}

namespace {

std::string simulation_fingerprint(const RunConfig& config) {
    RunConfig c = config;
    c.name = RunConfig{}.name;
    c.output_dir = RunConfig{}.output_dir;
    c.controller = RunConfig{}.controller;
    return write_config(c);
}

// Runs `body` against a scratch directory and moves it to `target` only when
// the body succeeds.
template <class Body>
void staged(const fs::path& target, Body&& body) {
    fs::path scratch = target;
    scratch += ".partial";
    fs::remove_all(scratch);
    fs::create_directories(scratch);
    try {
        body(scratch);
    } catch (...) {
        fs::remove_all(scratch);
        throw;
    }
    fs::remove_all(target);
    fs::rename(scratch, target);
}

std::optional<json> read_json(const fs::path& path) {
    if (!fs::exists(path)) {
        return std::nullopt;
    }
    std::ifstream in(path);
    try {
        return json::parse(in);
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

void write_json(const fs::path& path, const json& doc) {
    write_file(path, [&](std::ostream& o) { o << doc.dump(2) << '\n'; });
}

json finite_or_null(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

double number_or_inf(const json& v) {
    return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
}

std::string snapshot_name(double t) {
    std::ostringstream o;
    o << "snapshot_t" << std::fixed << std::setprecision(2) << t << ".csv";
    return o.str();
}

void write_mesh_files(const Mesh& mesh, const fs::path& dir, const std::string& prefix) {
    write_file(dir / (prefix + "_nodes.csv"), [&](std::ostream& o) { write_nodes_csv(mesh, o); });
    write_file(dir / (prefix + "_triangles.csv"), [&](std::ostream& o) { write_triangles_csv(mesh, o); });
}

json mesh_summary(const Mesh& mesh) {
    return {{"n", mesh.n},
            {"p2_nodes", mesh.num_p2()},
            {"p1_nodes", mesh.num_p1()},
            {"triangles", mesh.triangles.size()},
            {"inlet_nodes", count_tag(mesh, BoundaryTag::Inlet)},
            {"outlet_nodes", count_tag(mesh, BoundaryTag::Outlet)},
            {"wall_nodes", count_tag(mesh, BoundaryTag::Wall)}};
}

} // namespace

Pipeline::Pipeline(RunConfig config, fs::path out) : config_(std::move(config)), out_(std::move(out)) {
    config_.validate();
}

void Pipeline::mesh() {
    const Mesh sim = build_structured_mesh(config_.geometry, config_.simulation_n);
    const Mesh design = build_structured_mesh(config_.geometry, config_.design_n);
    staged(out_ / "mesh", [&](const fs::path& dir) {
        write_mesh_files(sim, dir, "simulation");
        write_mesh_files(design, dir, "design");
        write_json(dir / "mesh.json", {{"simulation", mesh_summary(sim)}, {"design", mesh_summary(design)}});
    });
}

void Pipeline::flow() {
    const Mesh mesh = build_structured_mesh(config_.geometry, config_.simulation_n);
    const FlowState state = compute_flow(config_, mesh);
    staged(out_ / "flow", [&](const fs::path& dir) {
        write_file(dir / "velocity.csv", [&](std::ostream& o) { write_velocity_csv(mesh, state.velocity, o); });
        write_file(dir / "pressure.csv", [&](std::ostream& o) { write_pressure_csv(mesh, state.pressure, o); });
        write_json(dir / "flow.json", {{"fingerprint", flow_fingerprint(config_)},
                                       {"iterations", state.iterations},
                                       {"residual_norm", state.residual_norm},
                                       {"divergence_norm", state.divergence_norm},
                                       {"residual_history", state.residual_history}});
    });
}

const RoomModels& Pipeline::models() {
    if (models_) {
        return *models_;
    }
    std::optional<FlowState> flow;
    const auto meta = read_json(out_ / "flow" / "flow.json");
    if (meta && meta->value("fingerprint", "") == flow_fingerprint(config_)) {
        const Mesh mesh = build_structured_mesh(config_.geometry, config_.simulation_n);
        FlowState state;
        read_file(out_ / "flow" / "velocity.csv",
                  [&](std::istream& in) { state.velocity = read_velocity_csv(mesh, in); });
        flow = std::move(state);
    }
    models_ = build_models(config_, flow);
    return *models_;
}

std::vector<EpsilonMargin> Pipeline::epsilon_scan(const std::vector<double>& epsilons) {
    return scan_low_gain(config_, models(), epsilons);
}

void Pipeline::synth(ControllerKind kind) {
    const RoomModels& m = models();
    json base = {{"fingerprint", controller_fingerprint(config_)},
                 {"simulation_states", m.simulation_plant.states()},
                 {"design_states", m.design_plant.states()},
                 {"frequencies", config_.signals.frequencies}};
    if (kind == ControllerKind::LowGain) {
        const ControllerRealization c = design_low_gain(config_, m);
        json meta = base;
        meta["epsilon"] = config_.epsilon;
        meta["internal_model_defect"] = internal_model_defect(c, config_.signals.frequencies);
        staged(out_ / "controllers" / to_string(kind),
               [&](const fs::path& dir) { export_controller(c, dir.string(), meta.dump()); });
        return;
    }
    const DualObserverDesign d = design_dual(config_, m);
    json meta = base;
    meta["alpha1"] = config_.dual.alpha1;
    meta["alpha2"] = config_.dual.alpha2;
    meta["r1"] = config_.dual.r1;
    meta["r2"] = config_.dual.r2;
    meta["order"] = d.reduction.order;
    meta["control_riccati"] = {{"residual", d.control.residual_norm},
                               {"iterations", d.control.iterations},
                               {"closed_loop_abscissa", d.control.closed_loop_abscissa}};
    meta["filter_riccati"] = {{"residual", d.filter.residual_norm},
                              {"iterations", d.filter.iterations},
                              {"closed_loop_abscissa", d.filter.closed_loop_abscissa}};
    meta["hankel_error_bound"] = d.reduction.error_bound;
    for (const ControllerRealization* c : {&d.full, &d.reduced}) {
        json own = meta;
        own["internal_model_defect"] = internal_model_defect(*c, config_.signals.frequencies);
        staged(out_ / "controllers" / to_string(c->kind), [&](const fs::path& dir) {
            export_controller(*c, dir.string(), own.dump());
            write_file(dir / "hsv.csv", [&](std::ostream& o) {
                o.precision(17);
                o << "k,sigma\n";
                const Vector& s = d.reduction.hankel_singular_values;
                for (Eigen::Index k = 0; k < s.size(); ++k) {
                    o << k + 1 << ',' << s(k) << '\n';
                }
            });
        });
    }
}

ControllerRealization Pipeline::controller(ControllerKind kind) {
    const fs::path dir = out_ / "controllers" / to_string(kind);
    const auto meta = read_json(dir / "controller.json");
    const bool fresh = meta && meta->contains("metadata") &&
                       (*meta)["metadata"].value("fingerprint", "") == controller_fingerprint(config_);
    if (!fresh) {
        synth(kind);
    }
    return import_controller(dir.string());
}

TrackingMetrics Pipeline::simulate(ControllerKind kind) {
    const ControllerRealization ctrl = controller(kind);
    const RoomModels& m = models();
    const SimulationResult res = run_simulation(config_, m.simulation_plant, ctrl);
    const TrackingMetrics metrics = tracking_metrics(res, config_.tail_fraction);
    staged(out_ / "sim" / to_string(kind), [&](const fs::path& dir) {
        write_trajectory_csv(res, (dir / "trajectory.csv").string());
        for (const Snapshot& s : res.snapshots) {
            write_snapshot_csv(m.simulation_mesh, m.simulation_plant.dofs, s.state,
                               (dir / snapshot_name(s.time)).string());
        }
        write_json(dir / "metrics.json", {{"fingerprint", simulation_fingerprint(config_)},
                                          {"controller", to_string(kind)},
                                          {"controller_dimension", ctrl.dimension()},
                                          {"simulation_states", m.simulation_plant.states()},
                                          {"sup_tail", metrics.sup_tail},
                                          {"sup_head", metrics.sup_head},
                                          {"decay_rate", finite_or_null(metrics.decay_rate)},
                                          {"theta_min", metrics.theta_min},
                                          {"theta_max", metrics.theta_max},
                                          {"tail_fraction", config_.tail_fraction}});
    });
    return metrics;
}

std::string Pipeline::report() {
    struct Row {
        ControllerKind kind;
        Eigen::Index dimension;
        TrackingMetrics m;
    };
    std::vector<Row> rows;
    for (auto kind : {ControllerKind::DualFull, ControllerKind::DualReduced, ControllerKind::LowGain}) {
        const fs::path file = out_ / "sim" / to_string(kind) / "metrics.json";
        auto meta = read_json(file);
        if (!meta || meta->value("fingerprint", "") != simulation_fingerprint(config_)) {
            simulate(kind);
            meta = read_json(file);
        }
        if (!meta) {
            throw Error("report: cannot read " + file.string());
        }
        TrackingMetrics m;
        m.sup_tail = (*meta)["sup_tail"].get<double>();
        m.sup_head = (*meta)["sup_head"].get<double>();
        m.decay_rate = number_or_inf((*meta)["decay_rate"]);
        m.theta_min = (*meta)["theta_min"].get<double>();
        m.theta_max = (*meta)["theta_max"].get<double>();
        rows.push_back({kind, (*meta)["controller_dimension"].get<Eigen::Index>(), m});
    }
    const auto slowest = std::min_element(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.m.decay_rate < b.m.decay_rate;
    });

    std::ostringstream md;
    md << "| controller | dim | sup|e| head | sup|e| tail | decay rate | theta min | theta max |\n";
    md << "|---|---|---|---|---|---|---|\n";
    std::ostringstream csv;
    csv.precision(17);
    csv << "controller,dimension,sup_head,sup_tail,decay_rate,theta_min,theta_max\n";
    for (const Row& r : rows) {
        md << "| " << to_string(r.kind) << " | " << r.dimension << " | " << std::setprecision(4) << r.m.sup_head
           << " | " << r.m.sup_tail << " | " << r.m.decay_rate << " | " << r.m.theta_min << " | " << r.m.theta_max
           << " |\n";
        csv << to_string(r.kind) << ',' << r.dimension << ',' << r.m.sup_head << ',' << r.m.sup_tail << ','
            << r.m.decay_rate << ',' << r.m.theta_min << ',' << r.m.theta_max << '\n';
    }
    md << "\nslowest error decay: " << to_string(slowest->kind) << '\n';
    staged(out_ / "report", [&](const fs::path& dir) {
        write_file(dir / "report.md", [&](std::ostream& o) { o << md.str(); });
        write_file(dir / "report.csv", [&](std::ostream& o) { o << csv.str(); });
    });
    return md.str();
}

} // namespace roomctl
