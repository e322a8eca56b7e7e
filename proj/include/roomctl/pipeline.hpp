#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "roomctl/config.hpp"

namespace roomctl {

/// Meshes, flow and both temperature plants of one configuration.
struct RoomModels {
    Mesh simulation_mesh;
    Mesh design_mesh;
    FlowState flow; // on the simulation mesh
    GeneralizedPlant simulation_plant;
    GeneralizedPlant design_plant;
};

/// Solves the flow (Stokes start, then Newton) on the simulation mesh.
FlowState compute_flow(const RunConfig& config, const Mesh& mesh);

/// Builds meshes and plants; reuses `flow` when given (it must live on the
/// simulation mesh).
RoomModels build_models(const RunConfig& config, const std::optional<FlowState>& flow = std::nullopt);

DualObserverDesign design_dual(const RunConfig& config, const RoomModels& models);

/// Transfer values are taken from the simulation plant.
ControllerRealization design_low_gain(const RunConfig& config, const RoomModels& models);

/// Low-gain closed-loop abscissa on the design plant for each ε, with
/// transfer values from the simulation plant.
std::vector<EpsilonMargin> scan_low_gain(const RunConfig& config, const RoomModels& models,
                                         const std::vector<double>& epsilons);

/// Closed loop on the simulation plant from θ = 1, z = 0.
SimulationResult run_simulation(const RunConfig& config, const GeneralizedPlant& plant,
                                const ControllerRealization& controller);

/// Artifact stages of the command-line tool. Each stage writes into a
/// `.partial` directory that is renamed into place on success and deleted on
/// failure. Later stages reuse earlier artifacts when their recorded
/// configuration matches and recompute them otherwise.
class Pipeline {
public:
    Pipeline(RunConfig config, std::filesystem::path out);

    void mesh();
    void flow();
    /// Dual kinds write both the full and the reduced controller.
    void synth(ControllerKind kind);
    TrackingMetrics simulate(ControllerKind kind);
    /// scan_low_gain on this configuration's models; writes nothing.
    std::vector<EpsilonMargin> epsilon_scan(const std::vector<double>& epsilons);
    /// Summary table (markdown) over all three controllers; also written to
    /// report.md and report.csv.
    std::string report();

    [[nodiscard]] const RunConfig& config() const { return config_; }

private:
    const RoomModels& models();
    ControllerRealization controller(ControllerKind kind);

    RunConfig config_;
    std::filesystem::path out_;
    std::optional<RoomModels> models_;
};

/// Canonical text of the configuration entries that influence a stage; used
/// to decide whether stored artifacts can be reused.
std::string flow_fingerprint(const RunConfig& config);
std::string controller_fingerprint(const RunConfig& config);

} // namespace roomctl
