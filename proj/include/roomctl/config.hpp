#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "roomctl/controller.hpp"
#include "roomctl/flow.hpp"
#include "roomctl/mesh.hpp"
#include "roomctl/plant.hpp"
#include "roomctl/sim.hpp"

namespace roomctl {

/// Everything a pipeline run needs. Defaults reproduce the room experiment
/// with the near observation patch and α = R = 1.
struct RunConfig {
    std::string name = "room";
    Geometry geometry = Geometry::room();
    double reynolds = 100.0;
    double prandtl = 0.7;
    InletProfileMode inlet_profile = InletProfileMode::Remapped;
    double flow_tolerance = 1e-10;
    int flow_max_iterations = 25;

    ShapeSpec control = ShapeSpec::indicator(0.0, 0.05, 0.1, 0.4);
    double disturbance_amplitude = 1.0;
    ObservationSetup observation = ObservationSetup::Near;

    int simulation_n = 81;
    int design_n = 41;

    SignalSpec signals = SignalSpec::room_experiment();

    ControllerKind controller = ControllerKind::DualReduced;
    DualObserverParameters dual;
    double epsilon = 0.08;

    SimulationOptions simulation{20.0, 0.01, {}};
    double tail_fraction = 0.2;

    std::string output_dir = "out";

    [[nodiscard]] PlantShapes shapes() const;
    [[nodiscard]] FlowSettings flow_settings() const;
    /// Throws ConfigError on any inconsistent value.
    void validate() const;
};

/// INI text with sections [run], [geometry], [physics], [shapes], [mesh],
/// [signals], [controller], [simulation], [output]. Unknown sections or keys
/// are rejected. `overrides` are `section.key=value` strings applied on top.
RunConfig parse_config(std::istream& in, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Canonical INI rendering; parse_config(write_config(c)) reproduces c.
std::string write_config(const RunConfig& config);

} // namespace roomctl
