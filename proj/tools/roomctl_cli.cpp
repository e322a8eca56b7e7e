#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "roomctl/errors.hpp"
#include "roomctl/pipeline.hpp"

namespace fs = std::filesystem;
using namespace roomctl;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

void print_controller(const fs::path& out, ControllerKind kind) {
    std::ifstream in(out / "controllers" / to_string(kind) / "controller.json");
    const auto doc = nlohmann::json::parse(in);
    const auto& meta = doc["metadata"];
    std::cout << to_string(kind) << ": dimension " << doc["dimension"].get<long>() << " (simulation plant "
              << meta["simulation_states"].get<long>() << " states, design plant "
              << meta["design_states"].get<long>() << " states)\n";
}

void print_metrics(ControllerKind kind, const TrackingMetrics& m) {
    std::cout << to_string(kind) << ": sup|e| head " << m.sup_head << ", tail " << m.sup_tail << ", decay rate "
              << m.decay_rate << ", theta in [" << m.theta_min << ", " << m.theta_max << "]\n";
}

int run(const std::string& stage, const RunConfig& config, const fs::path& out,
        const std::optional<ControllerKind>& selected, const std::vector<double>& epsilons) {
    Pipeline pipeline(config, out);
    const ControllerKind kind = selected.value_or(config.controller);
    if (stage == "mesh") {
        pipeline.mesh();
        std::ifstream in(out / "mesh" / "mesh.json");
        std::cout << nlohmann::json::parse(in).dump(2) << '\n';
    } else if (stage == "flow") {
        pipeline.flow();
        std::ifstream in(out / "flow" / "flow.json");
        const auto doc = nlohmann::json::parse(in);
        std::cout << "flow: " << doc["iterations"].get<int>() << " Newton iterations, relative residual "
                  << doc["residual_norm"].get<double>() << ", divergence " << doc["divergence_norm"].get<double>()
                  << '\n';
    } else if (stage == "synth") {
        if (!epsilons.empty()) {
            std::cout << "epsilon,closed_loop_abscissa\n";
            for (const EpsilonMargin& e : pipeline.epsilon_scan(epsilons)) {
                std::cout << e.epsilon << ',' << e.abscissa << '\n';
            }
            return 0;
        }
        pipeline.synth(kind);
        if (kind == ControllerKind::LowGain) {
            print_controller(out, kind);
        } else {
            print_controller(out, ControllerKind::DualFull);
            print_controller(out, ControllerKind::DualReduced);
        }
    } else if (stage == "simulate") {
        print_metrics(kind, pipeline.simulate(kind));
    } else {
        std::cout << pipeline.report();
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Room temperature regulation: meshes, flow, controller synthesis and closed-loop simulation"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir;
    std::string controller;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "INI configuration file")->required();
    app.add_option("--out", out_dir, "output directory (overrides [output] dir)");
    app.add_option("--controller", controller, "dual-full, dual-reduced or low-gain")
        ->check(CLI::IsMember({"dual-full", "dual-reduced", "low-gain"}));
    app.add_option("--override", overrides, "section.key=value applied on top of the file")->take_all();

    app.add_subcommand("mesh", "write simulation and design meshes");
    app.add_subcommand("flow", "solve the steady flow and export it");
    std::vector<double> epsilons;
    auto* synth = app.add_subcommand("synth", "design a controller and export it");
    synth->add_option("--epsilon-scan", epsilons,
                      "print the low-gain closed-loop abscissa on the design plant for these epsilons instead")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    app.add_subcommand("simulate", "run the closed loop and export trajectories and metrics");
    app.add_subcommand("report", "compare all three controllers");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }
    const std::string stage = app.get_subcommands().front()->get_name();

    RunConfig config;
    try {
        config = load_config(config_path, overrides);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    const fs::path out = out_dir.empty() ? fs::path(config.output_dir) : fs::path(out_dir);
    std::optional<ControllerKind> kind;
    if (!controller.empty()) {
        kind = parse_controller_kind(controller);
    }

    const bool existed = fs::exists(out);
    auto cleanup = [&] {
        std::error_code ec;
        if (!existed && fs::is_directory(out, ec) && fs::is_empty(out, ec)) {
            fs::remove(out, ec);
        }
    };
    try {
        fs::create_directories(out);
        return run(stage, config, out, kind, epsilons);
    } catch (const ConfigError& e) {
        cleanup();
        std::cerr << stage << ": config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        cleanup();
        std::cerr << stage << ": failed: " << e.what() << '\n';
        return kExitNumeric;
    }
}
