#include "roomctl/config.hpp"

#include <charconv>
#include <cmath>
#include <optional>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "roomctl/errors.hpp"

namespace roomctl {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"run", {"name"}},
        {"geometry", {"domain", "inlet_side", "inlet", "outlet_side", "outlet"}},
        {"physics", {"reynolds", "prandtl", "inlet_profile", "flow_tolerance", "flow_max_iterations"}},
        {"shapes", {"control", "disturbance_amplitude", "observation"}},
        {"mesh", {"simulation_n", "design_n"}},
        {"signals", {"frequencies", "reference_cos", "reference_sin", "disturbance_cos", "disturbance_sin"}},
        {"controller", {"type", "alpha1", "alpha2", "r1", "r2", "order", "epsilon"}},
        {"simulation", {"t_end", "dt", "snapshot_times", "tail_fraction"}},
        {"output", {"dir"}},
    };
    return keys;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_number(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || end != t.data() + t.size() || !std::isfinite(v)) {
        throw ConfigError(key + ": expected a number, got '" + text + "'");
    }
    return v;
}

int to_int(const std::string& key, const std::string& text) {
    const double v = to_number(key, text);
    if (v != std::floor(v) || std::abs(v) > 1e9) {
        throw ConfigError(key + ": expected an integer, got '" + text + "'");
    }
    return static_cast<int>(v);
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    if (trim(text).empty()) {
        return out;
    }
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        out.push_back(to_number(key, item));
    }
    return out;
}

Side to_side(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "left") {
        return Side::Left;
    }
    if (t == "right") {
        return Side::Right;
    }
    if (t == "bottom") {
        return Side::Bottom;
    }
    if (t == "top") {
        return Side::Top;
    }
    throw ConfigError(key + ": expected left, right, bottom or top, got '" + text + "'");
}

std::string side_name(Side s) {
    switch (s) {
    case Side::Left:
        return "left";
    case Side::Right:
        return "right";
    case Side::Bottom:
        return "bottom";
    case Side::Top:
        return "top";
    }
    return "left";
}

std::string join(const std::vector<double>& v) {
    std::ostringstream o;
    o.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) {
        o << (i ? "," : "") << v[i];
    }
    return o.str();
}

std::vector<double> row(const Matrix& m) {
    std::vector<double> v(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
        v[static_cast<std::size_t>(k)] = m(0, k);
    }
    return v;
}

Matrix as_row(const std::string& key, const std::vector<double>& v, std::size_t q) {
    if (v.size() != q) {
        throw ConfigError(key + ": expected " + std::to_string(q) + " coefficients (one per frequency), got " +
                          std::to_string(v.size()));
    }
    Matrix m(1, static_cast<Eigen::Index>(q));
    for (std::size_t k = 0; k < q; ++k) {
        m(0, static_cast<Eigen::Index>(k)) = v[k];
    }
    return m;
}

void apply_tree(RunConfig& c, const pt::ptree& tree) {
    for (const auto& [section, body] : tree) {
        const auto known = schema().find(section);
        if (known == schema().end()) {
            throw ConfigError("unknown section [" + section + "]");
        }
        if (!body.data().empty()) {
            throw ConfigError("key '" + section + "' outside of any section");
        }
        for (const auto& [key, node] : body) {
            if (!known->second.count(key)) {
                throw ConfigError("unknown key '" + key + "' in [" + section + "]");
            }
        }
    }
    auto get = [&](const std::string& path) -> std::optional<std::string> {
        if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) {
            return *v;
        }
        return std::nullopt;
    };
    auto num = [&](const std::string& path, double& target) {
        if (auto v = get(path)) {
            target = to_number(path, *v);
        }
    };
    auto integer = [&](const std::string& path, auto& target) {
        if (auto v = get(path)) {
            target = to_int(path, *v);
        }
    };

    if (auto v = get("run.name")) {
        c.name = trim(*v);
    }
    if (auto v = get("geometry.domain")) {
        const auto d = to_list("geometry.domain", *v);
        if (d.size() != 4) {
            throw ConfigError("geometry.domain: expected x0,x1,y0,y1");
        }
        c.geometry.x0 = d[0];
        c.geometry.x1 = d[1];
        c.geometry.y0 = d[2];
        c.geometry.y1 = d[3];
    }
    for (auto [prefix, seg] : {std::pair{std::string("inlet"), &c.geometry.inlet},
                               std::pair{std::string("outlet"), &c.geometry.outlet}}) {
        if (auto v = get("geometry." + prefix + "_side")) {
            seg->side = to_side("geometry." + prefix + "_side", *v);
        }
        if (auto v = get("geometry." + prefix)) {
            const auto d = to_list("geometry." + prefix, *v);
            if (d.size() != 2) {
                throw ConfigError("geometry." + prefix + ": expected lo,hi");
            }
            seg->lo = d[0];
            seg->hi = d[1];
        }
    }

    num("physics.reynolds", c.reynolds);
    num("physics.prandtl", c.prandtl);
    num("physics.flow_tolerance", c.flow_tolerance);
    integer("physics.flow_max_iterations", c.flow_max_iterations);
    if (auto v = get("physics.inlet_profile")) {
        const std::string t = trim(*v);
        if (t == "remap") {
            c.inlet_profile = InletProfileMode::Remapped;
        } else if (t == "literal") {
            c.inlet_profile = InletProfileMode::Literal;
        } else {
            throw ConfigError("physics.inlet_profile: expected remap or literal, got '" + t + "'");
        }
    }

    if (auto v = get("shapes.control")) {
        const auto d = to_list("shapes.control", *v);
        if (d.size() != 4) {
            throw ConfigError("shapes.control: expected x0,x1,y0,y1");
        }
        c.control = ShapeSpec::indicator(d[0], d[1], d[2], d[3]);
    }
    num("shapes.disturbance_amplitude", c.disturbance_amplitude);
    if (auto v = get("shapes.observation")) {
        const std::string t = trim(*v);
        if (t == "c1") {
            c.observation = ObservationSetup::Near;
        } else if (t == "c2") {
            c.observation = ObservationSetup::Far;
        } else {
            throw ConfigError("shapes.observation: expected c1 or c2, got '" + t + "'");
        }
    }

    integer("mesh.simulation_n", c.simulation_n);
    integer("mesh.design_n", c.design_n);

    if (auto v = get("signals.frequencies")) {
        c.signals.frequencies = to_list("signals.frequencies", *v);
    }
    const std::size_t q = c.signals.frequencies.size();
    auto coeffs = [&](const std::string& key, Matrix& target) {
        if (auto v = get("signals." + key)) {
            target = as_row("signals." + key, to_list("signals." + key, *v), q);
        } else if (target.cols() != static_cast<Eigen::Index>(q)) {
            throw ConfigError("signals." + key + ": required when the frequency list changes");
        }
    };
    coeffs("reference_cos", c.signals.ref_cos);
    coeffs("reference_sin", c.signals.ref_sin);
    coeffs("disturbance_cos", c.signals.dist_cos);
    coeffs("disturbance_sin", c.signals.dist_sin);

    if (auto v = get("controller.type")) {
        try {
            c.controller = parse_controller_kind(trim(*v));
        } catch (const InvalidParameter& e) {
            throw ConfigError(std::string("controller.type: ") + e.what());
        }
    }
    num("controller.alpha1", c.dual.alpha1);
    num("controller.alpha2", c.dual.alpha2);
    num("controller.r1", c.dual.r1);
    num("controller.r2", c.dual.r2);
    integer("controller.order", c.dual.order);
    num("controller.epsilon", c.epsilon);

    num("simulation.t_end", c.simulation.t_end);
    num("simulation.dt", c.simulation.dt);
    num("simulation.tail_fraction", c.tail_fraction);
    if (auto v = get("simulation.snapshot_times")) {
        c.simulation.snapshot_times = to_list("simulation.snapshot_times", *v);
    }
    if (auto v = get("output.dir")) {
        c.output_dir = trim(*v);
    }
}

} // namespace

PlantShapes RunConfig::shapes() const {
    PlantShapes s = room_shapes(observation);
    s.controls = {control};
    s.disturbances = {ShapeSpec::boundary_indicator(disturbance_amplitude)};
    return s;
}

FlowSettings RunConfig::flow_settings() const {
    FlowSettings f;
    f.reynolds = reynolds;
    f.profile = inlet_profile;
    f.tolerance = flow_tolerance;
    f.max_iterations = flow_max_iterations;
    return f;
}

void RunConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) {
            throw ConfigError(what);
        }
    };
    try {
        geometry.validate();
    } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("geometry: ") + e.what());
    }
    require(reynolds > 0.0, "physics.reynolds must be positive");
    require(prandtl > 0.0, "physics.prandtl must be positive");
    require(flow_tolerance > 0.0, "physics.flow_tolerance must be positive");
    require(flow_max_iterations >= 1, "physics.flow_max_iterations must be at least 1");
    require(control.x0 < control.x1 && control.y0 < control.y1, "shapes.control must be a nonempty rectangle");
    require(disturbance_amplitude != 0.0, "shapes.disturbance_amplitude must be nonzero");
    for (auto [key, n] : {std::pair{"mesh.simulation_n", simulation_n}, std::pair{"mesh.design_n", design_n}}) {
        require(n >= 5 && n % 2 == 1, std::string(key) + " must be odd and at least 5");
    }
    require(!signals.frequencies.empty(), "signals.frequencies must not be empty");
    std::set<double> seen;
    for (double w : signals.frequencies) {
        require(w > 0.0, "signals.frequencies must be positive");
        require(seen.insert(w).second, "signals.frequencies must be distinct");
    }
    require(dual.alpha1 >= 0.0 && dual.alpha2 >= 0.0, "controller.alpha1/alpha2 must be nonnegative");
    require(dual.r1 > 0.0 && dual.r2 > 0.0, "controller.r1/r2 must be positive");
    require(dual.order >= 1, "controller.order must be at least 1");
    require(epsilon > 0.0, "controller.epsilon must be positive");
    require(simulation.dt > 0.0, "simulation.dt must be positive");
    require(simulation.t_end >= simulation.dt, "simulation.t_end must be at least dt");
    require(tail_fraction > 0.0 && tail_fraction <= 1.0, "simulation.tail_fraction must lie in (0, 1]");
    for (double t : simulation.snapshot_times) {
        require(t >= 0.0 && t <= simulation.t_end, "simulation.snapshot_times must lie in [0, t_end]");
    }
    require(!output_dir.empty(), "output.dir must not be empty");
}

RunConfig parse_config(std::istream& in, const std::vector<std::string>& overrides) {
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    for (const std::string& o : overrides) {
        const auto eq = o.find('=');
        const std::string key = eq == std::string::npos ? "" : trim(o.substr(0, eq));
        const auto dot = key.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot == 0 || dot + 1 == key.size()) {
            throw ConfigError("override '" + o + "' is not of the form section.key=value");
        }
        tree.put(pt::ptree::path_type(key, '.'), trim(o.substr(eq + 1)));
    }
    RunConfig c;
    apply_tree(c, tree);
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config '" + path + "'");
    }
    return parse_config(in, overrides);
}

std::string write_config(const RunConfig& c) {
    std::ostringstream o;
    o.precision(17);
    const Geometry& g = c.geometry;
    o << "[run]\nname = " << c.name << "\n\n";
    o << "[geometry]\ndomain = " << join({g.x0, g.x1, g.y0, g.y1}) << "\ninlet_side = " << side_name(g.inlet.side)
      << "\ninlet = " << join({g.inlet.lo, g.inlet.hi}) << "\noutlet_side = " << side_name(g.outlet.side)
      << "\noutlet = " << join({g.outlet.lo, g.outlet.hi}) << "\n\n";
    o << "[physics]\nreynolds = " << c.reynolds << "\nprandtl = " << c.prandtl << "\ninlet_profile = "
      << (c.inlet_profile == InletProfileMode::Remapped ? "remap" : "literal")
      << "\nflow_tolerance = " << c.flow_tolerance << "\nflow_max_iterations = " << c.flow_max_iterations
      << "\n\n";
    o << "[shapes]\ncontrol = " << join({c.control.x0, c.control.x1, c.control.y0, c.control.y1})
      << "\ndisturbance_amplitude = " << c.disturbance_amplitude
      << "\nobservation = " << (c.observation == ObservationSetup::Near ? "c1" : "c2") << "\n\n";
    o << "[mesh]\nsimulation_n = " << c.simulation_n << "\ndesign_n = " << c.design_n << "\n\n";
    o << "[signals]\nfrequencies = " << join(c.signals.frequencies)
      << "\nreference_cos = " << join(row(c.signals.ref_cos)) << "\nreference_sin = " << join(row(c.signals.ref_sin))
      << "\ndisturbance_cos = " << join(row(c.signals.dist_cos))
      << "\ndisturbance_sin = " << join(row(c.signals.dist_sin)) << "\n\n";
    o << "[controller]\ntype = " << to_string(c.controller) << "\nalpha1 = " << c.dual.alpha1
      << "\nalpha2 = " << c.dual.alpha2 << "\nr1 = " << c.dual.r1 << "\nr2 = " << c.dual.r2
      << "\norder = " << c.dual.order << "\nepsilon = " << c.epsilon << "\n\n";
    o << "[simulation]\nt_end = " << c.simulation.t_end << "\ndt = " << c.simulation.dt
      << "\nsnapshot_times = " << join(c.simulation.snapshot_times) << "\ntail_fraction = " << c.tail_fraction
      << "\n\n";
    o << "[output]\ndir = " << c.output_dir << "\n";
    return o.str();
}

} // namespace roomctl
