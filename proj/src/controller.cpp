#include "roomctl/controller.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

#include <Eigen/LU>
#include <json.hpp>

#include "roomctl/errors.hpp"
#include "roomctl/io.hpp"

namespace roomctl {

InternalModel build_internal_model(const std::vector<double>& frequencies, int outputs) {
    if (frequencies.empty()) {
        throw InvalidParameter("internal model: need at least one frequency");
    }
    if (outputs < 1) {
        throw InvalidParameter("internal model: output count must be at least 1");
    }
    std::set<double> seen;
    for (double w : frequencies) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw InvalidParameter("internal model: frequencies must be positive and finite");
        }
        if (!seen.insert(w).second) {
            throw InvalidParameter("internal model: repeated frequency " + std::to_string(w));
        }
    }
    const Eigen::Index p = outputs;
    const auto q = static_cast<Eigen::Index>(frequencies.size());
    InternalModel m;
    m.frequencies = frequencies;
    m.outputs = outputs;
    m.G1 = Matrix::Zero(2 * p * q, 2 * p * q);
    m.K1 = Matrix::Zero(p, 2 * p * q);
    const Matrix eye = Matrix::Identity(p, p);
    for (Eigen::Index k = 0; k < q; ++k) {
        const Eigen::Index o = 2 * p * k;
        const double w = frequencies[static_cast<std::size_t>(k)];
        m.G1.block(o, o + p, p, p) = w * eye;
        m.G1.block(o + p, o, p, p) = -w * eye;
        m.K1.block(0, o, p, p) = eye;
    }
    return m;
}

std::string to_string(ControllerKind kind) {
    switch (kind) {
    case ControllerKind::DualFull:
        return "dual-full";
    case ControllerKind::DualReduced:
        return "dual-reduced";
    case ControllerKind::LowGain:
        return "low-gain";
    }
    return "unknown";
}

ControllerKind parse_controller_kind(const std::string& text) {
    for (auto k : {ControllerKind::DualFull, ControllerKind::DualReduced, ControllerKind::LowGain}) {
        if (text == to_string(k)) {
            return k;
        }
    }
    throw InvalidParameter("unknown controller '" + text + "' (expected dual-full, dual-reduced or low-gain)");
}

void ControllerRealization::validate() const {
    if (G1.rows() != G1.cols() || G2.rows() != G1.rows() || K.cols() != G1.rows()) {
        throw DimensionMismatch("controller blocks do not conform: G1 " + std::to_string(G1.rows()) + "x" +
                                std::to_string(G1.cols()) + ", G2 " + std::to_string(G2.rows()) + "x" +
                                std::to_string(G2.cols()) + ", K " + std::to_string(K.rows()) + "x" +
                                std::to_string(K.cols()));
    }
}

namespace {

// Observer part of the controller: ż = G1 z + G2 e, u = K z with
//   G1 = [[G1_im, G2_im C_K], [0, A_K + L C_K]], G2 = [G2_im; L], K = [K1, -K2].
ControllerRealization wire_dual(ControllerKind kind, const InternalModel& im, const Matrix& g2_im,
                                const Matrix& a_k, const Matrix& l, const Matrix& c_k, const Matrix& k2) {
    const Eigen::Index nz = im.dimension();
    const Eigen::Index nr = a_k.rows();
    ControllerRealization c;
    c.kind = kind;
    c.G1 = Matrix::Zero(nz + nr, nz + nr);
    c.G1.topLeftCorner(nz, nz) = im.G1;
    c.G1.topRightCorner(nz, nr) = g2_im * c_k;
    c.G1.bottomRightCorner(nr, nr) = a_k + l * c_k;
    c.G2.resize(nz + nr, g2_im.cols());
    c.G2 << g2_im, l;
    c.K.resize(im.K1.rows(), nz + nr);
    c.K << im.K1, -k2;
    c.validate();
    return c;
}

} // namespace

DualObserverDesign synthesize_dual_observer(const StateSpace& design, const InternalModel& model,
                                            const DualObserverParameters& params) {
    design.validate();
    const Eigen::Index n = design.A.rows();
    const Eigen::Index m = design.B.cols();
    const Eigen::Index p = design.C.rows();
    if (m != p) {
        throw DimensionMismatch("dual observer design needs as many inputs as outputs (got " + std::to_string(m) +
                                " and " + std::to_string(p) + ")");
    }
    if (model.outputs != p) {
        throw DimensionMismatch("internal model built for " + std::to_string(model.outputs) +
                                " outputs, plant has " + std::to_string(p));
    }
    if (!(params.r1 > 0.0) || !(params.r2 > 0.0) || params.alpha1 < 0.0 || params.alpha2 < 0.0) {
        throw InvalidParameter("dual observer: R1, R2 must be positive and α1, α2 nonnegative");
    }
    if (params.order < 1 || params.order > n) {
        throw InvalidParameter("dual observer: reduced order must lie in [1, " + std::to_string(n) + "]");
    }
    if (design.D.norm() != 0.0) {
        throw InvalidParameter("dual observer: design plant must have zero feedthrough");
    }

    DualObserverDesign out;
    const Matrix r1 = params.r1 * Matrix::Identity(m, m);
    const Matrix r2 = params.r2 * Matrix::Identity(p, p);

    out.control = solve_riccati_control(design.A, design.B, r1, Matrix::Identity(n, n), params.alpha1, params.riccati);
    out.K2 = -out.control.gain;

    const Eigen::Index nz = model.dimension();
    Matrix a_s = Matrix::Zero(nz + n, nz + n);
    a_s.topLeftCorner(nz, nz) = model.G1;
    a_s.bottomLeftCorner(n, nz) = design.B * model.K1;
    a_s.bottomRightCorner(n, n) = design.A;
    Matrix c_s = Matrix::Zero(p, nz + n);
    c_s.rightCols(n) = design.C;

    out.filter = solve_riccati_filter(a_s, c_s, r2, Matrix::Identity(nz + n, nz + n), params.alpha2, params.riccati);
    const Matrix g2_l = -out.filter.gain;
    const Matrix g2_im = g2_l.topRows(nz);
    const Matrix l = g2_l.bottomRows(n);

    const Matrix a_k = design.A + design.B * out.K2;
    out.full = wire_dual(ControllerKind::DualFull, model, g2_im, a_k, l, design.C, out.K2);

    StateSpace observer;
    observer.A = a_k;
    observer.B = l;
    observer.C.resize(p + m, n);
    observer.C << design.C, out.K2;
    observer.D = Matrix::Zero(p + m, p);
    out.reduction = balanced_truncation(observer, params.order);
    const StateSpace& red = out.reduction.reduced;
    out.reduced = wire_dual(ControllerKind::DualReduced, model, g2_im, red.A, red.B, red.C.topRows(p),
                            red.C.bottomRows(m));
    return out;
}

ControllerRealization synthesize_low_gain(const std::vector<ComplexMatrix>& transfer_values,
                                          const InternalModel& model, double epsilon) {
    if (!(epsilon > 0.0)) {
        throw InvalidParameter("low-gain controller: ε must be positive");
    }
    if (transfer_values.size() != model.frequencies.size()) {
        throw DimensionMismatch("low-gain controller: one transfer value per frequency required");
    }
    const Eigen::Index p = model.outputs;
    ControllerRealization c;
    c.kind = ControllerKind::LowGain;
    c.G1 = model.G1;
    c.G2 = Matrix::Zero(model.dimension(), p);
    c.K = Matrix::Zero(p, model.dimension());
    for (std::size_t k = 0; k < transfer_values.size(); ++k) {
        const ComplexMatrix& pk = transfer_values[k];
        if (pk.rows() != p || pk.cols() != p) {
            throw DimensionMismatch("low-gain controller: transfer values must be p×p");
        }
        Eigen::FullPivLU<ComplexMatrix> lu(pk);
        const double scale = pk.cwiseAbs().maxCoeff();
        if (scale == 0.0 || !lu.isInvertible() || lu.rcond() < 1e-12) {
            throw NumericFailure("low-gain controller: P(iω) is singular at ω = " +
                                 std::to_string(model.frequencies[k]) + " (transmission zero)");
        }
        const ComplexMatrix inv = lu.inverse();
        const auto o = static_cast<Eigen::Index>(2 * p * static_cast<Eigen::Index>(k));
        c.G2.block(o, 0, p, p) = -Matrix::Identity(p, p);
        c.K.block(0, o, p, p) = epsilon * inv.real();
        c.K.block(0, o + p, p, p) = epsilon * inv.imag();
    }
    c.validate();
    return c;
}

double internal_model_defect(const ControllerRealization& ctrl, const std::vector<double>& frequencies) {
    const ComplexVector ev = eigenvalues(ctrl.G1);
    double worst = 0.0;
    for (double w : frequencies) {
        for (double sign : {1.0, -1.0}) {
            const Complex target(0.0, sign * w);
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < ev.size(); ++i) {
                best = std::min(best, std::abs(ev(i) - target));
            }
            worst = std::max(worst, best);
        }
    }
    return worst;
}

void export_controller(const ControllerRealization& ctrl, const std::string& dir, const std::string& metadata_json) {
    ctrl.validate();
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(metadata_json.empty() ? "{}" : metadata_json);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidParameter(std::string("controller metadata is not valid JSON: ") + e.what());
    }
    nlohmann::json doc = {{"label", to_string(ctrl.kind)},
                          {"dimension", ctrl.dimension()},
                          {"inputs", ctrl.inputs()},
                          {"outputs", ctrl.outputs()},
                          {"metadata", meta}};
    const std::filesystem::path root(dir);
    write_file(root / "G1.coo", [&](std::ostream& o) { write_coordinate(ctrl.G1, o); });
    write_file(root / "G2.coo", [&](std::ostream& o) { write_coordinate(ctrl.G2, o); });
    write_file(root / "K.coo", [&](std::ostream& o) { write_coordinate(ctrl.K, o); });
    write_file(root / "controller.json", [&](std::ostream& o) { o << doc.dump(2) << '\n'; });
}

ControllerRealization import_controller(const std::string& dir) {
    const std::filesystem::path root(dir);
    nlohmann::json doc;
    read_file(root / "controller.json", [&](std::istream& in) {
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw Error("controller.json: " + std::string(e.what()));
        }
    });
    ControllerRealization c;
    Eigen::Index n = 0;
    Eigen::Index ni = 0;
    Eigen::Index no = 0;
    try {
        c.kind = parse_controller_kind(doc.at("label").get<std::string>());
        n = doc.at("dimension").get<Eigen::Index>();
        ni = doc.at("inputs").get<Eigen::Index>();
        no = doc.at("outputs").get<Eigen::Index>();
    } catch (const nlohmann::json::exception& e) {
        throw Error("controller.json: " + std::string(e.what()));
    }
    read_file(root / "G1.coo", [&](std::istream& in) { c.G1 = read_coordinate_dense(in, n, n); });
    read_file(root / "G2.coo", [&](std::istream& in) { c.G2 = read_coordinate_dense(in, n, ni); });
    read_file(root / "K.coo", [&](std::istream& in) { c.K = read_coordinate_dense(in, no, n); });
    c.validate();
    return c;
}

} // namespace roomctl
