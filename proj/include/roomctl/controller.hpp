#pragma once

#include <string>
#include <vector>

#include "roomctl/linalg.hpp"
#include "roomctl/lti.hpp"

namespace roomctl {

/// Internal model of q frequencies for p outputs:
/// G1 = diag(J_1, …, J_q), J_k = [[0, ω_k I_p], [-ω_k I_p, 0]], K1 = [I_p, 0, I_p, 0, …].
struct InternalModel {
    Matrix G1;
    Matrix K1;
    std::vector<double> frequencies;
    int outputs = 1;

    [[nodiscard]] Eigen::Index dimension() const { return G1.rows(); }
};

InternalModel build_internal_model(const std::vector<double>& frequencies, int outputs);

enum class ControllerKind { DualFull, DualReduced, LowGain };

std::string to_string(ControllerKind kind);
/// Accepts "dual-full", "dual-reduced" and "low-gain".
ControllerKind parse_controller_kind(const std::string& text);

/// Error-feedback controller ż = G1 z + G2 e, u = K z.
struct ControllerRealization {
    ControllerKind kind = ControllerKind::DualReduced;
    Matrix G1;
    Matrix G2;
    Matrix K;

    [[nodiscard]] Eigen::Index dimension() const { return G1.rows(); }
    [[nodiscard]] Eigen::Index inputs() const { return G2.cols(); }
    [[nodiscard]] Eigen::Index outputs() const { return K.rows(); }
    void validate() const;
};

struct DualObserverParameters {
    double alpha1 = 1.0;
    double alpha2 = 1.0;
    double r1 = 1.0; // control weight, R1 = r1 I
    double r2 = 1.0; // output noise weight, R2 = r2 I
    Eigen::Index order = 10;
    RiccatiOptions riccati;
};

struct DualObserverDesign {
    ControllerRealization full;
    ControllerRealization reduced;
    BalancedReduction reduction;
    RiccatiSolution control; // Σ
    RiccatiSolution filter;  // Π
    Matrix K2;               // -R1⁻¹ Bᵀ Σ
};

/// Dual observer-based controller for a stable standard-form design plant
/// with as many inputs as outputs. Q1 and Q2 are identities.
DualObserverDesign synthesize_dual_observer(const StateSpace& design, const InternalModel& model,
                                            const DualObserverParameters& params);

/// Low-gain controller: G1 from the internal model, G2 blocks [-I_p; 0],
/// K = ε [Re P(iω_k)⁻¹, Im P(iω_k)⁻¹] per frequency.
ControllerRealization synthesize_low_gain(const std::vector<ComplexMatrix>& transfer_values,
                                          const InternalModel& model, double epsilon);

/// Largest distance from a target eigenvalue ±iω_k to the spectrum of G1.
double internal_model_defect(const ControllerRealization& ctrl, const std::vector<double>& frequencies);

/// Writes G1.coo, G2.coo, K.coo and controller.json. `metadata_json` must be
/// a JSON object; it is stored under the "metadata" key.
void export_controller(const ControllerRealization& ctrl, const std::string& dir, const std::string& metadata_json);
ControllerRealization import_controller(const std::string& dir);

} // namespace roomctl
