#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "roomctl/fem.hpp"
#include "roomctl/lti.hpp"
#include "roomctl/mesh.hpp"

namespace roomctl {

/// Shape functions of the temperature model: distributed control b,
/// Neumann disturbance profile b_d on the inlet and observation weights c.
struct PlantShapes {
    std::vector<ShapeSpec> controls;
    std::vector<ShapeSpec> disturbances; // boundary shapes on the inlet
    std::vector<ShapeSpec> observations;
};

/// Observation weight variants of the room experiment.
enum class ObservationSetup { Near, Far };

/// b = χ on [0,0.05]×[0.1,0.4], b_d = 1 on the inlet, and c = 0.2⁻² χ on
/// [0.7,0.9]×[0.1,0.3] (Near) or on [0.1,0.3]×[0.7,0.9] (Far).
PlantShapes room_shapes(ObservationSetup setup);

/// Semidiscrete temperature model on the Dirichlet-reduced P2 space:
///   M θ' = A θ + B u + B_d w_d,   y = C θ
struct GeneralizedPlant {
    SparseMatrix M;
    SparseMatrix A; // -(α K + N)
    Matrix B;
    Matrix Bd;
    Matrix C;
    Matrix D;
    Matrix Dd;
    double alpha = 0.0; // 1/(Re Pr)
    double reynolds = 0.0;
    double prandtl = 0.0;
    DofMap dofs;

    [[nodiscard]] Eigen::Index states() const { return M.rows(); }
    [[nodiscard]] Eigen::Index inputs() const { return B.cols(); }
    [[nodiscard]] Eigen::Index outputs() const { return C.rows(); }
    [[nodiscard]] Eigen::Index disturbances() const { return Bd.cols(); }
};

GeneralizedPlant build_plant(const Mesh& mesh, const VectorField& velocity, double reynolds, double prandtl,
                             const PlantShapes& shapes);

/// Mass-Cholesky congruence M = L Lᵀ: (L⁻¹ A L⁻ᵀ, L⁻¹ B, C L⁻ᵀ, D).
StateSpace to_standard_form(const GeneralizedPlant& plant);

/// Same congruence applied to the disturbance input map (L⁻¹ B_d).
Matrix standard_disturbance_map(const GeneralizedPlant& plant);

struct SpectrumOptions {
    Eigen::Index dense_limit = 2000;
    double shift = 1.0;        // shift-invert pole for the iterative path
    Eigen::Index krylov_dim = 0; // 0 selects max(4k + 40, 80)
    int max_restarts = 200;
    double tolerance = 1e-10;
};

/// k eigenvalues of the pencil (A, M) with the largest real part, sorted by
/// decreasing real part. Dense QR below `dense_limit` states, restarted
/// shift-invert Arnoldi above.
ComplexVector rightmost_spectrum(const GeneralizedPlant& plant, Eigen::Index k, const SpectrumOptions& options = {});

/// Iterative path of rightmost_spectrum for an arbitrary pencil (A, M).
ComplexVector shift_invert_rightmost(const SparseMatrix& a, const SparseMatrix& m, Eigen::Index k,
                                     const SpectrumOptions& options);

/// P(s) = C (sM - A)⁻¹ B by a sparse complex solve.
ComplexMatrix transfer_value(const GeneralizedPlant& plant, Complex s);

/// Writes M.coo, A.coo, B.coo, Bd.coo, C.coo and plant.json into `dir`.
void export_plant(const GeneralizedPlant& plant, const std::string& dir, const std::string& metadata_json);

} // namespace roomctl
