#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vertexflow/mesh.hpp"
#include "vertexflow/physics.hpp"
#include "vertexflow/sparse.hpp"

namespace vertexflow {

/// m_i = |patch_i| / (d+1).
struct LumpedMass {
    std::vector<double> m;
};

/// Node-pair coefficients c_ij = sum_E int_E |grad phi_i . grad phi_j| and the
/// permeability-weighted c_ij(K) = sum_E K_E (...). Symmetric, same pattern;
/// pairs whose coefficient is exactly zero are not stored. Diagonal entries are
/// computed by the same formula but the scheme never reads them.
struct StiffnessCoeffs {
    CsrMatrix c;
    CsrMatrix cK;
};

/// Nodal injection / production rate densities (1/s).
struct WellField {
    std::vector<double> qbar;
    std::vector<double> qund;
    double s_in = 1.0;
};

enum class WellKind { injection, production };

/// Piecewise-constant well on an axis-aligned box with a prescribed integral
/// rate (m^d/s).
struct WellBox {
    std::string name;
    WellKind kind = WellKind::injection;
    Point lo{0, 0, 0};
    Point hi{0, 0, 0};
    double rate = 0.0;
};

/// Right-hand-side source densities of the wetting (saturation) and
/// non-wetting (pressure) equations, per node, before mass weighting.
struct NodalSources {
    std::vector<double> wetting;
    std::vector<double> nonwetting;
};

/// The 2x2 block linear system for the unknown (S_1..S_M, P_1..P_M).
///
/// Row M-1 (zero-based) of the saturation block is the mean-zero pressure
/// constraint. `last_wetting_row` keeps the wetting equation of the last node
/// so a Dirichlet treatment that drops the constraint can restore it.
struct BlockSystem {
    CsrMatrix Kss, Ksp, Kps, Kpp;
    std::vector<double> fs, fp;
    bool has_mean_constraint = true;

    struct Row {
        double kss_diag = 0.0;
        std::vector<std::pair<std::int32_t, double>> ksp;
        double rhs = 0.0;
    } last_wetting_row;

    std::size_t size() const { return fs.size(); }
    CsrMatrix to_csr() const;
    std::vector<double> rhs() const;
};

/// Everything the scheme needs besides the nodal state.
struct SchemeContext {
    const Mesh* mesh = nullptr;
    const LumpedMass* masses = nullptr;
    const StiffnessCoeffs* coeffs = nullptr;
    const TwoPhaseProperties* props = nullptr;
    double tau = 0.0;
    double phi = 0.0;
};

/// Upwind node chosen for every stored pair of the stiffness pattern, in the
/// pattern's CSR order (diagonal slots hold the row node).
struct UpwindSelection {
    std::vector<std::int32_t> wetting;
    std::vector<std::int32_t> nonwetting;
};

LumpedMass lumped_masses(const Mesh& mesh);

/// (d+1)x(d+1) row-major matrix of |E| |g_a . g_b|.
std::vector<double> local_c_matrix(int dim, std::span<const Point> coords);

/// Throws InvalidConfig when the permeability vector is not element-sized
/// or not strictly positive.
StiffnessCoeffs stiffness_coeffs(const Mesh& mesh, std::span<const double> perm_per_element);

/// Nodal densities from well boxes: indicator of the box at each vertex,
/// rescaled so sum_i m_i q_i equals the well's rate exactly.
WellField build_well_field(const Mesh& mesh, const LumpedMass& masses, std::span<const WellBox> wells, double s_in);

double upwind_wetting(double s_i, double s_j, double p_i, double p_j);
double upwind_nonwetting(double s_i, double s_j, double p_i, double p_j, const ConstitutiveModel& model);
/// Same comparison with the capillary pressures already evaluated.
double upwind_nonwetting_pc(double s_i, double s_j, double pot_i, double pot_j);

/// Well source terms with the production fractional flow lagged at S_prev.
NodalSources well_sources(const WellField& wells, const TwoPhaseProperties& props, std::span<const double> s_prev);

/// `frozen`, when given, replaces the potential comparison by a fixed choice of
/// upwind node; mobilities are still evaluated at s_iter. `chosen`, when
/// given, receives the selection used.
BlockSystem assemble_system(const SchemeContext& ctx, const NodalSources& sources, std::span<const double> s_prev,
                            std::span<const double> s_iter, std::span<const double> p_iter,
                            const UpwindSelection* frozen = nullptr, UpwindSelection* chosen = nullptr);

BlockSystem assemble_system(const SchemeContext& ctx, const WellField& wells, std::span<const double> s_prev,
                            std::span<const double> s_iter, std::span<const double> p_iter);

/// Replace saturation and pressure rows of `nodes` by identity rows with the
/// prescribed values. The mean-zero constraint row is dropped; when the last
/// node is not constrained its wetting equation takes the row back.
BlockSystem apply_dirichlet(const BlockSystem& system, const Mesh& mesh, std::span<const int> nodes,
                            std::span<const double> s_values, std::span<const double> p_values);

}  // namespace vertexflow
