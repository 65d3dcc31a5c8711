#pragma once

#include <array>
#include <span>
#include <vector>

#include "vertexflow/driver.hpp"
#include "vertexflow/mesh.hpp"
#include "vertexflow/physics.hpp"
#include "vertexflow/problem.hpp"

namespace vertexflow {

/// Smooth exact solution on the unit square used to measure convergence.
///   s = 0.4 + 0.4xy + 0.2 cos(t+x)
///   p = 2 + x^2 y - y^2 + x^2 sin(y+t) - cos(t)/3 + cos(t+1)/3 - 11/6
/// with phi = 2, K = 1, unit viscosities and the quadratic model
/// (theta = 2, p_d = 50, R = 0.05).
class ManufacturedCase {
public:
    ManufacturedCase();

    double phi() const { return 2.0; }
    double permeability() const { return 1.0; }
    const QuadraticModel& model() const { return model_; }
    FluidPair fluids() const { return {1.0, 1.0}; }

    double s(const Point& x, double t) const;
    double p(const Point& x, double t) const;
    std::array<double, 2> grad_s(const Point& x, double t) const;
    std::array<double, 2> grad_p(const Point& x, double t) const;

    /// (f1, f2) source densities of the wetting and non-wetting equations.
    std::array<double, 2> sources(const Point& x, double t) const;

    /// Flow problem on an n x n structured mesh with exact Dirichlet data on
    /// the whole boundary and the exact field as initial state.
    FlowProblem make_problem(int n) const;

private:
    QuadraticModel model_;
};

struct ErrorNorms {
    double l2_s = 0.0;
    double l2_p = 0.0;
    double h1_s = 0.0;
    double h1_p = 0.0;
};

using ScalarField = std::function<double(const Point&)>;
using GradientField = std::function<Point(const Point&)>;

/// L2 and full H1 (L2 plus seminorm) errors of nodal P1 fields against exact
/// fields, by a degree-2 quadrature on every element.
ErrorNorms error_norms(const Mesh& mesh, std::span<const double> S, std::span<const double> P, const ScalarField& s,
                       const GradientField& grad_s, const ScalarField& p, const GradientField& grad_p);

/// The same norms of u_h - I_h u, the distance to the nodal interpolant of
/// the exact fields. This discrete error isolates the scheme from the P1
/// approximation error and is typically much smaller in H1.
ErrorNorms interpolant_error_norms(const Mesh& mesh, std::span<const double> S, std::span<const double> P,
                                   const ScalarField& s, const ScalarField& p);

/// sqrt(int (u - f)^2) and sqrt(int |grad u - g|^2) for one nodal field.
std::array<double, 2> field_error(const Mesh& mesh, std::span<const double> u, const ScalarField& f,
                                  const GradientField& g);

struct RateRow {
    double h = 0.0;
    std::size_t vertices = 0;
    double tau = 0.0;
    ErrorNorms err;
    /// Rates against the previous row; NaN on the first row.
    ErrorNorms rate;
    /// Errors against the nodal interpolant, and their rates.
    ErrorNorms discrete;
    ErrorNorms discrete_rate;
    int steps = 0;
    double wall_seconds = 0.0;
};

struct RateTable {
    std::vector<RateRow> rows;
};

/// log(e_coarse / e_fine) / log(h_coarse / h_fine); NaN if undefined.
double convergence_rate(double e_coarse, double e_fine, double h_coarse, double h_fine);

/// Fills the rate columns of a table whose rows already carry errors.
void compute_rates(RateTable& table);

/// Runs the manufactured case with tau = h on an n x n mesh for each level.
RateTable convergence_study(std::span<const int> levels, double T, const PicardConfig& picard,
                            const SolverConfig& solver);

/// Element-wise wetting-phase balance of one accepted step:
/// m(E) = int_E phi (s^n - s^{n-1})/tau - int_{dE} eta_w K grad p^n . n - int_E q_w,
/// with vertex quadrature for the volume terms. Face fluxes average the two
/// adjacent elements' K grad p and use the mobility the accepted system gave
/// the face's node pair (upwind node from `upwind`, saturation from `s_iter`).
/// Pairs the scheme does not couple (zero coefficient) take the upwind rule at
/// the same iterate. Faces with several pairs (3D) use the mean; boundary
/// faces carry no flux.
std::vector<double> local_mass_balance(const FlowProblem& problem, const SimState& prev, const SimState& cur,
                                       const UpwindSelection& upwind, std::span<const double> s_iter,
                                       std::span<const double> p_iter, double tau);

/// Elements with at least one vertex inside a well's support.
std::vector<char> well_elements(const FlowProblem& problem);

}  // namespace vertexflow
