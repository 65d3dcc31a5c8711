#pragma once

#include <functional>
#include <span>
#include <vector>

#include "vertexflow/error.hpp"
#include "vertexflow/problem.hpp"
#include "vertexflow/solver.hpp"

namespace vertexflow {

struct SimState {
    double t = 0.0;
    int n = 0;
    std::vector<double> S;
    std::vector<double> P;

    std::vector<double> oil_pressure(const ConstitutiveModel& model) const;
    std::vector<double> oil_saturation() const;
};

struct PicardConfig {
    double tol = 1e-5;
    int max_iter = 50;
    /// Pressure increments are divided by this before the tolerance test.
    /// Non-positive selects max(1, |P^{n-1}|_inf).
    double pressure_scale = 0.0;
    /// After this many iterations the upwind selection of the last one is
    /// kept fixed, which breaks two-cycles between nearly equipotential
    /// nodes. 0 never freezes.
    int freeze_upwind_after = 20;
};

struct TimeConfig {
    double tau = 0.0;
    double T = 0.0;
    int output_stride = 1;

    int num_steps() const;
};

struct StepInfo {
    int step = 0;
    double t = 0.0;
    int picard_iterations = 0;
    int gmres_iterations = 0;
    int direct_fallbacks = 0;
    double min_s = 0.0;
    double max_s = 0.0;
    bool violation = false;
    /// Global mass identity residual; NaN when Dirichlet rows replace equations.
    double mass_residual = 0.0;
    double wall_seconds = 0.0;
    /// Picard iterate the accepted system was assembled at.
    std::vector<double> s_iter;
    std::vector<double> p_iter;
    /// Upwind nodes of the accepted system.
    UpwindSelection upwind;
    bool upwind_frozen = false;
};

struct StepResult {
    SimState state;
    StepInfo info;
};

struct MaxPrinciple {
    double min_s = 0.0;
    double max_s = 0.0;
    bool violation = false;
};

SimState initialize(const FlowProblem& problem);

StepResult picard_step(const FlowProblem& problem, const SimState& prev, double tau, const PicardConfig& picard,
                       const SolverConfig& solver);

using StepObserver = std::function<void(const SimState& prev, const SimState& cur, const StepInfo& info)>;

/// Steps until t >= T. Observers run after every step whose index is a
/// multiple of the output stride and after the last step.
SimState advance(const FlowProblem& problem, SimState state, const TimeConfig& time, const PicardConfig& picard,
                 const SolverConfig& solver, std::span<const StepObserver> observers = {});

/// The constraint row displaces the last node's wetting equation from the
/// linear system, but that equation still holds for the exact solution; this
/// evaluates S at the last node from it given the solved pressure.
double last_node_saturation(const BlockSystem& system, std::span<const double> p);

MaxPrinciple max_principle_monitor(std::span<const double> S, const ConstitutiveModel& model, double eps = 1e-12);

/// sum_i m_i phi (S^n_i - S^{n-1}_i)/tau - sum_i m_i w_i.
double global_mass_residual(const FlowProblem& problem, std::span<const double> s_prev, std::span<const double> s_cur,
                            const NodalSources& sources, double tau);

}  // namespace vertexflow
