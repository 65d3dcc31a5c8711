#pragma once

#include <string>
#include <vector>

#include "vertexflow/config.hpp"
#include "vertexflow/driver.hpp"

namespace vertexflow {

struct MassBalanceStat {
    int step = 0;
    double t = 0.0;
    double max_well = 0.0;
    double max_offwell = 0.0;
    double sum = 0.0;
    double global_residual = 0.0;
    std::vector<double> per_element;
};

struct RunSummary {
    int steps = 0;
    std::vector<int> picard_iterations;
    std::vector<int> gmres_iterations;
    double min_s = 0.0;
    double max_s = 0.0;
    bool violation = false;
    /// Largest |global mass residual| over all steps and the bound it is held to.
    double max_mass_residual = 0.0;
    double mass_tolerance = 0.0;
    std::vector<MassBalanceStat> balance;
    SimState final_state;
    double wall_seconds = 0.0;
};

struct RunOptions {
    bool write_outputs = true;
    /// Overrides the configured output directory when non-empty.
    std::string output_dir;
    /// Overrides the configured mass-balance steps when non-empty.
    std::vector<int> mass_balance_steps;
    /// Keep per-element m(E) in the summary.
    bool keep_element_balance = false;
};

/// Runs a configured case to its final time, writing the step log, VTK
/// snapshots, probes and mass-balance tables as configured.
RunSummary run_case(const CaseConfig& config, const RunOptions& options = {});

/// Same, on an already built problem.
RunSummary run_problem(const FlowProblem& problem, const CaseConfig& config, const RunOptions& options = {});

}  // namespace vertexflow
