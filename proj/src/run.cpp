#include "vertexflow/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <memory>
#include <numeric>

#include <fmt/format.h>

#include "vertexflow/io.hpp"
#include "vertexflow/log.hpp"
#include "vertexflow/verify.hpp"

namespace vertexflow {

namespace {

std::string step_file(const std::string& dir, const std::string& stem, int step, const char* ext) {
    return (std::filesystem::path(dir) / fmt::format("{}_{:05d}.{}", stem, step, ext)).string();
}

void write_snapshot(const FlowProblem& prob, const SimState& st, const std::vector<double>* balance,
                    const std::string& path) {
    const auto po = st.oil_pressure(prob.model());
    const std::vector<NamedField> pf{{"s", st.S}, {"p", st.P}, {"p_o", po}};
    std::vector<NamedField> cf{{"K", prob.permeability()}};
    if (balance) cf.push_back({"mass_balance", *balance});
    write_vtk(prob.mesh(), pf, cf, path, fmt::format("vertexflow t={}", st.t));
}

}  // namespace

RunSummary run_problem(const FlowProblem& prob, const CaseConfig& cfg, const RunOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string dir = opt.output_dir.empty() ? cfg.output.directory : opt.output_dir;
    std::unique_ptr<CsvWriter> steplog;
    if (opt.write_outputs) {
        std::filesystem::create_directories(dir);
        steplog = std::make_unique<CsvWriter>(
            (std::filesystem::path(dir) / "steps.csv").string(),
            std::vector<std::string>{"step", "t", "picard_iterations", "gmres_iterations", "min_s", "max_s",
                                     "mass_residual", "wall_seconds"});
    }
    const auto& mb_steps = opt.mass_balance_steps.empty() ? cfg.output.mass_balance_steps : opt.mass_balance_steps;
    const auto well_elem = well_elements(prob);

    RunSummary sum;
    SimState st = initialize(prob);
    const auto init_mp = max_principle_monitor(st.S, prob.model());
    sum.min_s = init_mp.min_s;
    sum.max_s = init_mp.max_s;
    const auto& m = prob.masses().m;
    sum.mass_tolerance = 10.0 * cfg.picard.tol * std::accumulate(m.begin(), m.end(), 0.0);
    if (opt.write_outputs && cfg.output.vtk_stride > 0) write_snapshot(prob, st, nullptr, step_file(dir, cfg.name, 0, "vtk"));

    const int steps = cfg.time.num_steps();
    for (int k = 0; k < steps; ++k) {
        StepResult r = picard_step(prob, st, cfg.time.tau, cfg.picard, cfg.solver);
        const StepInfo& in = r.info;
        sum.picard_iterations.push_back(in.picard_iterations);
        sum.gmres_iterations.push_back(in.gmres_iterations);
        sum.min_s = std::min(sum.min_s, in.min_s);
        sum.max_s = std::max(sum.max_s, in.max_s);
        sum.violation = sum.violation || in.violation;
        if (std::isfinite(in.mass_residual)) sum.max_mass_residual = std::max(sum.max_mass_residual, std::abs(in.mass_residual));
        log::info("step", fmt::format("n={} t={:g} picard={} gmres={} S=[{:.6f}, {:.6f}] mass={:.3e}{}", in.step, in.t,
                                      in.picard_iterations, in.gmres_iterations, in.min_s, in.max_s, in.mass_residual,
                                      in.violation ? " MAX-PRINCIPLE VIOLATION" : ""));
        if (steplog)
            steplog->row({double(in.step), in.t, double(in.picard_iterations), double(in.gmres_iterations), in.min_s,
                          in.max_s, in.mass_residual, in.wall_seconds});

        std::vector<double> balance;
        const bool want_balance = std::find(mb_steps.begin(), mb_steps.end(), in.step) != mb_steps.end();
        if (want_balance) {
            balance = local_mass_balance(prob, st, r.state, in.upwind, in.s_iter, in.p_iter, cfg.time.tau);
            MassBalanceStat ms;
            ms.step = in.step;
            ms.t = in.t;
            ms.global_residual = in.mass_residual;
            for (std::size_t e = 0; e < balance.size(); ++e) {
                double& slot = well_elem[e] ? ms.max_well : ms.max_offwell;
                slot = std::max(slot, std::abs(balance[e]));
                ms.sum += balance[e];
            }
            log::info("balance", fmt::format("step {}: max|m(E)| off-well={:.3e} well={:.3e} sum={:.3e}", ms.step,
                                             ms.max_offwell, ms.max_well, ms.sum));
            if (opt.write_outputs) {
                CsvWriter csv(step_file(dir, "mass_balance", in.step, "csv"),
                              {"element", "cx", "cy", "cz", "well", "m"});
                for (std::size_t e = 0; e < balance.size(); ++e) {
                    const Point c = prob.mesh().element_centroid(e);
                    csv.row({double(e), c[0], c[1], c[2], double(well_elem[e]), balance[e]});
                }
            }
            if (opt.keep_element_balance) ms.per_element = balance;
            sum.balance.push_back(std::move(ms));
        }

        const bool last = k + 1 == steps;
        if (opt.write_outputs && cfg.output.vtk_stride > 0 && (in.step % cfg.output.vtk_stride == 0 || last)) {
            write_snapshot(prob, r.state, want_balance ? &balance : nullptr, step_file(dir, cfg.name, in.step, "vtk"));
            if (cfg.output.probe) {
                const auto& pr = *cfg.output.probe;
                const auto samples = probe_line(prob.mesh(), r.state.S, pr.from, pr.to, pr.samples);
                CsvWriter csv(step_file(dir, "probe", in.step, "csv"), {"arc", "x", "y", "z", "s"});
                for (const auto& s : samples) csv.row({s.arc, s.x[0], s.x[1], s.x[2], s.value});
            }
        }
        st = std::move(r.state);
    }
    sum.steps = steps;
    sum.final_state = std::move(st);
    sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sum;
}

RunSummary run_case(const CaseConfig& cfg, const RunOptions& opt) {
    const FlowProblem prob = build_problem(cfg);
    log::info("case", fmt::format("{}: {}D, {} vertices, {} elements, {} steps of {} s", cfg.name, cfg.dim,
                                  prob.mesh().num_vertices(), prob.mesh().num_elements(), cfg.time.num_steps(),
                                  cfg.time.tau));
    return run_problem(prob, cfg, opt);
}

}  // namespace vertexflow
