#include "vertexflow/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "vertexflow/log.hpp"

namespace vertexflow {

std::vector<double> SimState::oil_pressure(const ConstitutiveModel& model) const {
    std::vector<double> po(P.size());
    for (std::size_t i = 0; i < P.size(); ++i) po[i] = P[i] + model.capillary_pressure(S[i]);
    return po;
}

std::vector<double> SimState::oil_saturation() const {
    std::vector<double> so(S.size());
    for (std::size_t i = 0; i < S.size(); ++i) so[i] = 1.0 - S[i];
    return so;
}

int TimeConfig::num_steps() const {
    if (!(tau > 0.0) || !(T >= tau * (1.0 - 1e-12)))
        throw InvalidConfig(fmt::format("time config needs 0 < tau <= T (tau={}, T={})", tau, T));
    return static_cast<int>(std::ceil(T / tau - 1e-9));
}

SimState initialize(const FlowProblem& problem) {
    const Mesh& mesh = problem.mesh();
    SimState st;
    st.S.resize(mesh.num_vertices());
    st.P.resize(mesh.num_vertices());
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
        st.S[i] = problem.initial_saturation()(mesh.vertex(i), 0.0);
        st.P[i] = problem.initial_pressure()(mesh.vertex(i), 0.0);
    }
    return st;
}

MaxPrinciple max_principle_monitor(std::span<const double> S, const ConstitutiveModel& model, double eps) {
    MaxPrinciple mp;
    if (S.empty()) return mp;
    const auto [lo, hi] = std::minmax_element(S.begin(), S.end());
    mp.min_s = *lo;
    mp.max_s = *hi;
    mp.violation = mp.min_s < model.s_rw() - eps || mp.max_s > 1.0 - model.s_ro() + eps;
    return mp;
}

double global_mass_residual(const FlowProblem& problem, std::span<const double> s_prev, std::span<const double> s_cur,
                            const NodalSources& sources, double tau) {
    const auto& m = problem.masses().m;
    const double phi = problem.porosity();
    double acc = 0.0, src = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        acc += m[i] * phi * (s_cur[i] - s_prev[i]) / tau;
        src += m[i] * sources.wetting[i];
    }
    return acc - src;
}

double last_node_saturation(const BlockSystem& system, std::span<const double> p) {
    const auto& row = system.last_wetting_row;
    double acc = row.rhs;
    for (const auto& [j, v] : row.ksp) acc -= v * p[j];
    return acc / row.kss_diag;
}

namespace {

struct MaxDiff {
    double value = 0.0;
    std::size_t at = 0;
};

MaxDiff max_abs_diff(std::span<const double> a, std::span<const double> b) {
    MaxDiff d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double v = std::abs(a[i] - b[i]);
        if (v > d.value) d = {v, i};
    }
    return d;
}

double max_abs(std::span<const double> a) {
    double d = 0.0;
    for (double v : a) d = std::max(d, std::abs(v));
    return d;
}

}  // namespace

StepResult picard_step(const FlowProblem& problem, const SimState& prev, double tau, const PicardConfig& picard,
                       const SolverConfig& solver) {
    if (!(picard.tol > 0.0)) throw InvalidConfig("Picard tolerance must be positive");
    const auto t0 = std::chrono::steady_clock::now();
    const Mesh& mesh = problem.mesh();
    const double t = prev.t + tau;
    const auto ctx = problem.context(tau);
    const NodalSources sources = problem.step_sources(prev.S, t);
    const double pscale = picard.pressure_scale > 0.0 ? picard.pressure_scale : std::max(1.0, max_abs(prev.P));

    std::vector<double> s_dir, p_dir;
    const auto& dir = problem.dirichlet();
    if (dir) {
        for (int node : dir->nodes) {
            s_dir.push_back(dir->saturation(mesh.vertex(node), t));
            p_dir.push_back(dir->pressure(mesh.vertex(node), t));
        }
    }

    StepResult out;
    StepInfo& info = out.info;
    info.step = prev.n + 1;
    info.t = t;
    std::vector<double> s_k = prev.S, p_k = prev.P;
    double ds = 0.0, dp = 0.0;
    std::size_t worst_s = 0, worst_p = 0;
    bool converged = false;
    UpwindSelection selection;
    for (int k = 1; k <= picard.max_iter; ++k) {
        const bool freeze = picard.freeze_upwind_after > 0 && k > picard.freeze_upwind_after;
        BlockSystem sys = freeze ? assemble_system(ctx, sources, prev.S, s_k, p_k, &selection)
                                 : assemble_system(ctx, sources, prev.S, s_k, p_k, nullptr, &selection);
        if (freeze && !info.upwind_frozen) {
            info.upwind_frozen = true;
            log::debug("picard", fmt::format("step {}: upwind selection frozen at iteration {}", info.step, k));
        }
        if (dir) sys = apply_dirichlet(sys, mesh, dir->nodes, s_dir, p_dir);
        BlockSolution sol = solve_block(sys, solver, s_k, p_k);
        if (sol.report.direct_fallback) ++info.direct_fallbacks;
        if (sys.has_mean_constraint) sol.s.back() = last_node_saturation(sys, sol.p);
        info.gmres_iterations += sol.report.iterations;
        info.picard_iterations = k;
        const MaxDiff mds = max_abs_diff(sol.s, s_k);
        const MaxDiff mdp = max_abs_diff(sol.p, p_k);
        ds = mds.value;
        dp = mdp.value / pscale;
        worst_s = mds.at;
        worst_p = mdp.at;
        info.s_iter = std::move(s_k);
        info.p_iter = std::move(p_k);
        s_k = std::move(sol.s);
        p_k = std::move(sol.p);
        if (log::level() <= log::Level::debug)
            log::debug("picard", fmt::format("step {} iter {}: dS={:.3e} at node {} (S={:.6f}) dP/scale={:.3e} at node {} gmres={}",
                                             info.step, k, ds, worst_s, s_k[worst_s], dp, worst_p,
                                             sol.report.iterations));
        if (!std::isfinite(ds) || !std::isfinite(dp))
            throw NumericState(fmt::format("non-finite Picard increment at step {} iteration {}", info.step, k));
        if (std::max(ds, dp) < picard.tol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw PicardDivergence(fmt::format(
            "Picard iteration did not converge in {} iterations at step {} (t={}): last |dS|={:.3e} at node {}, "
            "|dP|/scale={:.3e} at node {}",
            picard.max_iter, info.step, t, ds, worst_s, dp, worst_p));

    info.upwind = std::move(selection);
    out.state.t = t;
    out.state.n = prev.n + 1;
    out.state.S = std::move(s_k);
    out.state.P = std::move(p_k);
    const MaxPrinciple mp = max_principle_monitor(out.state.S, problem.model());
    info.min_s = mp.min_s;
    info.max_s = mp.max_s;
    info.violation = mp.violation;
    info.mass_residual = dir ? std::numeric_limits<double>::quiet_NaN()
                             : global_mass_residual(problem, prev.S, out.state.S, sources, tau);
    info.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

SimState advance(const FlowProblem& problem, SimState state, const TimeConfig& time, const PicardConfig& picard,
                 const SolverConfig& solver, std::span<const StepObserver> observers) {
    const int steps = time.num_steps();
    const int stride = std::max(1, time.output_stride);
    for (int s = 0; s < steps; ++s) {
        StepResult r = picard_step(problem, state, time.tau, picard, solver);
        const StepInfo& in = r.info;
        log::info("step", fmt::format("n={} t={:g} picard={} gmres={} S=[{:.6f}, {:.6f}]{}", in.step, in.t,
                                      in.picard_iterations, in.gmres_iterations, in.min_s, in.max_s,
                                      in.violation ? " MAX-PRINCIPLE VIOLATION" : ""));
        if (in.violation)
            log::warn("step", fmt::format("saturation left [{}, {}] at step {}", problem.model().s_rw(),
                                          1.0 - problem.model().s_ro(), in.step));
        if (in.step % stride == 0 || s + 1 == steps)
            for (const auto& obs : observers) obs(state, r.state, in);
        state = std::move(r.state);
    }
    return state;
}

}  // namespace vertexflow
