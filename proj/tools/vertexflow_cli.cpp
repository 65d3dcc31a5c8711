// Command-line front end: run configured cases, the manufactured-solution
// convergence study, the element mass-balance audit, line probes and
// synthetic permeability rasters.

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <cstdio>
#include <memory>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "vertexflow/config.hpp"
#include "vertexflow/error.hpp"
#include "vertexflow/io.hpp"
#include "vertexflow/kernels.hpp"
#include "vertexflow/log.hpp"
#include "vertexflow/run.hpp"
#include "vertexflow/verify.hpp"

namespace vf = vertexflow;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;

vf::Point to_point(const std::vector<double>& v) {
    if (v.size() < 2 || v.size() > 3) throw vf::InvalidConfig("points need 2 or 3 coordinates");
    vf::Point p{0, 0, 0};
    for (std::size_t d = 0; d < v.size(); ++d) p[d] = v[d];
    return p;
}

void print_summary(const vf::RunSummary& s) {
    std::vector<int> it = s.picard_iterations;
    std::sort(it.begin(), it.end());
    const double median = it.empty() ? 0.0 : (it.size() % 2 ? it[it.size() / 2] : 0.5 * (it[it.size() / 2 - 1] + it[it.size() / 2]));
    fmt::print("steps               {}\n", s.steps);
    fmt::print("picard iterations   median {} max {}\n", median, it.empty() ? 0 : it.back());
    fmt::print("saturation range    [{:.15g}, {:.15g}]{}\n", s.min_s, s.max_s, s.violation ? "  VIOLATION" : "");
    fmt::print("mass residual       max {:.3e} (bound {:.3e})\n", s.max_mass_residual, s.mass_tolerance);
    for (const auto& b : s.balance)
        fmt::print("mass balance step {:>4}  max|m(E)| off-well {:.3e}  well {:.3e}  sum {:.3e}\n", b.step,
                   b.max_offwell, b.max_well, b.sum);
    fmt::print("wall time           {:.2f} s\n", s.wall_seconds);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vertexflow: vertex-scheme simulator for two-phase flow in porous media"};
    app.require_subcommand(1);

    int threads = 1;
    bool quiet = false, verbose = false;
    std::string kernels = "auto";
    app.add_option("--threads", threads, "Worker threads for sparse kernels")->check(CLI::Range(1, 256));
    app.add_flag("-q,--quiet", quiet, "Only print warnings and errors");
    app.add_flag("-v,--verbose", verbose, "Print Picard iteration details");
    app.add_option("--kernels", kernels, "Vector kernel backend: auto, scalar or avx2")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

    auto* run = app.add_subcommand("run", "Run a configured case");
    std::string run_cfg, run_out;
    run->add_option("config", run_cfg, "Case configuration file")->required();
    run->add_option("-o,--output", run_out, "Output directory (overrides the config)");

    auto* mms = app.add_subcommand("mms-convergence", "Manufactured-solution convergence study");
    std::vector<int> levels{4, 8, 16, 32, 64};
    double mms_T = 1.0;
    std::string mms_csv;
    std::string mms_inner = "ilu0";
    mms->add_option("--levels", levels, "Cells per side for each level (h = 1/n, tau = h)")->expected(2, 64);
    mms->add_option("--T", mms_T, "Final time")->check(CLI::PositiveNumber);
    mms->add_option("--csv", mms_csv, "Write the rate table to this CSV file");
    mms->add_option("--inner", mms_inner, "Schur complement solve: ilu0 or direct")
        ->check(CLI::IsMember({"ilu0", "direct"}));

    auto* mb = app.add_subcommand("mass-balance", "Run a case and audit the element-wise mass balance");
    std::string mb_cfg, mb_out;
    std::vector<int> mb_steps;
    mb->add_option("config", mb_cfg, "Case configuration file")->required();
    mb->add_option("--steps", mb_steps, "Steps to audit (defaults to the configured ones, else the last)");
    mb->add_option("-o,--output", mb_out, "Output directory (overrides the config)");

    auto* probe = app.add_subcommand("probe", "Sample a nodal field of a VTK snapshot along a segment");
    std::string probe_file, probe_field = "s", probe_csv;
    std::vector<double> from, to;
    int samples = 101;
    probe->add_option("file", probe_file, "VTK snapshot written by 'run'")->required();
    probe->add_option("--from", from, "Segment start")->required()->expected(2, 3);
    probe->add_option("--to", to, "Segment end")->required()->expected(2, 3);
    probe->add_option("--n", samples, "Number of samples")->check(CLI::Range(2, 1000000));
    probe->add_option("--field", probe_field, "Point field name");
    probe->add_option("--csv", probe_csv, "Write to this file instead of stdout");

    auto* rr = app.add_subcommand("random-raster", "Write a log-uniform random permeability raster");
    std::vector<int> rr_dims{16, 16};
    double rr_lo = 5e-10, rr_hi = 5e-7;
    std::uint64_t rr_seed = 1;
    std::string rr_out;
    rr->add_option("--dims", rr_dims, "Cells per axis")->expected(2, 3)->check(CLI::PositiveNumber);
    rr->add_option("--k-lo", rr_lo, "Smallest permeability (m^2)")->check(CLI::PositiveNumber);
    rr->add_option("--k-hi", rr_hi, "Largest permeability (m^2)")->check(CLI::PositiveNumber);
    rr->add_option("--seed", rr_seed, "Random seed");
    rr->add_option("-o,--output", rr_out, "Raster file to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    vf::log::set_level(quiet ? vf::log::Level::warn : verbose ? vf::log::Level::debug : vf::log::Level::info);
    try {
        vf::kernels::set_threads(threads);
        vf::kernels::set_backend(kernels == "auto" ? vf::kernels::detect_backend() : vf::kernels::parse_backend(kernels));
        vf::log::info("kernels", fmt::format("backend {} threads {}", vf::kernels::backend_name(vf::kernels::active_backend()), threads));

        if (*run) {
            const auto cfg = vf::load_config(run_cfg);
            vf::RunOptions opt;
            opt.output_dir = run_out;
            const auto s = vf::run_case(cfg, opt);
            print_summary(s);
            if (s.violation) vf::log::warn("run", "maximum principle violated");
        } else if (*mms) {
            vf::SolverConfig solver;
            solver.inner = mms_inner == "direct" ? vf::InnerSolve::direct : vf::InnerSolve::ilu0;
            const auto table = vf::convergence_study(levels, mms_T, vf::PicardConfig{}, solver);
            std::unique_ptr<vf::CsvWriter> csv;
            if (!mms_csv.empty())
                csv = std::make_unique<vf::CsvWriter>(
                    mms_csv, std::vector<std::string>{"h", "M", "tau", "l2_s", "rate_l2_s", "h1_s", "rate_h1_s",
                                                      "l2_p", "rate_l2_p", "h1_p", "rate_h1_p", "dl2_s", "dh1_s",
                                                      "dl2_p", "dh1_p"});
            fmt::print("{:>8} {:>7} {:>11} {:>6} {:>11} {:>6} {:>11} {:>6} {:>11} {:>6}\n", "h", "M", "L2(s)", "rate",
                       "H1(s)", "rate", "L2(p)", "rate", "H1(p)", "rate");
            for (const auto& r : table.rows) {
                fmt::print("{:>8} {:>7} {:>11.4e} {:>6.3f} {:>11.4e} {:>6.3f} {:>11.4e} {:>6.3f} {:>11.4e} {:>6.3f}\n",
                           fmt::format("1/{}", static_cast<int>(std::lround(1.0 / r.h))), r.vertices, r.err.l2_s,
                           r.rate.l2_s, r.err.h1_s, r.rate.h1_s, r.err.l2_p, r.rate.l2_p, r.err.h1_p, r.rate.h1_p);
                if (csv)
                    csv->row({r.h, double(r.vertices), r.tau, r.err.l2_s, r.rate.l2_s, r.err.h1_s, r.rate.h1_s,
                              r.err.l2_p, r.rate.l2_p, r.err.h1_p, r.rate.h1_p, r.discrete.l2_s, r.discrete.h1_s,
                              r.discrete.l2_p, r.discrete.h1_p});
            }
            fmt::print("\nerrors against the nodal interpolant of the exact fields\n");
            for (const auto& r : table.rows)
                fmt::print("{:>8} {:>7} {:>11.4e} {:>6.3f} {:>11.4e} {:>6.3f} {:>11.4e} {:>6.3f} {:>11.4e} {:>6.3f}\n",
                           fmt::format("1/{}", static_cast<int>(std::lround(1.0 / r.h))), r.vertices, r.discrete.l2_s,
                           r.discrete_rate.l2_s, r.discrete.h1_s, r.discrete_rate.h1_s, r.discrete.l2_p,
                           r.discrete_rate.l2_p, r.discrete.h1_p, r.discrete_rate.h1_p);
        } else if (*mb) {
            const auto cfg = vf::load_config(mb_cfg);
            vf::RunOptions opt;
            opt.output_dir = mb_out;
            opt.mass_balance_steps = mb_steps;
            if (opt.mass_balance_steps.empty() && cfg.output.mass_balance_steps.empty())
                opt.mass_balance_steps = {cfg.time.num_steps()};
            const auto s = vf::run_case(cfg, opt);
            print_summary(s);
        } else if (*rr) {
            std::array<int, 3> dims{1, 1, 1};
            std::copy(rr_dims.begin(), rr_dims.end(), dims.begin());
            const auto raster =
                vf::random_log_uniform_raster(dims, static_cast<int>(rr_dims.size()), rr_lo, rr_hi, rr_seed);
            vf::write_raster(raster, rr_out);
        } else if (*probe) {
            const auto data = vf::read_vtk(probe_file);
            const auto* field = data.point_field(probe_field);
            if (!field) throw vf::InvalidConfig(fmt::format("'{}' has no point field '{}'", probe_file, probe_field));
            const auto mesh = data.mesh();
            const auto rows = vf::probe_line(mesh, *field, to_point(from), to_point(to), samples);
            if (!probe_csv.empty()) {
                vf::CsvWriter csv(probe_csv, {"arc", "x", "y", "z", probe_field});
                for (const auto& r : rows) csv.row({r.arc, r.x[0], r.x[1], r.x[2], r.value});
            } else {
                fmt::print("arc,x,y,z,{}\n", probe_field);
                for (const auto& r : rows)
                    fmt::print("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.arc, r.x[0], r.x[1], r.x[2], r.value);
            }
        }
    } catch (const vf::InvalidConfig& e) {
        vf::log::error(e.what());
        return kExitValidation;
    } catch (const vf::NumericalError& e) {
        vf::log::error(e.what());
        return kExitSolver;
    } catch (const std::exception& e) {
        vf::log::error(e.what());
        return 1;
    }
    return 0;
}
