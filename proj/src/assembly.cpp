#include "vertexflow/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "vertexflow/error.hpp"

namespace vertexflow {

namespace {

void require_finite(std::span<const double> v, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i])) throw NumericState(fmt::format("non-finite {} at node {}", what, i));
}

// Upwind selections as node choices; the returned index's saturation is the
// value the corresponding public function returns.
inline std::size_t pick_wetting(std::size_t i, std::size_t j, double s_i, double s_j, double p_i, double p_j) {
    if (p_i > p_j) return i;
    if (p_i < p_j) return j;
    return s_i >= s_j ? i : j;
}

inline std::size_t pick_nonwetting(std::size_t i, std::size_t j, double s_i, double s_j, double pot_i, double pot_j) {
    if (pot_i > pot_j) return i;
    if (pot_i < pot_j) return j;
    return s_i <= s_j ? i : j;
}

}  // namespace

CsrMatrix BlockSystem::to_csr() const { return assemble_2x2(Kss, Ksp, Kps, Kpp); }

std::vector<double> BlockSystem::rhs() const {
    std::vector<double> f(fs);
    f.insert(f.end(), fp.begin(), fp.end());
    return f;
}

LumpedMass lumped_masses(const Mesh& mesh) {
    LumpedMass lm;
    lm.m.assign(mesh.num_vertices(), 0.0);
    const double share = 1.0 / mesh.nodes_per_element();
    for (std::size_t e = 0; e < mesh.num_elements(); ++e)
        for (int v : mesh.element(e)) lm.m[v] += share * mesh.element_volume(e);
    return lm;
}

std::vector<double> local_c_matrix(int dim, std::span<const Point> coords) {
    const auto g = p1_gradients(dim, coords);
    const double vol = std::abs(signed_simplex_volume(dim, coords));
    const int n = dim + 1;
    std::vector<double> c(n * n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            c[a * n + b] = vol * std::abs(g[a][0] * g[b][0] + g[a][1] * g[b][1] + g[a][2] * g[b][2]);
    return c;
}

StiffnessCoeffs stiffness_coeffs(const Mesh& mesh, std::span<const double> perm) {
    if (perm.size() != mesh.num_elements())
        throw InvalidConfig(fmt::format("permeability has {} values for {} elements", perm.size(), mesh.num_elements()));
    const std::size_t n = mesh.num_vertices();
    const int npe = mesh.nodes_per_element();
    TripletBuilder c(n, n), ck(n, n);
    c.reserve(mesh.num_elements() * npe * npe);
    ck.reserve(mesh.num_elements() * npe * npe);
    std::array<Point, 4> xs{};
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        if (!(perm[e] > 0.0) || !std::isfinite(perm[e]))
            throw InvalidConfig(fmt::format("permeability of element {} must be positive, got {}", e, perm[e]));
        const auto el = mesh.element(e);
        for (int a = 0; a < npe; ++a) xs[a] = mesh.vertex(el[a]);
        const auto loc = local_c_matrix(mesh.dim(), std::span<const Point>(xs.data(), npe));
        for (int a = 0; a < npe; ++a)
            for (int b = 0; b < npe; ++b) {
                c.add(el[a], el[b], loc[a * npe + b]);
                ck.add(el[a], el[b], perm[e] * loc[a * npe + b]);
            }
    }
    return {c.finalize(true), ck.finalize(true)};
}

WellField build_well_field(const Mesh& mesh, const LumpedMass& masses, std::span<const WellBox> wells, double s_in) {
    WellField wf;
    wf.qbar.assign(mesh.num_vertices(), 0.0);
    wf.qund.assign(mesh.num_vertices(), 0.0);
    wf.s_in = s_in;
    const auto [blo, bhi] = mesh.bounding_box();
    double extent = 0.0;
    for (int k = 0; k < mesh.dim(); ++k) extent = std::max(extent, bhi[k] - blo[k]);
    const double eps = 1e-12 * extent;

    double injected = 0.0, produced = 0.0;
    for (const auto& w : wells) {
        if (!(w.rate > 0.0)) throw InvalidConfig(fmt::format("well '{}' needs a positive rate", w.name));
        std::vector<std::size_t> support;
        double measure = 0.0;
        for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
            const auto& x = mesh.vertex(i);
            bool inside = true;
            for (int k = 0; k < mesh.dim(); ++k) inside = inside && x[k] >= w.lo[k] - eps && x[k] <= w.hi[k] + eps;
            if (inside) {
                support.push_back(i);
                measure += masses.m[i];
            }
        }
        if (support.empty())
            throw InvalidConfig(fmt::format("well '{}' box contains no mesh vertex; refine the mesh or enlarge the box", w.name));
        auto& q = w.kind == WellKind::injection ? wf.qbar : wf.qund;
        const double density = w.rate / measure;
        for (auto i : support) q[i] += density;
        (w.kind == WellKind::injection ? injected : produced) += w.rate;
    }
    if (std::abs(injected - produced) > 1e-12 * std::max(injected, produced))
        throw InvalidConfig(fmt::format("injection rate {} and production rate {} must balance", injected, produced));
    return wf;
}

double upwind_wetting(double s_i, double s_j, double p_i, double p_j) {
    if (p_i > p_j) return s_i;
    if (p_i < p_j) return s_j;
    return std::max(s_i, s_j);
}

double upwind_nonwetting_pc(double s_i, double s_j, double pot_i, double pot_j) {
    if (pot_i > pot_j) return s_i;
    if (pot_i < pot_j) return s_j;
    return std::min(s_i, s_j);
}

double upwind_nonwetting(double s_i, double s_j, double p_i, double p_j, const ConstitutiveModel& model) {
    return upwind_nonwetting_pc(s_i, s_j, model.capillary_pressure(s_i) + p_i, model.capillary_pressure(s_j) + p_j);
}

NodalSources well_sources(const WellField& wells, const TwoPhaseProperties& props, std::span<const double> s_prev) {
    const std::size_t n = s_prev.size();
    NodalSources src{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    const double fw_in = props.f_w(wells.s_in);
    const double fo_in = 1.0 - fw_in;
    for (std::size_t i = 0; i < n; ++i) {
        double w = fw_in * wells.qbar[i], o = fo_in * wells.qbar[i];
        if (wells.qund[i] != 0.0) {
            const double fw = props.f_w(s_prev[i]);
            w -= fw * wells.qund[i];
            o -= (1.0 - fw) * wells.qund[i];
        }
        src.wetting[i] = w;
        src.nonwetting[i] = o;
    }
    return src;
}

BlockSystem assemble_system(const SchemeContext& ctx, const NodalSources& sources, std::span<const double> s_prev,
                            std::span<const double> s_iter, std::span<const double> p_iter,
                            const UpwindSelection* frozen, UpwindSelection* chosen) {
    if (!(ctx.tau > 0.0)) throw InvalidConfig(fmt::format("time step must be positive, got {}", ctx.tau));
    if (!(ctx.phi > 0.0)) throw InvalidConfig(fmt::format("porosity must be positive, got {}", ctx.phi));
    const auto& m = ctx.masses->m;
    const auto& ck = ctx.coeffs->cK;
    const auto& props = *ctx.props;
    const auto& model = props.model();
    const std::size_t n = m.size();
    if (s_prev.size() != n || s_iter.size() != n || p_iter.size() != n || sources.wetting.size() != n ||
        sources.nonwetting.size() != n)
        throw InvalidConfig("state vectors do not match the number of nodes");
    require_finite(s_prev, "previous saturation");
    require_finite(s_iter, "saturation iterate");
    require_finite(p_iter, "pressure iterate");
    require_finite(sources.wetting, "wetting source");
    require_finite(sources.nonwetting, "non-wetting source");

    std::vector<double> eta_w(n), eta_o(n), pot_o(n), pc_prev(n), dpc_prev(n);
    for (std::size_t i = 0; i < n; ++i) {
        eta_w[i] = props.eta_w(s_iter[i]);
        eta_o[i] = props.eta_o(s_iter[i]);
        pot_o[i] = model.capillary_pressure(s_iter[i]) + p_iter[i];
        pc_prev[i] = model.capillary_pressure(s_prev[i]);
        dpc_prev[i] = model.capillary_pressure_derivative(s_prev[i]);
    }

    const auto& ptr = ck.row_ptr();
    const auto& cols = ck.col_idx();
    const auto& cvals = ck.values();
    const std::size_t last = n - 1;
    const double mass_rate = ctx.phi / ctx.tau;

    if (frozen && (frozen->wetting.size() != cvals.size() || frozen->nonwetting.size() != cvals.size()))
        throw InvalidConfig("frozen upwind selection does not match the stiffness pattern");
    if (chosen) {
        chosen->wetting.assign(cvals.size(), 0);
        chosen->nonwetting.assign(cvals.size(), 0);
    }

    std::vector<double> ksp_v(cvals.size()), kps_v(cvals.size()), kpp_v(cvals.size());
    BlockSystem sys;
    sys.fs.assign(n, 0.0);
    sys.fp.assign(n, 0.0);

    for (std::size_t i = 0; i < n; ++i) {
        std::int64_t diag = -1;
        double sum_w = 0.0, sum_o = 0.0, cap = 0.0;
        for (auto k = ptr[i]; k < ptr[i + 1]; ++k) {
            const auto j = static_cast<std::size_t>(cols[k]);
            if (j == i) {
                diag = k;
                if (chosen) chosen->wetting[k] = chosen->nonwetting[k] = static_cast<std::int32_t>(i);
                continue;
            }
            std::size_t uw, uo;
            if (frozen) {
                uw = static_cast<std::size_t>(frozen->wetting[k]);
                uo = static_cast<std::size_t>(frozen->nonwetting[k]);
                if ((uw != i && uw != j) || (uo != i && uo != j))
                    throw InvalidConfig("frozen upwind selection names a node outside its pair");
            } else {
                uw = pick_wetting(i, j, s_iter[i], s_iter[j], p_iter[i], p_iter[j]);
                uo = pick_nonwetting(i, j, s_iter[i], s_iter[j], pot_o[i], pot_o[j]);
            }
            if (chosen) {
                chosen->wetting[k] = static_cast<std::int32_t>(uw);
                chosen->nonwetting[k] = static_cast<std::int32_t>(uo);
            }
            const double w = cvals[k] * eta_w[uw];
            const double o = cvals[k] * eta_o[uo];
            ksp_v[k] = -w;
            kpp_v[k] = -o;
            kps_v[k] = -o * dpc_prev[j];
            sum_w += w;
            sum_o += o;
            cap += o * (pc_prev[j] - dpc_prev[j] * s_prev[j] - pc_prev[i] + dpc_prev[i] * s_prev[i]);
        }
        if (diag < 0) throw Error(fmt::format("stiffness table lacks the diagonal of row {}", i));
        ksp_v[diag] = sum_w;
        kpp_v[diag] = sum_o;
        kps_v[diag] = -m[i] * mass_rate + sum_o * dpc_prev[i];
        sys.fp[i] = -m[i] * mass_rate * s_prev[i] + m[i] * sources.nonwetting[i] + cap;
        const double fs_i = m[i] * mass_rate * s_prev[i] + m[i] * sources.wetting[i];
        if (i != last) {
            sys.fs[i] = fs_i;
        } else {
            sys.last_wetting_row.kss_diag = m[i] * mass_rate;
            sys.last_wetting_row.rhs = fs_i;
            for (auto k = ptr[i]; k < ptr[i + 1]; ++k) sys.last_wetting_row.ksp.emplace_back(cols[k], ksp_v[k]);
        }
    }

    // Kss: diagonal, empty last row.
    {
        std::vector<std::int64_t> p(n + 1);
        std::vector<std::int32_t> c(last);
        std::vector<double> v(last);
        for (std::size_t i = 0; i < last; ++i) {
            p[i + 1] = static_cast<std::int64_t>(i + 1);
            c[i] = static_cast<std::int32_t>(i);
            v[i] = m[i] * mass_rate;
        }
        p[n] = static_cast<std::int64_t>(last);
        sys.Kss = CsrMatrix(n, n, std::move(p), std::move(c), std::move(v));
    }
    // Ksp: stiffness pattern, last row replaced by the lumped masses.
    {
        std::vector<std::int64_t> p(ptr.begin(), ptr.begin() + last + 1);
        std::vector<std::int32_t> c(cols.begin(), cols.begin() + ptr[last]);
        std::vector<double> v(ksp_v.begin(), ksp_v.begin() + ptr[last]);
        for (std::size_t j = 0; j < n; ++j) {
            c.push_back(static_cast<std::int32_t>(j));
            v.push_back(m[j]);
        }
        p.push_back(static_cast<std::int64_t>(c.size()));
        sys.Ksp = CsrMatrix(n, n, std::move(p), std::move(c), std::move(v));
    }
    sys.Kps = CsrMatrix(n, n, ptr, cols, std::move(kps_v));
    sys.Kpp = CsrMatrix(n, n, ptr, cols, std::move(kpp_v));
    sys.has_mean_constraint = true;
    return sys;
}

BlockSystem assemble_system(const SchemeContext& ctx, const WellField& wells, std::span<const double> s_prev,
                            std::span<const double> s_iter, std::span<const double> p_iter) {
    return assemble_system(ctx, well_sources(wells, *ctx.props, s_prev), s_prev, s_iter, p_iter);
}

BlockSystem apply_dirichlet(const BlockSystem& system, const Mesh& mesh, std::span<const int> nodes,
                            std::span<const double> s_values, std::span<const double> p_values) {
    if (nodes.size() != s_values.size() || nodes.size() != p_values.size())
        throw InvalidConfig("Dirichlet node and value lists differ in length");
    if (nodes.empty()) return system;
    const std::size_t n = system.size();
    using RowMap = std::map<std::size_t, std::vector<std::pair<std::int32_t, double>>>;
    RowMap kss, ksp, kps, kpp;
    BlockSystem out;
    out.fs = system.fs;
    out.fp = system.fp;
    std::vector<char> constrained(n, 0);
    for (std::size_t a = 0; a < nodes.size(); ++a) {
        const int i = nodes[a];
        if (i < 0 || static_cast<std::size_t>(i) >= n || !mesh.is_boundary_node(i))
            throw InvalidConfig(fmt::format("Dirichlet node {} is not a boundary node", i));
        constrained[i] = 1;
        kss[i] = {{i, 1.0}};
        ksp[i] = {};
        kps[i] = {};
        kpp[i] = {{i, 1.0}};
        out.fs[i] = s_values[a];
        out.fp[i] = p_values[a];
    }
    const std::size_t last = n - 1;
    if (system.has_mean_constraint && !constrained[last]) {
        kss[last] = {{static_cast<std::int32_t>(last), system.last_wetting_row.kss_diag}};
        ksp[last] = system.last_wetting_row.ksp;
        out.fs[last] = system.last_wetting_row.rhs;
    }
    out.Kss = system.Kss.with_rows_replaced(kss);
    out.Ksp = system.Ksp.with_rows_replaced(ksp);
    out.Kps = system.Kps.with_rows_replaced(kps);
    out.Kpp = system.Kpp.with_rows_replaced(kpp);
    out.has_mean_constraint = false;
    out.last_wetting_row = system.last_wetting_row;
    return out;
}

}  // namespace vertexflow
