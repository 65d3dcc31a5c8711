#include "vertexflow/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <tuple>

#include <fmt/format.h>

#include "vertexflow/assembly.hpp"
#include "vertexflow/error.hpp"
#include "vertexflow/log.hpp"

namespace vertexflow {

ManufacturedCase::ManufacturedCase() : model_(2.0, 50.0, 0.05) {}

double ManufacturedCase::s(const Point& x, double t) const {
    return 0.4 + 0.4 * x[0] * x[1] + 0.2 * std::cos(t + x[0]);
}

double ManufacturedCase::p(const Point& x, double t) const {
    const double X = x[0], Y = x[1];
    return 2.0 + X * X * Y - Y * Y + X * X * std::sin(Y + t) - std::cos(t) / 3.0 + std::cos(t + 1.0) / 3.0 -
           11.0 / 6.0;
}

std::array<double, 2> ManufacturedCase::grad_s(const Point& x, double t) const {
    return {0.4 * x[1] - 0.2 * std::sin(t + x[0]), 0.4 * x[0]};
}

std::array<double, 2> ManufacturedCase::grad_p(const Point& x, double t) const {
    const double X = x[0], Y = x[1];
    return {2.0 * X * Y + 2.0 * X * std::sin(Y + t), X * X - 2.0 * Y + X * X * std::cos(Y + t)};
}

std::array<double, 2> ManufacturedCase::sources(const Point& x, double t) const {
    const double X = x[0], Y = x[1];
    const double sv = s(x, t);
    const double s_t = -0.2 * std::sin(t + X);
    const auto gs = grad_s(x, t);
    const auto gp = grad_p(x, t);
    const double lap_s = -0.2 * std::cos(t + X);
    const double lap_p = 2.0 * Y + 2.0 * std::sin(Y + t) - 2.0 - X * X * std::sin(Y + t);

    const FluidPair fl = fluids();
    const double K = permeability();
    const double eta_w = model_.rel_perm_w(sv) / fl.mu_w;
    const double deta_w = model_.rel_perm_w_derivative(sv) / fl.mu_w;
    const double eta_o = model_.rel_perm_o(sv) / fl.mu_o;
    const double deta_o = model_.rel_perm_o_derivative(sv) / fl.mu_o;
    const double pc1 = model_.capillary_pressure_derivative(sv);
    const double pc2 = model_.capillary_pressure_second_derivative(sv);

    const double gs_gp = gs[0] * gp[0] + gs[1] * gp[1];
    const double gs_gs = gs[0] * gs[0] + gs[1] * gs[1];

    const double f1 = phi() * s_t - K * (deta_w * gs_gp + eta_w * lap_p);
    // Non-wetting potential gradient g = p_c'(s) grad s + grad p.
    const double gs_g = pc1 * gs_gs + gs_gp;
    const double div_g = pc2 * gs_gs + pc1 * lap_s + lap_p;
    const double f2 = -phi() * s_t - K * (deta_o * gs_g + eta_o * div_g);
    return {f1, f2};
}

FlowProblem ManufacturedCase::make_problem(int n) const {
    if (n < 1) throw InvalidConfig(fmt::format("manufactured case needs n >= 1, got {}", n));
    const std::array<int, 2> cells{n, n};
    const std::array<double, 2> lengths{1.0, 1.0};
    Mesh mesh = build_structured(cells, lengths);
    const std::size_t ne = mesh.num_elements();
    FlowProblem prob(std::move(mesh), std::vector<double>(ne, permeability()), model_.clone(), fluids(), phi());
    const ManufacturedCase mc = *this;
    prob.set_sources([mc](const Point& x, double t) {
        const auto f = mc.sources(x, t);
        return std::pair<double, double>{f[0], f[1]};
    });
    SpaceTimeField s = [mc](const Point& x, double t) { return mc.s(x, t); };
    SpaceTimeField p = [mc](const Point& x, double t) { return mc.p(x, t); };
    prob.set_dirichlet(DirichletData{prob.mesh().boundary_nodes(), s, p});
    prob.set_initial(s, p);
    return prob;
}

namespace {

struct QuadRule {
    std::vector<std::array<double, 4>> bary;
    double weight;  // fraction of |E| per point
};

const QuadRule& degree2_rule(int dim) {
    static const QuadRule tri{{{0.5, 0.5, 0.0, 0.0}, {0.0, 0.5, 0.5, 0.0}, {0.5, 0.0, 0.5, 0.0}}, 1.0 / 3.0};
    constexpr double a = 0.5854101966249685, b = 0.1381966011250105;
    static const QuadRule tet{{{a, b, b, b}, {b, a, b, b}, {b, b, a, b}, {b, b, b, a}}, 0.25};
    return dim == 2 ? tri : tet;
}

}  // namespace

std::array<double, 2> field_error(const Mesh& mesh, std::span<const double> u, const ScalarField& f,
                                  const GradientField& g) {
    if (u.size() != mesh.num_vertices()) throw InvalidConfig("nodal field size does not match mesh");
    const int dim = mesh.dim();
    const int nv = dim + 1;
    const QuadRule& rule = degree2_rule(dim);
    double l2 = 0.0, semi = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto nodes = mesh.element(e);
        const auto coords = mesh.element_coords(e);
        const auto grads = p1_gradients(dim, coords);
        Point gu{0, 0, 0};
        for (int a = 0; a < nv; ++a)
            for (int d = 0; d < dim; ++d) gu[d] += u[nodes[a]] * grads[a][d];
        const double w = rule.weight * mesh.element_volume(e);
        for (const auto& lam : rule.bary) {
            Point x{0, 0, 0};
            double uh = 0.0;
            for (int a = 0; a < nv; ++a) {
                uh += lam[a] * u[nodes[a]];
                for (int d = 0; d < dim; ++d) x[d] += lam[a] * coords[a][d];
            }
            const double diff = uh - f(x);
            l2 += w * diff * diff;
            const Point ge = g(x);
            for (int d = 0; d < dim; ++d) semi += w * (gu[d] - ge[d]) * (gu[d] - ge[d]);
        }
    }
    return {std::sqrt(l2), std::sqrt(semi)};
}

ErrorNorms error_norms(const Mesh& mesh, std::span<const double> S, std::span<const double> P, const ScalarField& s,
                       const GradientField& grad_s, const ScalarField& p, const GradientField& grad_p) {
    const auto es = field_error(mesh, S, s, grad_s);
    const auto ep = field_error(mesh, P, p, grad_p);
    ErrorNorms n;
    n.l2_s = es[0];
    n.l2_p = ep[0];
    n.h1_s = std::hypot(es[0], es[1]);
    n.h1_p = std::hypot(ep[0], ep[1]);
    return n;
}

ErrorNorms interpolant_error_norms(const Mesh& mesh, std::span<const double> S, std::span<const double> P,
                                   const ScalarField& s, const ScalarField& p) {
    const std::size_t nvert = mesh.num_vertices();
    if (S.size() != nvert || P.size() != nvert) throw Error("interpolant_error_norms: field length mismatch");
    std::vector<double> ds(nvert), dp(nvert);
    for (std::size_t i = 0; i < nvert; ++i) {
        ds[i] = S[i] - s(mesh.vertex(i));
        dp[i] = P[i] - p(mesh.vertex(i));
    }
    const ScalarField zero = [](const Point&) { return 0.0; };
    const GradientField zero_grad = [](const Point&) { return Point{0.0, 0.0, 0.0}; };
    return error_norms(mesh, ds, dp, zero, zero_grad, zero, zero_grad);
}

double convergence_rate(double e_coarse, double e_fine, double h_coarse, double h_fine) {
    const double den = std::log(h_coarse / h_fine);
    if (!(std::abs(den) > 0.0) || !(e_coarse > 0.0) || !(e_fine > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return std::log(e_coarse / e_fine) / den;
}

void compute_rates(RateTable& table) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < table.rows.size(); ++k) {
        RateRow& r = table.rows[k];
        if (k == 0) {
            r.rate = {nan, nan, nan, nan};
            r.discrete_rate = r.rate;
            continue;
        }
        const RateRow& c = table.rows[k - 1];
        const auto rates = [&](const ErrorNorms& a, const ErrorNorms& b) {
            return ErrorNorms{convergence_rate(a.l2_s, b.l2_s, c.h, r.h), convergence_rate(a.l2_p, b.l2_p, c.h, r.h),
                              convergence_rate(a.h1_s, b.h1_s, c.h, r.h), convergence_rate(a.h1_p, b.h1_p, c.h, r.h)};
        };
        r.rate = rates(c.err, r.err);
        r.discrete_rate = rates(c.discrete, r.discrete);
    }
}

RateTable convergence_study(std::span<const int> levels, double T, const PicardConfig& picard,
                            const SolverConfig& solver) {
    if (levels.size() < 2) throw InvalidConfig("convergence study needs at least two levels");
    const ManufacturedCase mc;
    RateTable table;
    for (int n : levels) {
        const auto t0 = std::chrono::steady_clock::now();
        const FlowProblem prob = mc.make_problem(n);
        const double h = 1.0 / n;
        TimeConfig time{h, T, 1};
        SimState st = advance(prob, initialize(prob), time, picard, solver);
        const double t = st.t;
        RateRow row;
        row.h = h;
        row.vertices = prob.mesh().num_vertices();
        row.tau = h;
        row.steps = st.n;
        row.err = error_norms(
            prob.mesh(), st.S, st.P, [&](const Point& x) { return mc.s(x, t); },
            [&](const Point& x) {
                const auto g = mc.grad_s(x, t);
                return Point{g[0], g[1], 0.0};
            },
            [&](const Point& x) { return mc.p(x, t); },
            [&](const Point& x) {
                const auto g = mc.grad_p(x, t);
                return Point{g[0], g[1], 0.0};
            });
        row.discrete = interpolant_error_norms(
            prob.mesh(), st.S, st.P, [&](const Point& x) { return mc.s(x, t); },
            [&](const Point& x) { return mc.p(x, t); });
        row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log::info("mms", fmt::format("h=1/{} M={} steps={} L2(s)={:.4e} L2(p)={:.4e} H1(s)={:.4e} H1(p)={:.4e}", n,
                                     row.vertices, row.steps, row.err.l2_s, row.err.l2_p, row.err.h1_s, row.err.h1_p));
        table.rows.push_back(std::move(row));
    }
    compute_rates(table);
    return table;
}

std::vector<char> well_elements(const FlowProblem& problem) {
    const Mesh& mesh = problem.mesh();
    const auto nodes = problem.well_nodes();
    std::vector<char> flag(mesh.num_elements(), 0);
    for (std::size_t e = 0; e < mesh.num_elements(); ++e)
        for (int v : mesh.element(e))
            if (nodes[v]) flag[e] = 1;
    return flag;
}

std::vector<double> local_mass_balance(const FlowProblem& problem, const SimState& prev, const SimState& cur,
                                       const UpwindSelection& upwind, std::span<const double> s_iter,
                                       std::span<const double> p_iter, double tau) {
    const Mesh& mesh = problem.mesh();
    const int dim = mesh.dim();
    const int nv = dim + 1;
    const std::size_t ne = mesh.num_elements();
    const auto& perm = problem.permeability();
    const auto& props = problem.props();
    const double phi = problem.porosity();
    const NodalSources src = problem.step_sources(prev.S, cur.t);

    // K_E grad p^n per element and the scaled face normals -d|E| g_a.
    std::vector<Point> kgrad(ne);
    std::vector<std::array<Point, 4>> normals(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        const auto nodes = mesh.element(e);
        const auto grads = p1_gradients(dim, mesh.element_coords(e));
        Point g{0, 0, 0};
        for (int a = 0; a < nv; ++a)
            for (int d = 0; d < dim; ++d) g[d] += cur.P[nodes[a]] * grads[a][d];
        for (int d = 0; d < dim; ++d) kgrad[e][d] = perm[e] * g[d];
        for (int a = 0; a < nv; ++a)
            for (int d = 0; d < 3; ++d) normals[e][a][d] = -dim * mesh.element_volume(e) * grads[a][d];
    }

    struct FaceRef {
        std::array<int, 3> key;
        int elem;
        int local;
    };
    std::vector<FaceRef> faces;
    faces.reserve(ne * nv);
    for (std::size_t e = 0; e < ne; ++e) {
        const auto nodes = mesh.element(e);
        for (int a = 0; a < nv; ++a) {
            std::array<int, 3> key{-1, -1, -1};
            int k = 0;
            for (int b = 0; b < nv; ++b)
                if (b != a) key[k++] = nodes[b];
            std::sort(key.begin(), key.begin() + dim);
            faces.push_back({key, static_cast<int>(e), a});
        }
    }
    std::sort(faces.begin(), faces.end(), [](const FaceRef& x, const FaceRef& y) {
        return std::tie(x.key, x.elem) < std::tie(y.key, y.elem);
    });

    const CsrMatrix& ck = problem.coeffs().cK;
    if (upwind.wetting.size() != ck.values().size())
        throw InvalidConfig("upwind selection does not match the stiffness pattern");
    auto pair_eta = [&](int i, int j) {
        const std::int64_t k = ck.find(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        if (k < 0) return props.eta_w(upwind_wetting(s_iter[i], s_iter[j], p_iter[i], p_iter[j]));
        return props.eta_w(s_iter[upwind.wetting[k]]);
    };

    std::vector<double> m(ne, 0.0);
    for (std::size_t e = 0; e < ne; ++e) {
        const double w = mesh.element_volume(e) / nv;
        for (int v : mesh.element(e))
            m[e] += w * (phi * (cur.S[v] - prev.S[v]) / tau - src.wetting[v]);
    }
    for (std::size_t k = 0; k + 1 < faces.size(); ++k) {
        const FaceRef& f0 = faces[k];
        const FaceRef& f1 = faces[k + 1];
        if (f0.key != f1.key) continue;
        double eta = 0.0;
        if (dim == 2) {
            eta = pair_eta(f0.key[0], f0.key[1]);
        } else {
            eta = (pair_eta(f0.key[0], f0.key[1]) + pair_eta(f0.key[0], f0.key[2]) +
                   pair_eta(f0.key[1], f0.key[2])) /
                  3.0;
        }
        const Point& n0 = normals[f0.elem][f0.local];
        double flux = 0.0;  // out of f0.elem
        for (int d = 0; d < dim; ++d) flux += 0.5 * (kgrad[f0.elem][d] + kgrad[f1.elem][d]) * n0[d];
        flux *= eta;
        m[f0.elem] -= flux;
        m[f1.elem] += flux;
        ++k;
    }
    return m;
}

}  // namespace vertexflow
