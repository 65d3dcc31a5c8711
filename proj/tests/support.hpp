#pragma once

// Shared helpers for the unit tests: small randomized meshes and states, and
// dense reference implementations that do not go through the library's
// sparse assembly or Schur pipeline.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "vertexflow/assembly.hpp"
#include "vertexflow/mesh.hpp"
#include "vertexflow/physics.hpp"
#include "vertexflow/problem.hpp"
#include "vertexflow/sparse.hpp"

namespace vftest {

namespace vf = vertexflow;

/// Structured mesh with interior vertices displaced by up to `jitter` cell
/// sizes, which keeps every element positively oriented for jitter < 0.25.
inline vf::Mesh jittered_mesh(std::vector<int> cells, std::vector<double> lengths, double jitter, std::mt19937_64& rng) {
    const vf::Mesh base = vf::build_structured(cells, lengths);
    std::uniform_real_distribution<double> u(-jitter, jitter);
    std::vector<vf::Point> xs = base.vertices();
    const int dim = base.dim();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (base.is_boundary_node(i)) continue;
        for (int d = 0; d < dim; ++d) xs[i][d] += u(rng) * lengths[d] / cells[d];
    }
    std::vector<std::array<int, 4>> els(base.num_elements(), {0, 0, 0, 0});
    for (std::size_t e = 0; e < base.num_elements(); ++e) {
        const auto el = base.element(e);
        for (int a = 0; a <= dim; ++a) els[e][a] = el[a];
    }
    return vf::Mesh(dim, std::move(xs), std::move(els));
}

inline std::vector<double> uniform_vector(std::size_t n, double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

inline Eigen::MatrixXd dense(const vf::CsrMatrix& a) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto cols = a.row_cols(r);
        const auto vals = a.row_vals(r);
        for (std::size_t k = 0; k < cols.size(); ++k) d(static_cast<Eigen::Index>(r), cols[k]) = vals[k];
    }
    return d;
}

inline Eigen::VectorXd to_eigen(std::span<const double> v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Gradients of the barycentric functions from the inverse of the affine
/// map, independent of the library's p1_gradients.
inline std::vector<Eigen::Vector3d> reference_gradients(int dim, const std::vector<vf::Point>& xs) {
    const int n = dim + 1;
    Eigen::MatrixXd a(n, n);
    for (int r = 0; r < n; ++r) {
        a(r, 0) = 1.0;
        for (int d = 0; d < dim; ++d) a(r, d + 1) = xs[r][d];
    }
    // Rows of inv(a)^T hold (constant, gradient) of each basis function.
    const Eigen::MatrixXd coef = a.inverse();
    std::vector<Eigen::Vector3d> g(n, Eigen::Vector3d::Zero());
    for (int b = 0; b < n; ++b)
        for (int d = 0; d < dim; ++d) g[b](d) = coef(d + 1, b);
    return g;
}

inline double reference_volume(int dim, const std::vector<vf::Point>& xs) {
    Eigen::MatrixXd j(dim, dim);
    for (int c = 0; c < dim; ++c)
        for (int d = 0; d < dim; ++d) j(d, c) = xs[c + 1][d] - xs[0][d];
    return std::abs(j.determinant()) / (dim == 2 ? 2.0 : 6.0);
}

struct DenseSystem {
    Eigen::MatrixXd K;
    Eigen::VectorXd f;
};

/// The linearized scheme written out equation by equation into a dense
/// 2M x 2M matrix. Unknowns (S_0..S_{M-1}, P_0..P_{M-1}); the wetting
/// equation of the last node is replaced by sum_j m_j P_j = 0.
inline DenseSystem dense_scheme(const vf::Mesh& mesh, const std::vector<double>& perm, const vf::ConstitutiveModel& model,
                                vf::FluidPair fluids, double phi, double tau, const std::vector<double>& w_src,
                                const std::vector<double>& nw_src, const std::vector<double>& s_prev,
                                const std::vector<double>& s_it, const std::vector<double>& p_it) {
    const int dim = mesh.dim();
    const std::size_t M = mesh.num_vertices();
    std::vector<double> m(M, 0.0);
    std::map<std::pair<int, int>, double> ck;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto el = mesh.element(e);
        std::vector<vf::Point> xs;
        for (int v : el) xs.push_back(mesh.vertex(v));
        const auto g = reference_gradients(dim, xs);
        const double vol = reference_volume(dim, xs);
        for (int a = 0; a <= dim; ++a) {
            m[el[a]] += vol / (dim + 1);
            for (int b = 0; b <= dim; ++b)
                if (a != b) ck[{el[a], el[b]}] += perm[e] * vol * std::abs(g[a].dot(g[b]));
        }
    }
    const auto eta_w = [&](double s) { return model.rel_perm_w(s) / fluids.mu_w; };
    const auto eta_o = [&](double s) { return model.rel_perm_o(s) / fluids.mu_o; };
    const auto pc = [&](double s) { return model.capillary_pressure(s); };
    const auto dpc = [&](double s) { return model.capillary_pressure_derivative(s); };

    DenseSystem d{Eigen::MatrixXd::Zero(2 * M, 2 * M), Eigen::VectorXd::Zero(2 * M)};
    const auto S = [](std::size_t i) { return static_cast<Eigen::Index>(i); };
    const auto P = [M](std::size_t i) { return static_cast<Eigen::Index>(M + i); };
    for (std::size_t i = 0; i < M; ++i) {
        // wetting: m phi (S_i - Sp_i)/tau + sum_j c eta_w(up) (P_i - P_j) = m w_i
        if (i + 1 < M) {
            d.K(S(i), S(i)) = m[i] * phi / tau;
            d.f(S(i)) = m[i] * phi * s_prev[i] / tau + m[i] * w_src[i];
        } else {
            for (std::size_t j = 0; j < M; ++j) d.K(S(i), P(j)) = m[j];
        }
        // non-wetting: -m phi (S_i - Sp_i)/tau + sum_j c eta_o(up) (U_i - U_j) = m nw_i,
        // U = pc(Sp) + pc'(Sp)(S - Sp) + P
        d.K(P(i), S(i)) += -m[i] * phi / tau;
        d.f(P(i)) += -m[i] * phi * s_prev[i] / tau + m[i] * nw_src[i];
        for (const auto& [key, c] : ck) {
            if (static_cast<std::size_t>(key.first) != i) continue;
            const std::size_t j = key.second;
            double sw;
            if (p_it[i] > p_it[j])
                sw = s_it[i];
            else if (p_it[i] < p_it[j])
                sw = s_it[j];
            else
                sw = std::max(s_it[i], s_it[j]);
            const double ui = pc(s_it[i]) + p_it[i], uj = pc(s_it[j]) + p_it[j];
            double so;
            if (ui > uj)
                so = s_it[i];
            else if (ui < uj)
                so = s_it[j];
            else
                so = std::min(s_it[i], s_it[j]);
            const double aw = c * eta_w(sw), ao = c * eta_o(so);
            if (i + 1 < M) {
                d.K(S(i), P(i)) += aw;
                d.K(S(i), P(j)) -= aw;
            }
            d.K(P(i), S(i)) += ao * dpc(s_prev[i]);
            d.K(P(i), S(j)) -= ao * dpc(s_prev[j]);
            d.K(P(i), P(i)) += ao;
            d.K(P(i), P(j)) -= ao;
            d.f(P(i)) -= ao * ((pc(s_prev[i]) - dpc(s_prev[i]) * s_prev[i]) - (pc(s_prev[j]) - dpc(s_prev[j]) * s_prev[j]));
        }
    }
    return d;
}

/// Constant capillary pressure with quadratic relative permeabilities.
class ConstantPcModel final : public vf::ConstitutiveModel {
public:
    explicit ConstantPcModel(double pc) : pc_(pc) {}
    double s_rw() const override { return 0.0; }
    double s_ro() const override { return 0.0; }
    double rel_perm_w(double s) const override { return clamp(s) * clamp(s); }
    double rel_perm_o(double s) const override { return (1 - clamp(s)) * (1 - clamp(s)); }
    double capillary_pressure(double) const override { return pc_; }
    double capillary_pressure_derivative(double) const override { return 0.0; }
    double capillary_pressure_second_derivative(double) const override { return 0.0; }
    double rel_perm_w_derivative(double s) const override { return 2 * clamp(s); }
    double rel_perm_o_derivative(double s) const override { return -2 * (1 - clamp(s)); }
    std::string name() const override { return "constant-pc"; }
    std::unique_ptr<vf::ConstitutiveModel> clone() const override { return std::make_unique<ConstantPcModel>(*this); }

private:
    double pc_;
};

inline vf::BrooksCoreyModel physical_model() { return vf::BrooksCoreyModel(3.0, 5.0e3, 0.05, 0.15, 0.15); }

// Random jittered problem at field scale (100 m box, log-uniform permeability
// around the shipped cases) with an injector and a producer in opposite corners.
inline vf::FlowProblem random_problem(std::mt19937_64& rng, int dim) {
    vf::Mesh mesh = dim == 2 ? jittered_mesh({4, 5}, {100.0, 100.0}, 0.2, rng)
                             : jittered_mesh({2, 2, 2}, {100.0, 100.0, 100.0}, 0.15, rng);
    auto perm = uniform_vector(mesh.num_elements(), std::log(5e-10), std::log(5e-8), rng);
    for (double& k : perm) k = std::exp(k);
    vf::FlowProblem problem(std::move(mesh), std::move(perm),
                            std::make_unique<vf::BrooksCoreyModel>(physical_model()), vf::FluidPair{5e-4, 2e-3},
                            0.2);
    std::vector<vf::WellBox> wells(2);
    wells[0] = {"inj", vf::WellKind::injection, {0, 0, 0}, {30, 30, 30}, 0.1};
    wells[1] = {"prod", vf::WellKind::production, {70, 70, 70}, {100, 100, 100}, 0.1};
    problem.set_wells(wells, 0.85);
    return problem;
}

}  // namespace vftest
