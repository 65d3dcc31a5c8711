#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "vertexflow/assembly.hpp"
#include "vertexflow/driver.hpp"
#include "vertexflow/error.hpp"
#include "vertexflow/solver.hpp"
#include "vertexflow/sparse.hpp"
#include "vertexflow/verify.hpp"

namespace vf = vertexflow;

namespace {

vf::CsrMatrix from_dense(const Eigen::MatrixXd& d) {
    vf::TripletBuilder b(d.rows(), d.cols());
    for (Eigen::Index r = 0; r < d.rows(); ++r)
        for (Eigen::Index c = 0; c < d.cols(); ++c)
            if (d(r, c) != 0.0) b.add(r, c, d(r, c));
    return b.finalize();
}

vf::BlockSystem random_system(std::mt19937_64& rng, int dim, double tau) {
    auto problem = vftest::random_problem(rng, dim);
    const std::size_t M = problem.mesh().num_vertices();
    const auto s_prev = vftest::uniform_vector(M, 0.15, 0.85, rng);
    const auto s_it = vftest::uniform_vector(M, 0.15, 0.85, rng);
    const auto p_it = vftest::uniform_vector(M, -1e3, 1e3, rng);
    return vf::assemble_system(problem.context(tau), problem.step_sources(s_prev, tau), s_prev, s_it, p_it);
}

// The manufactured problem's first step on an 8 x 8 mesh with its boundary data.
vf::BlockSystem manufactured_step_system() {
    const vf::ManufacturedCase mc;
    const auto problem = mc.make_problem(8);
    const double tau = 1.0 / 8;
    const auto state = vf::initialize(problem);
    const auto sys = vf::assemble_system(problem.context(tau), problem.step_sources(state.S, tau), state.S, state.S,
                                         state.P);
    const auto& d = *problem.dirichlet();
    std::vector<double> sv, pv;
    for (int i : d.nodes) {
        sv.push_back(d.saturation(problem.mesh().vertex(i), tau));
        pv.push_back(d.pressure(problem.mesh().vertex(i), tau));
    }
    return vf::apply_dirichlet(sys, problem.mesh(), d.nodes, sv, pv);
}

double residual_norm(const vf::CsrMatrix& a, std::span<const double> x, std::span<const double> b) {
    const auto ax = a.multiply(x);
    double r = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        r += (b[i] - ax[i]) * (b[i] - ax[i]);
        nb += b[i] * b[i];
    }
    return std::sqrt(r / nb);
}

}  // namespace

TEST(Solver, ShiftedBlocksRoundTrip) {
    std::mt19937_64 rng(5);
    for (int dim : {2, 3}) {
        const auto sys = random_system(rng, dim, 30.0);
        const std::size_t M = sys.size();
        const auto blocks = vf::shift_blocks(sys);
        ASSERT_EQ(blocks.a11.size(), M - 1);
        EXPECT_EQ(blocks.a12.rows(), M - 1);
        EXPECT_EQ(blocks.a12.cols(), M + 1);
        EXPECT_EQ(blocks.a21.rows(), M + 1);
        EXPECT_EQ(blocks.a22.rows(), M + 1);
        // The shifted ordering (S_0..S_{M-2} | S_{M-1}, P) is the natural one,
        // so the blocks tile the full matrix.
        Eigen::MatrixXd k(2 * M, 2 * M);
        k.setZero();
        for (std::size_t i = 0; i + 1 < M; ++i) k(i, i) = blocks.a11[i];
        k.block(0, M - 1, M - 1, M + 1) = vftest::dense(blocks.a12);
        k.block(M - 1, 0, M + 1, M - 1) = vftest::dense(blocks.a21);
        k.block(M - 1, M - 1, M + 1, M + 1) = vftest::dense(blocks.a22);
        EXPECT_EQ((k - vftest::dense(sys.to_csr())).cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(Solver, FactorizationIdentity) {
    std::mt19937_64 rng(6);
    const auto sys = random_system(rng, 2, 20.0);
    const std::size_t M = sys.size();
    const auto blocks = vf::shift_blocks(sys);
    const Eigen::MatrixXd a12 = vftest::dense(blocks.a12), a21 = vftest::dense(blocks.a21), a22 = vftest::dense(blocks.a22);
    Eigen::MatrixXd inv11 = Eigen::MatrixXd::Zero(M - 1, M - 1), a11 = inv11;
    for (std::size_t i = 0; i + 1 < M; ++i) {
        a11(i, i) = blocks.a11[i];
        inv11(i, i) = 1.0 / blocks.a11[i];
    }
    const Eigen::MatrixXd schur = vftest::dense(vf::form_schur(blocks));
    const Eigen::MatrixXd ref = a22 - a21 * inv11 * a12;
    EXPECT_LE((schur - ref).cwiseAbs().maxCoeff(), 1e-12 * ref.cwiseAbs().maxCoeff());

    const Eigen::Index n1 = M - 1, n2 = M + 1;
    Eigen::MatrixXd L = Eigen::MatrixXd::Identity(2 * M, 2 * M), D = Eigen::MatrixXd::Zero(2 * M, 2 * M),
                    U = Eigen::MatrixXd::Identity(2 * M, 2 * M);
    L.block(n1, 0, n2, n1) = a21 * inv11;
    D.block(0, 0, n1, n1) = a11;
    D.block(n1, n1, n2, n2) = schur;
    U.block(0, n1, n1, n2) = inv11 * a12;
    const Eigen::MatrixXd k = vftest::dense(sys.to_csr());
    EXPECT_LE((L * D * U - k).cwiseAbs().maxCoeff(), 1e-10 * k.cwiseAbs().maxCoeff());
}

TEST(Solver, SchurWithoutCouplingIsA22) {
    vf::ShiftedBlocks b;
    b.a11 = {2.0, 4.0};
    Eigen::MatrixXd a12(2, 3), a22(3, 3);
    a12 << 1, 2, 3, 4, 5, 6;
    a22 << 1, 0, 2, 0, 3, 0, 4, 0, 5;
    b.a12 = from_dense(a12);
    b.a21 = vf::CsrMatrix(3, 2);
    b.a22 = from_dense(a22);
    EXPECT_EQ((vftest::dense(vf::form_schur(b)) - a22).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Solver, SmallestSystem) {
    // M = 2: A11 is 1 x 1.
    vf::BlockSystem sys;
    Eigen::MatrixXd kss(2, 2), ksp(2, 2), kps(2, 2), kpp(2, 2);
    kss << 3, 0, 0, 0;
    ksp << 1, -1, 0.5, 0.5;
    kps << -3, 0.2, -0.1, -2;
    kpp << 2, -2, -2, 2;
    sys.Kss = from_dense(kss);
    sys.Ksp = from_dense(ksp);
    sys.Kps = from_dense(kps);
    sys.Kpp = from_dense(kpp);
    sys.fs = {1.0, 0.0};
    sys.fp = {0.5, -0.25};
    const auto blocks = vf::shift_blocks(sys);
    ASSERT_EQ(blocks.a11.size(), 1u);
    EXPECT_EQ(blocks.a11[0], 3.0);
    for (auto inner : {vf::InnerSolve::direct, vf::InnerSolve::ilu0}) {
        vf::SolverConfig cfg;
        cfg.inner = inner;
        const auto sol = vf::solve_block(sys, cfg);
        const Eigen::VectorXd x = vftest::dense(sys.to_csr()).fullPivLu().solve(vftest::to_eigen(sys.rhs()));
        EXPECT_NEAR(sol.s[0], x(0), 1e-10);
        EXPECT_NEAR(sol.s[1], x(1), 1e-10);
        EXPECT_NEAR(sol.p[0], x(2), 1e-10);
        EXPECT_NEAR(sol.p[1], x(3), 1e-10);
    }
}

TEST(Solver, ZeroTimeDerivativeBlockIsSingular) {
    std::mt19937_64 rng(2);
    auto sys = random_system(rng, 2, 10.0);
    sys.Kss.values()[0] = 0.0;
    EXPECT_THROW(vf::shift_blocks(sys), vf::SingularBlock);
    EXPECT_THROW(vf::solve_block(sys), vf::SingularBlock);
}

TEST(Solver, GmresIdentity) {
    Eigen::MatrixXd i5 = Eigen::MatrixXd::Identity(5, 5);
    const auto a = from_dense(i5);
    const std::vector<double> b{1, 2, 3, 4, 5};
    std::vector<double> x(5, 0.0);
    const auto rep = vf::gmres(a, b, x, 1e-12, 10, vf::IdentityPreconditioner{});
    EXPECT_EQ(rep.iterations, 1);
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(x[k], b[k], 1e-14);
}

TEST(Solver, GmresSpdMatchesDense) {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g;
    Eigen::MatrixXd r(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) r(i, j) = g(rng);
    const Eigen::MatrixXd spd = r * r.transpose() + 5 * Eigen::MatrixXd::Identity(5, 5);
    const auto a = from_dense(spd);
    const std::vector<double> b{1, -1, 2, 0.5, 3};
    std::vector<double> x(5, 0.0);
    const auto rep = vf::gmres(a, b, x, 1e-13, 50, vf::IdentityPreconditioner{});
    const Eigen::VectorXd ref = spd.llt().solve(vftest::to_eigen(b));
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(x[k], ref(k), 1e-10 * ref.cwiseAbs().maxCoeff());
    ASSERT_GE(rep.history.size(), 2u);
    for (std::size_t k = 1; k < rep.history.size(); ++k) EXPECT_LE(rep.history[k], rep.history[k - 1] * (1 + 1e-12));
}

TEST(Solver, GmresReportsNonConvergence) {
    const auto sys = manufactured_step_system();
    const auto blocks = vf::shift_blocks(sys);
    const auto schur = vf::form_schur(blocks);
    std::vector<double> b(schur.rows(), 1.0), x(schur.rows(), 0.0);
    try {
        vf::gmres(schur, b, x, 1e-14, 2, vf::IdentityPreconditioner{});
        FAIL() << "expected NoConvergence";
    } catch (const vf::NoConvergence& e) {
        EXPECT_EQ(e.report().iterations, 2);
        EXPECT_GT(e.report().relative_residual, 1e-14);
    }
}

TEST(Solver, ManufacturedStepReachesTolerance) {
    const auto sys = manufactured_step_system();
    const auto blocks = vf::shift_blocks(sys);
    const auto schur = vf::form_schur(blocks);
    std::vector<double> b(schur.rows());
    std::mt19937_64 rng(1);
    b = vftest::uniform_vector(schur.rows(), -1.0, 1.0, rng);
    std::vector<double> x(schur.rows(), 0.0);
    const vf::Ilu0 ilu(schur);
    const auto rep = vf::gmres(schur, b, x, 1e-8, 500, ilu);
    EXPECT_LE(rep.relative_residual, 1e-8);
    EXPECT_LE(residual_norm(schur, x, b), 1e-8);

    const auto sol = vf::solve_block(sys);
    std::vector<double> full(sol.s);
    full.insert(full.end(), sol.p.begin(), sol.p.end());
    EXPECT_LE(residual_norm(sys.to_csr(), full, sys.rhs()), 1e-8);
    EXPECT_LE(sol.report.relative_residual, 1e-8);
}

TEST(Solver, IluIsExactOnTridiagonal) {
    const int n = 12;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        t(i, i) = 4.0 + i;
        if (i > 0) t(i, i - 1) = -1.0;
        if (i + 1 < n) t(i, i + 1) = -2.0;
    }
    const vf::Ilu0 ilu(from_dense(t));
    std::vector<double> r(n), z(n);
    for (int i = 0; i < n; ++i) r[i] = std::sin(i + 1.0);
    ilu.apply(r, z);
    const Eigen::VectorXd ref = t.lu().solve(vftest::to_eigen(r));
    for (int i = 0; i < n; ++i) EXPECT_NEAR(z[i], ref(i), 1e-13);
}

TEST(Solver, SparseDirectSolves) {
    std::mt19937_64 rng(7);
    const auto sys = random_system(rng, 2, 100.0);
    const auto k = sys.to_csr();
    const vf::SparseDirect lu(k);
    const auto b = sys.rhs();
    std::vector<double> x(b.size());
    lu.apply(b, x);
    EXPECT_LE(residual_norm(k, x, b), 1e-9);
}

TEST(Solver, BlockSolveMatchesDenseOnRandomSystems) {
    // The systems have condition numbers near 1e9, so the iterative inner
    // solve is run at a residual tolerance that implies a 1e-8 forward error.
    std::mt19937_64 rng(20240917);
    std::uniform_real_distribution<double> logtau(0.0, 3.0);
    vf::SolverConfig direct, iterative;
    direct.inner = vf::InnerSolve::direct;
    iterative.rtol = 1e-10;
    for (int trial = 0; trial < 20; ++trial) {
        const int dim = trial % 4 == 3 ? 3 : 2;
        const auto sys = random_system(rng, dim, std::pow(10.0, logtau(rng)));
        const std::size_t M = sys.size();
        ASSERT_LE(M, 30u);
        const Eigen::VectorXd ref = vftest::dense(sys.to_csr()).fullPivLu().solve(vftest::to_eigen(sys.rhs()));
        for (const auto& cfg : {direct, iterative}) {
            const auto sol = vf::solve_block(sys, cfg);
            const double es = (vftest::to_eigen(sol.s) - ref.head(M)).norm() / ref.head(M).norm();
            const double ep = (vftest::to_eigen(sol.p) - ref.tail(M)).norm() / ref.tail(M).norm();
            EXPECT_LE(es, 1e-8) << "trial " << trial;
            EXPECT_LE(ep, 1e-8) << "trial " << trial;
        }
    }
}

TEST(Solver, WarmStartGivesSameSolution) {
    std::mt19937_64 rng(8);
    const auto sys = random_system(rng, 2, 60.0);
    const auto cold = vf::solve_block(sys);
    const auto warm = vf::solve_block(sys, {}, cold.s, cold.p);
    EXPECT_LE(warm.report.iterations, cold.report.iterations);
    for (std::size_t i = 0; i < sys.size(); ++i) {
        EXPECT_NEAR(warm.s[i], cold.s[i], 1e-8);
        EXPECT_NEAR(warm.p[i], cold.p[i], 1e-8 * (1 + std::abs(cold.p[i])));
    }
}
