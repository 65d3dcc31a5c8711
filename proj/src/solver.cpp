#include "vertexflow/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "vertexflow/kernels.hpp"
#include "vertexflow/log.hpp"

namespace vertexflow {

void IdentityPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
    std::copy(r.begin(), r.end(), z.begin());
}

// ---------------------------------------------------------------------------
// ILU(0)
// ---------------------------------------------------------------------------

Ilu0::Ilu0(const CsrMatrix& a) {
    const std::size_t n = a.rows();
    if (n != a.cols()) throw Error("ILU(0) needs a square matrix");
    CsrMatrix work = a;
    if (n > 1 && a.at(0, 0) == 0.0) {
        // Pair the zero-diagonal row 0 with the row r* that couples most
        // strongly to column 0; r* takes column 0 and row 0 takes column r*.
        std::size_t pivot_row = 0;
        double best = 0.0;
        for (std::size_t r = 1; r < n; ++r) {
            const double v = std::abs(a.at(r, 0));
            if (v > best && a.at(0, r) != 0.0) {
                best = v;
                pivot_row = r;
            }
        }
        if (pivot_row == 0) throw SingularBlock("ILU(0): zero leading pivot with no admissible pairing");
        for (std::size_t r = 1; r < n; ++r)
            if (r != pivot_row) {
                row_perm_.push_back(r);
                col_perm_.push_back(r);
            }
        row_perm_.push_back(pivot_row);
        col_perm_.push_back(0);
        row_perm_.push_back(0);
        col_perm_.push_back(pivot_row);

        std::vector<std::size_t> inv_col(n);
        for (std::size_t k = 0; k < n; ++k) inv_col[col_perm_[k]] = k;
        TripletBuilder tb(n, n);
        tb.reserve(a.nnz());
        for (std::size_t k = 0; k < n; ++k) {
            const auto cols = a.row_cols(row_perm_[k]);
            const auto vals = a.row_vals(row_perm_[k]);
            for (std::size_t q = 0; q < cols.size(); ++q) tb.add(k, inv_col[cols[q]], vals[q]);
        }
        work = tb.finalize();
    }

    const auto& ptr = work.row_ptr();
    const auto& col = work.col_idx();
    auto& val = work.values();
    diag_pos_.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) diag_pos_[i] = work.find(i, i);

    std::vector<std::int64_t> marker(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto k = ptr[i]; k < ptr[i + 1]; ++k) marker[col[k]] = k;
        double row_norm = 0.0;
        for (auto k = ptr[i]; k < ptr[i + 1]; ++k) row_norm = std::max(row_norm, std::abs(val[k]));
        for (auto k = ptr[i]; k < ptr[i + 1] && static_cast<std::size_t>(col[k]) < i; ++k) {
            const auto kk = static_cast<std::size_t>(col[k]);
            val[k] /= val[diag_pos_[kk]];
            const double lik = val[k];
            for (auto q = diag_pos_[kk] + 1; q < ptr[kk + 1]; ++q) {
                const auto pos = marker[col[q]];
                if (pos >= 0) val[pos] -= lik * val[q];
            }
        }
        if (diag_pos_[i] < 0) throw SingularBlock(fmt::format("ILU(0): row {} has no diagonal entry", i));
        double& piv = val[diag_pos_[i]];
        const double floor = 1e-13 * (row_norm > 0.0 ? row_norm : 1.0);
        if (std::abs(piv) < floor) piv = piv < 0.0 ? -floor : floor;
        for (auto k = ptr[i]; k < ptr[i + 1]; ++k) marker[col[k]] = -1;
    }
    lu_ = std::move(work);
}

void Ilu0::apply(std::span<const double> r, std::span<double> z) const {
    const std::size_t n = lu_.rows();
    const auto& ptr = lu_.row_ptr();
    const auto& col = lu_.col_idx();
    const auto& val = lu_.values();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = permuted() ? r[row_perm_[i]] : r[i];
        for (auto k = ptr[i]; k < diag_pos_[i]; ++k) s -= val[k] * y[col[k]];
        y[i] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (auto k = diag_pos_[ii] + 1; k < ptr[ii + 1]; ++k) s -= val[k] * y[col[k]];
        y[ii] = s / val[diag_pos_[ii]];
    }
    if (permuted()) {
        for (std::size_t k = 0; k < n; ++k) z[col_perm_[k]] = y[k];
    } else {
        std::copy(y.begin(), y.end(), z.begin());
    }
}

// ---------------------------------------------------------------------------
// Sparse direct (Eigen SparseLU)
// ---------------------------------------------------------------------------

struct SparseDirect::Impl {
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
};

SparseDirect::SparseDirect(const CsrMatrix& a) : impl_(std::make_unique<Impl>()) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(a.nnz());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto cols = a.row_cols(r);
        const auto vals = a.row_vals(r);
        for (std::size_t k = 0; k < cols.size(); ++k) trip.emplace_back(static_cast<int>(r), cols[k], vals[k]);
    }
    Eigen::SparseMatrix<double> m(static_cast<int>(a.rows()), static_cast<int>(a.cols()));
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    impl_->lu.analyzePattern(m);
    impl_->lu.factorize(m);
    if (impl_->lu.info() != Eigen::Success)
        throw SingularBlock(fmt::format("sparse LU factorization failed: {}", impl_->lu.lastErrorMessage()));
}

SparseDirect::~SparseDirect() = default;

void SparseDirect::apply(std::span<const double> r, std::span<double> z) const {
    const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(r.size()));
    Eigen::VectorXd sol = impl_->lu.solve(rv);
    std::copy(sol.data(), sol.data() + sol.size(), z.begin());
}

// ---------------------------------------------------------------------------
// GMRES
// ---------------------------------------------------------------------------

SolveReport gmres(const CsrMatrix& a, std::span<const double> b, std::span<double> x, double rtol, int max_iter,
                  const Preconditioner& precond) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = b.size();
    if (a.rows() != n || a.cols() != n || x.size() != n) throw Error("gmres: dimension mismatch");
    for (double v : b)
        if (!std::isfinite(v)) throw NumericState("gmres: non-finite right-hand side");

    SolveReport rep;
    const double bnorm = kernels::norm2(b);
    const auto finish = [&] {
        rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return rep;
    };
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        rep.history.push_back(0.0);
        return finish();
    }
    const double target = rtol * bnorm;

    std::vector<double> r(n), w(n), z(n);
    const auto true_residual = [&] {
        a.multiply(x, r);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
        return kernels::norm2(r);
    };

    double res = true_residual();
    rep.history.push_back(res / bnorm);
    const int restart = std::max(1, max_iter);
    std::vector<std::vector<double>> v;
    std::vector<std::vector<double>> h;  // column-major Hessenberg, h[j][i]
    std::vector<double> cs, sn, g;

    while (res > target && rep.iterations < max_iter) {
        v.assign(1, r);
        kernels::scale(1.0 / res, v[0]);
        h.clear();
        cs.clear();
        sn.clear();
        g.assign(1, res);
        int j = 0;
        for (; j < restart && rep.iterations < max_iter; ++j) {
            precond.apply(v[j], z);
            a.multiply(z, w);
            std::vector<double> col(j + 2, 0.0);
            for (int i = 0; i <= j; ++i) {
                col[i] = kernels::dot(w, v[i]);
                kernels::axpy(-col[i], v[i], w);
            }
            col[j + 1] = kernels::norm2(w);
            for (int i = 0; i < j; ++i) {
                const double t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            const double denom = std::hypot(col[j], col[j + 1]);
            const double c = denom == 0.0 ? 1.0 : col[j] / denom;
            const double s = denom == 0.0 ? 0.0 : col[j + 1] / denom;
            cs.push_back(c);
            sn.push_back(s);
            const double hj1 = col[j + 1];
            col[j] = c * col[j] + s * col[j + 1];
            col[j + 1] = 0.0;
            g.push_back(-s * g[j]);
            g[j] = c * g[j];
            h.push_back(std::move(col));
            ++rep.iterations;
            rep.history.push_back(std::abs(g[j + 1]) / bnorm);
            if (std::abs(g[j + 1]) <= target || hj1 == 0.0) {
                ++j;
                break;
            }
            v.push_back(w);
            kernels::scale(1.0 / hj1, v.back());
        }
        // Back substitution for y, then x += M^{-1} V y.
        std::vector<double> y(j);
        for (int i = j - 1; i >= 0; --i) {
            double s = g[i];
            for (int k = i + 1; k < j; ++k) s -= h[k][i] * y[k];
            y[i] = s / h[i][i];
        }
        std::fill(w.begin(), w.end(), 0.0);
        for (int i = 0; i < j; ++i) kernels::axpy(y[i], v[i], w);
        precond.apply(w, z);
        kernels::axpy(1.0, z, x);
        res = true_residual();
        if (!std::isfinite(res)) throw NumericState("gmres: residual became non-finite");
    }
    rep.relative_residual = res / bnorm;
    finish();
    if (res > target)
        throw NoConvergence(fmt::format("GMRES stopped after {} iterations at relative residual {:.3e} (rtol {:.1e})",
                                        rep.iterations, rep.relative_residual, rtol),
                            rep);
    return rep;
}

// ---------------------------------------------------------------------------
// Schur pipeline
// ---------------------------------------------------------------------------

ShiftedBlocks shift_blocks(const BlockSystem& system) {
    const std::size_t m = system.size();
    if (m == 0) throw Error("empty block system");
    const std::size_t split = m - 1;
    ShiftedBlocks sb;
    sb.a11.resize(split);
    for (std::size_t i = 0; i < split; ++i) {
        const auto cols = system.Kss.row_cols(i);
        const auto vals = system.Kss.row_vals(i);
        double d = 0.0;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (static_cast<std::size_t>(cols[k]) == i)
                d = vals[k];
            else if (static_cast<std::size_t>(cols[k]) < split && vals[k] != 0.0)
                throw SingularBlock(fmt::format("A11 is not diagonal (row {}, col {})", i, cols[k]));
        }
        if (d == 0.0) throw SingularBlock(fmt::format("A11 has a zero diagonal entry at row {}", i));
        sb.a11[i] = d;
    }
    const CsrMatrix k = system.to_csr();
    const std::size_t n = 2 * m;
    sb.a12 = k.block(0, split, split, n);
    sb.a21 = k.block(split, n, 0, split);
    sb.a22 = k.block(split, n, split, n);
    return sb;
}

CsrMatrix form_schur(const ShiftedBlocks& blocks) {
    const std::size_t n = blocks.a22.rows();
    TripletBuilder tb(n, n);
    tb.reserve(blocks.a22.nnz() + 4 * blocks.a21.nnz() * 8);
    for (std::size_t r = 0; r < n; ++r) {
        const auto c22 = blocks.a22.row_cols(r);
        const auto v22 = blocks.a22.row_vals(r);
        for (std::size_t k = 0; k < c22.size(); ++k) tb.add(r, c22[k], v22[k]);
        const auto c21 = blocks.a21.row_cols(r);
        const auto v21 = blocks.a21.row_vals(r);
        for (std::size_t k = 0; k < c21.size(); ++k) {
            const auto q = static_cast<std::size_t>(c21[k]);
            const double coef = v21[k] / blocks.a11[q];
            const auto c12 = blocks.a12.row_cols(q);
            const auto v12 = blocks.a12.row_vals(q);
            for (std::size_t t = 0; t < c12.size(); ++t) tb.add(r, c12[t], -coef * v12[t]);
        }
    }
    return tb.finalize();
}

BlockSolution solve_block(const BlockSystem& system, const SolverConfig& config, std::span<const double> s_guess,
                          std::span<const double> p_guess) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t m = system.size();
    const std::size_t split = m - 1;
    const ShiftedBlocks blocks = shift_blocks(system);
    const CsrMatrix schur = form_schur(blocks);

    const std::vector<double> f = system.rhs();
    const std::span<const double> b1(f.data(), split);
    const std::span<const double> b2(f.data() + split, m + 1);

    std::vector<double> y1(split);
    for (std::size_t i = 0; i < split; ++i) y1[i] = b1[i] / blocks.a11[i];
    std::vector<double> r2 = blocks.a21.multiply(y1);
    for (std::size_t i = 0; i < r2.size(); ++i) r2[i] = b2[i] - r2[i];

    std::vector<double> x2(m + 1, 0.0);
    if (!s_guess.empty() || !p_guess.empty()) {
        if (s_guess.size() != m || p_guess.size() != m) throw Error("solve_block: guess has the wrong length");
        x2[0] = s_guess[split];
        std::copy(p_guess.begin(), p_guess.end(), x2.begin() + 1);
    }
    const CsrMatrix k = system.to_csr();
    const double fnorm = kernels::norm2(f);
    std::vector<double> x1(split), full(2 * m), res(2 * m);
    const auto back_substitute = [&] {
        blocks.a12.multiply(x2, x1);
        for (std::size_t i = 0; i < split; ++i) x1[i] = (b1[i] - x1[i]) / blocks.a11[i];
        std::copy(x1.begin(), x1.end(), full.begin());
        std::copy(x2.begin(), x2.end(), full.begin() + static_cast<std::ptrdiff_t>(split));
        k.multiply(full, res);
        for (std::size_t i = 0; i < res.size(); ++i) res[i] = f[i] - res[i];
        return fnorm > 0.0 ? kernels::norm2(res) / fnorm : kernels::norm2(res);
    };

    SolveReport rep;
    double relres = 0.0;
    if (config.inner == InnerSolve::direct) {
        SparseDirect(schur).apply(r2, x2);
        relres = back_substitute();
    } else {
        // The mean-pressure row is dense with entries of the nodal masses; its
        // rounding error swamps the other rows unless it is normalized.
        CsrMatrix scaled = schur;
        std::vector<double> rhs = r2;
        if (system.has_mean_constraint) {
            double w = 0.0;
            for (double v : scaled.row_vals(0)) w += std::abs(v);
            if (w > 0.0) {
                auto& vals = scaled.values();
                for (auto q = scaled.row_ptr()[0]; q < scaled.row_ptr()[1]; ++q) vals[q] /= w;
                rhs[0] /= w;
            }
        }
        const double bnorm = kernels::norm2(rhs);
        bool stalled = false;
        if (bnorm > 0.0) {
            // Aim well below the full-system target so the solution error, not
            // just the residual, is small enough for the nonlinear iteration.
            const double inner_rtol = 1e-2 * config.rtol * fnorm / bnorm;
            const Ilu0 ilu(scaled);
            try {
                rep = gmres(scaled, rhs, x2, inner_rtol, config.max_iter, ilu);
            } catch (const NoConvergence& e) {
                rep = e.report();
                stalled = true;
            }
        }
        relres = back_substitute();
        if (stalled && relres > config.rtol) {
            if (!config.fallback_direct)
                throw NoConvergence(fmt::format("block solve stopped after {} iterations at relative residual {:.3e} "
                                                "(rtol {:.1e})",
                                                rep.iterations, relres, config.rtol),
                                    rep);
            log::info("solver", fmt::format("GMRES stalled at relative residual {:.3e}; using the direct factorization",
                                            relres));
            rep.direct_fallback = true;
            SparseDirect(schur).apply(r2, x2);
            relres = back_substitute();
        }
    }
    rep.relative_residual = relres;

    BlockSolution sol;
    sol.s = std::move(x1);
    sol.s.push_back(x2[0]);
    sol.p.assign(x2.begin() + 1, x2.end());
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (double v : full)
        if (!std::isfinite(v)) throw NumericState("block solve produced a non-finite value");
    sol.report = std::move(rep);
    return sol;
}

}  // namespace vertexflow
