#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vertexflow/assembly.hpp"
#include "vertexflow/error.hpp"
#include "vertexflow/sparse.hpp"

namespace vertexflow {

struct SolveReport {
    int iterations = 0;
    double relative_residual = 0.0;
    double wall_seconds = 0.0;
    /// Relative residual after each iteration (entry 0 is the initial one).
    std::vector<double> history;
    /// The iterative inner solve stalled and the direct factorization was used.
    bool direct_fallback = false;
};

class NoConvergence : public NumericalError {
public:
    NoConvergence(const std::string& what, SolveReport report) : NumericalError(what), report_(std::move(report)) {}
    const SolveReport& report() const { return report_; }

private:
    SolveReport report_;
};

enum class InnerSolve { ilu0, direct };

struct SolverConfig {
    double rtol = 1e-8;
    int max_iter = 500;
    InnerSolve inner = InnerSolve::ilu0;
    /// Retry a stalled ILU-GMRES inner solve with the sparse direct solver.
    bool fallback_direct = true;
};

/// The block system split after the first M-1 unknowns: A11 is the
/// (invertible) diagonal saturation block of nodes 1..M-1, the rest of the
/// unknown vector is (S_M, P_1..P_M).
struct ShiftedBlocks {
    std::vector<double> a11;  // diagonal of A11, length M-1
    CsrMatrix a12;            // (M-1) x (M+1)
    CsrMatrix a21;            // (M+1) x (M-1)
    CsrMatrix a22;            // (M+1) x (M+1)
};

class Preconditioner {
public:
    virtual ~Preconditioner() = default;
    /// z = M^{-1} r
    virtual void apply(std::span<const double> r, std::span<double> z) const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
public:
    void apply(std::span<const double> r, std::span<double> z) const override;
};

/// Incomplete LU with zero fill on the pattern of a (row- and
/// column-permuted) matrix. When the leading diagonal entry of the input is
/// zero (the pure-Neumann constraint row of the Schur complement) the
/// constraint row and its coupled column are moved last so every pivot of the
/// permuted matrix is structurally nonzero.
class Ilu0 final : public Preconditioner {
public:
    explicit Ilu0(const CsrMatrix& a);
    void apply(std::span<const double> r, std::span<double> z) const override;
    bool permuted() const { return !row_perm_.empty(); }

private:
    CsrMatrix lu_;
    std::vector<std::int64_t> diag_pos_;
    std::vector<std::size_t> row_perm_;  // new row -> old row
    std::vector<std::size_t> col_perm_;  // new col -> old col
};

/// Sparse direct factorization (used as an exact inner solve).
class SparseDirect final : public Preconditioner {
public:
    explicit SparseDirect(const CsrMatrix& a);
    ~SparseDirect() override;
    void apply(std::span<const double> r, std::span<double> z) const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

ShiftedBlocks shift_blocks(const BlockSystem& system);

/// S = A22 - A21 A11^{-1} A12.
CsrMatrix form_schur(const ShiftedBlocks& blocks);

/// Right-preconditioned GMRES (modified Gram-Schmidt, Givens rotations) with
/// restart length max_iter. `x` holds the initial guess on entry.
/// Throws NoConvergence when ||b - A x|| > rtol ||b|| after max_iter steps.
SolveReport gmres(const CsrMatrix& a, std::span<const double> b, std::span<double> x, double rtol, int max_iter,
                  const Preconditioner& precond);

struct BlockSolution {
    std::vector<double> s;
    std::vector<double> p;
    SolveReport report;
};

/// Solve the block system through the Schur factorization: eliminate the
/// A11 unknowns, solve the Schur system iteratively (or directly), back
/// substitute. The report carries the inner iteration count and the relative
/// residual of the full system. Optional guesses (length M each) warm-start
/// the iterative inner solve.
BlockSolution solve_block(const BlockSystem& system, const SolverConfig& config = {},
                          std::span<const double> s_guess = {}, std::span<const double> p_guess = {});

}  // namespace vertexflow
