#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "vertexflow/kernels.hpp"

namespace vertexflow {

/// Compressed sparse row matrix with sorted, unique column indices per row.
class CsrMatrix {
public:
    CsrMatrix() = default;
    CsrMatrix(std::size_t rows, std::size_t cols);
    CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::int64_t> row_ptr, std::vector<std::int32_t> col_idx,
              std::vector<double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return values_.size(); }

    const std::vector<std::int64_t>& row_ptr() const { return row_ptr_; }
    const std::vector<std::int32_t>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    std::span<const std::int32_t> row_cols(std::size_t r) const {
        return {col_idx_.data() + row_ptr_[r], static_cast<std::size_t>(row_ptr_[r + 1] - row_ptr_[r])};
    }
    std::span<const double> row_vals(std::size_t r) const {
        return {values_.data() + row_ptr_[r], static_cast<std::size_t>(row_ptr_[r + 1] - row_ptr_[r])};
    }

    /// Entry (r, c), zero when not stored.
    double at(std::size_t r, std::size_t c) const;
    /// Position of (r, c) in the value array, or -1.
    std::int64_t find(std::size_t r, std::size_t c) const;

    kernels::CsrView view() const { return {rows_, row_ptr_.data(), col_idx_.data(), values_.data()}; }

    /// y = A x through the active kernel backend.
    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> multiply(std::span<const double> x) const;

    std::vector<double> diagonal() const;
    std::vector<double> row_sums() const;
    CsrMatrix transpose() const;
    /// Row-major dense copy (tests and small debug dumps).
    std::vector<double> to_dense() const;

    /// Copy with the listed rows replaced by the given (col, value) entries.
    CsrMatrix with_rows_replaced(const std::map<std::size_t, std::vector<std::pair<std::int32_t, double>>>& rows) const;

    /// Sub-block [r0, r1) x [c0, c1), re-indexed from zero.
    CsrMatrix block(std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) const;

    void check_invariants() const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<std::int64_t> row_ptr_{0};
    std::vector<std::int32_t> col_idx_;
    std::vector<double> values_;
};

/// Accumulates (row, col, value) contributions; duplicates are summed in
/// insertion order during finalize, so the result does not depend on the
/// row visit order of callers that push each row's entries in a fixed order.
class TripletBuilder {
public:
    TripletBuilder(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}

    void add(std::size_t r, std::size_t c, double v) { entries_.push_back({r, c, v}); }
    void reserve(std::size_t n) { entries_.reserve(n); }

    /// Drop entries whose summed value is exactly zero when `drop_zeros`.
    CsrMatrix finalize(bool drop_zeros = false) const;

private:
    struct Entry {
        std::size_t r, c;
        double v;
    };
    std::size_t rows_, cols_;
    std::vector<Entry> entries_;
};

/// Embed blocks [[a, b], [c, d]] into one matrix.
CsrMatrix assemble_2x2(const CsrMatrix& a, const CsrMatrix& b, const CsrMatrix& c, const CsrMatrix& d);

}  // namespace vertexflow
