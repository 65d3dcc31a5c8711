#include "vertexflow/sparse.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "vertexflow/error.hpp"

namespace vertexflow {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::int64_t> row_ptr,
                     std::vector<std::int32_t> col_idx, std::vector<double> values)
    : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)), values_(std::move(values)) {
    check_invariants();
}

void CsrMatrix::check_invariants() const {
    if (row_ptr_.size() != rows_ + 1 || row_ptr_.front() != 0 ||
        static_cast<std::size_t>(row_ptr_.back()) != col_idx_.size() || col_idx_.size() != values_.size())
        throw Error("CSR arrays have inconsistent sizes");
    for (std::size_t r = 0; r < rows_; ++r) {
        if (row_ptr_[r] > row_ptr_[r + 1]) throw Error("CSR row offsets are not monotone");
        for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            if (col_idx_[k] < 0 || static_cast<std::size_t>(col_idx_[k]) >= cols_)
                throw Error(fmt::format("CSR column {} out of range in row {}", col_idx_[k], r));
            if (k > row_ptr_[r] && col_idx_[k] <= col_idx_[k - 1])
                throw Error(fmt::format("CSR columns not sorted/unique in row {}", r));
        }
    }
}

std::int64_t CsrMatrix::find(std::size_t r, std::size_t c) const {
    const auto b = col_idx_.begin() + row_ptr_[r], e = col_idx_.begin() + row_ptr_[r + 1];
    const auto it = std::lower_bound(b, e, static_cast<std::int32_t>(c));
    if (it == e || *it != static_cast<std::int32_t>(c)) return -1;
    return it - col_idx_.begin();
}

double CsrMatrix::at(std::size_t r, std::size_t c) const {
    const auto k = find(r, c);
    return k < 0 ? 0.0 : values_[k];
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const { kernels::spmv(view(), x, y); }

std::vector<double> CsrMatrix::multiply(std::span<const double> x) const {
    std::vector<double> y(rows_);
    multiply(x, y);
    return y;
}

std::vector<double> CsrMatrix::diagonal() const {
    std::vector<double> d(std::min(rows_, cols_), 0.0);
    for (std::size_t r = 0; r < d.size(); ++r) d[r] = at(r, r);
    return d;
}

std::vector<double> CsrMatrix::row_sums() const {
    std::vector<double> s(rows_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r)
        for (double v : row_vals(r)) s[r] += v;
    return s;
}

CsrMatrix CsrMatrix::transpose() const {
    std::vector<std::int64_t> ptr(cols_ + 1, 0);
    for (auto c : col_idx_) ++ptr[c + 1];
    std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
    std::vector<std::int32_t> cols(nnz());
    std::vector<double> vals(nnz());
    auto next = ptr;
    for (std::size_t r = 0; r < rows_; ++r)
        for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            const auto p = next[col_idx_[k]]++;
            cols[p] = static_cast<std::int32_t>(r);
            vals[p] = values_[k];
        }
    return CsrMatrix(cols_, rows_, std::move(ptr), std::move(cols), std::move(vals));
}

std::vector<double> CsrMatrix::to_dense() const {
    std::vector<double> d(rows_ * cols_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r)
        for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) d[r * cols_ + col_idx_[k]] = values_[k];
    return d;
}

CsrMatrix CsrMatrix::with_rows_replaced(
    const std::map<std::size_t, std::vector<std::pair<std::int32_t, double>>>& rows) const {
    std::vector<std::int64_t> ptr{0};
    std::vector<std::int32_t> cols;
    std::vector<double> vals;
    ptr.reserve(rows_ + 1);
    cols.reserve(nnz());
    vals.reserve(nnz());
    for (std::size_t r = 0; r < rows_; ++r) {
        if (auto it = rows.find(r); it != rows.end()) {
            auto entries = it->second;
            std::sort(entries.begin(), entries.end());
            for (std::size_t k = 0; k < entries.size(); ++k) {
                if (k > 0 && entries[k].first == cols.back() && ptr.back() < static_cast<std::int64_t>(cols.size())) {
                    vals.back() += entries[k].second;
                    continue;
                }
                cols.push_back(entries[k].first);
                vals.push_back(entries[k].second);
            }
        } else {
            for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
                cols.push_back(col_idx_[k]);
                vals.push_back(values_[k]);
            }
        }
        ptr.push_back(static_cast<std::int64_t>(cols.size()));
    }
    return CsrMatrix(rows_, cols_, std::move(ptr), std::move(cols), std::move(vals));
}

CsrMatrix CsrMatrix::block(std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) const {
    std::vector<std::int64_t> ptr{0};
    std::vector<std::int32_t> cols;
    std::vector<double> vals;
    for (std::size_t r = r0; r < r1; ++r) {
        for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            const auto c = static_cast<std::size_t>(col_idx_[k]);
            if (c >= c0 && c < c1) {
                cols.push_back(static_cast<std::int32_t>(c - c0));
                vals.push_back(values_[k]);
            }
        }
        ptr.push_back(static_cast<std::int64_t>(cols.size()));
    }
    return CsrMatrix(r1 - r0, c1 - c0, std::move(ptr), std::move(cols), std::move(vals));
}

CsrMatrix TripletBuilder::finalize(bool drop_zeros) const {
    // Stable counting sort by row, then stable sort by column within a row,
    // so duplicate contributions are summed in insertion order.
    std::vector<std::int64_t> count(rows_ + 1, 0);
    for (const auto& e : entries_) {
        if (e.r >= rows_ || e.c >= cols_) throw Error(fmt::format("triplet ({}, {}) outside {}x{}", e.r, e.c, rows_, cols_));
        ++count[e.r + 1];
    }
    std::partial_sum(count.begin(), count.end(), count.begin());
    std::vector<std::size_t> order(entries_.size());
    auto next = count;
    for (std::size_t k = 0; k < entries_.size(); ++k) order[next[entries_[k].r]++] = k;

    std::vector<std::int64_t> ptr{0};
    ptr.reserve(rows_ + 1);
    std::vector<std::int32_t> cols;
    std::vector<double> vals;
    cols.reserve(entries_.size());
    vals.reserve(entries_.size());
    for (std::size_t r = 0; r < rows_; ++r) {
        auto b = order.begin() + count[r], e = order.begin() + count[r + 1];
        std::stable_sort(b, e, [&](std::size_t x, std::size_t y) { return entries_[x].c < entries_[y].c; });
        for (auto it = b; it != e;) {
            const std::size_t c = entries_[*it].c;
            double v = 0.0;
            for (; it != e && entries_[*it].c == c; ++it) v += entries_[*it].v;
            if (drop_zeros && v == 0.0) continue;
            cols.push_back(static_cast<std::int32_t>(c));
            vals.push_back(v);
        }
        ptr.push_back(static_cast<std::int64_t>(cols.size()));
    }
    return CsrMatrix(rows_, cols_, std::move(ptr), std::move(cols), std::move(vals));
}

CsrMatrix assemble_2x2(const CsrMatrix& a, const CsrMatrix& b, const CsrMatrix& c, const CsrMatrix& d) {
    if (a.rows() != b.rows() || c.rows() != d.rows() || a.cols() != c.cols() || b.cols() != d.cols())
        throw Error("assemble_2x2: block dimensions do not conform");
    const std::size_t n0 = a.rows(), n1 = c.rows(), m0 = a.cols();
    std::vector<std::int64_t> ptr{0};
    std::vector<std::int32_t> cols;
    std::vector<double> vals;
    const auto append = [&](const CsrMatrix& left, const CsrMatrix& right, std::size_t r) {
        for (auto k = left.row_ptr()[r]; k < left.row_ptr()[r + 1]; ++k) {
            cols.push_back(left.col_idx()[k]);
            vals.push_back(left.values()[k]);
        }
        for (auto k = right.row_ptr()[r]; k < right.row_ptr()[r + 1]; ++k) {
            cols.push_back(static_cast<std::int32_t>(right.col_idx()[k] + m0));
            vals.push_back(right.values()[k]);
        }
        ptr.push_back(static_cast<std::int64_t>(cols.size()));
    };
    for (std::size_t r = 0; r < n0; ++r) append(a, b, r);
    for (std::size_t r = 0; r < n1; ++r) append(c, d, r);
    return CsrMatrix(n0 + n1, a.cols() + b.cols(), std::move(ptr), std::move(cols), std::move(vals));
}

}  // namespace vertexflow
