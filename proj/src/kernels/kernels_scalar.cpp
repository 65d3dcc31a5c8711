#include "vertexflow/kernels.hpp"

namespace vertexflow::kernels::scalar {

namespace {

double dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void spmv_rows(const CsrView& a, const double* x, double* y, std::size_t row_begin, std::size_t row_end) {
    for (std::size_t r = row_begin; r < row_end; ++r) {
        double s = 0.0;
        for (std::int64_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) s += a.vals[k] * x[a.cols[k]];
        y[r] = s;
    }
}

}  // namespace

const KernelTable table{&dot, &axpy, &scale, &spmv_rows};

}  // namespace vertexflow::kernels::scalar
