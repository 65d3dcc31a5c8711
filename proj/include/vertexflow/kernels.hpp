#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

// Dense/sparse inner-loop kernels used by the Krylov solver.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant compiled in its own translation unit. The active backend
// is chosen once at runtime from the CPU feature set and may be overridden
// (tests pin each backend to check equivalence against the reference).

namespace vertexflow::kernels {

enum class Backend { scalar, avx2 };

/// Raw CSR view; column indices are 32-bit.
struct CsrView {
    std::size_t rows = 0;
    const std::int64_t* row_ptr = nullptr;
    const std::int32_t* cols = nullptr;
    const double* vals = nullptr;
};

struct KernelTable {
    double (*dot)(const double* x, const double* y, std::size_t n);
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    void (*scale)(double a, double* x, std::size_t n);
    /// y[r] = sum_k A[r,k] x[k] for rows in [row_begin, row_end).
    void (*spmv_rows)(const CsrView& a, const double* x, double* y, std::size_t row_begin, std::size_t row_end);
};

namespace scalar {
extern const KernelTable table;
}
namespace avx2 {
/// Null entries when the translation unit was built without AVX2 support.
extern const KernelTable table;
bool compiled();
}  // namespace avx2

bool cpu_supports_avx2();

/// Best backend available on this machine.
Backend detect_backend();
Backend active_backend();
/// Throws Error when the requested backend is not available.
void set_backend(Backend b);
std::string_view backend_name(Backend b);
Backend parse_backend(std::string_view name);

/// Worker threads for row-parallel kernels (1 = serial). Results do not
/// depend on the thread count.
void set_threads(int n);
int threads();

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
void axpy(double a, std::span<const double> x, std::span<double> y);
void scale(double a, std::span<double> x);
void spmv(const CsrView& a, std::span<const double> x, std::span<double> y);

}  // namespace vertexflow::kernels
