#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "vertexflow/error.hpp"
#include "vertexflow/kernels.hpp"

namespace vertexflow::kernels {

namespace {

const KernelTable& table_for(Backend b) { return b == Backend::avx2 ? avx2::table : scalar::table; }

std::atomic<const KernelTable*> g_table{nullptr};
std::atomic<Backend> g_backend{Backend::scalar};
std::atomic<int> g_threads{1};

const KernelTable& active() {
    const KernelTable* t = g_table.load(std::memory_order_acquire);
    if (t) return *t;
    const Backend b = detect_backend();
    g_backend.store(b, std::memory_order_relaxed);
    g_table.store(&table_for(b), std::memory_order_release);
    return table_for(b);
}

constexpr std::size_t kParallelRowThreshold = 20000;

}  // namespace

bool cpu_supports_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend detect_backend() { return avx2::compiled() && cpu_supports_avx2() ? Backend::avx2 : Backend::scalar; }

Backend active_backend() {
    active();
    return g_backend.load(std::memory_order_relaxed);
}

void set_backend(Backend b) {
    if (b == Backend::avx2 && !(avx2::compiled() && cpu_supports_avx2()))
        throw Error("AVX2 kernels are not available on this build or CPU");
    g_backend.store(b, std::memory_order_relaxed);
    g_table.store(&table_for(b), std::memory_order_release);
}

std::string_view backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

Backend parse_backend(std::string_view name) {
    if (name == "scalar") return Backend::scalar;
    if (name == "avx2") return Backend::avx2;
    if (name == "auto") return detect_backend();
    throw InvalidConfig(fmt::format("unknown kernel backend '{}'", name));
}

void set_threads(int n) { g_threads.store(std::max(1, n), std::memory_order_relaxed); }
int threads() { return g_threads.load(std::memory_order_relaxed); }

double dot(std::span<const double> x, std::span<const double> y) { return active().dot(x.data(), y.data(), x.size()); }

double norm2(std::span<const double> x) { return std::sqrt(active().dot(x.data(), x.data(), x.size())); }

void axpy(double a, std::span<const double> x, std::span<double> y) { active().axpy(a, x.data(), y.data(), x.size()); }

void scale(double a, std::span<double> x) { active().scale(a, x.data(), x.size()); }

void spmv(const CsrView& a, std::span<const double> x, std::span<double> y) {
    const auto& t = active();
    const int nt = threads();
    if (nt <= 1 || a.rows < kParallelRowThreshold) {
        t.spmv_rows(a, x.data(), y.data(), 0, a.rows);
        return;
    }
    // Rows are independent, so the split does not change any result bit.
    std::vector<std::jthread> workers;
    const std::size_t chunk = (a.rows + nt - 1) / nt;
    for (int w = 0; w < nt; ++w) {
        const std::size_t b = w * chunk, e = std::min(a.rows, b + chunk);
        if (b >= e) break;
        workers.emplace_back([&, b, e] { t.spmv_rows(a, x.data(), y.data(), b, e); });
    }
}

}  // namespace vertexflow::kernels
