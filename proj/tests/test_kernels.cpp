#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "vertexflow/error.hpp"
#include "vertexflow/kernels.hpp"
#include "vertexflow/sparse.hpp"

namespace vf = vertexflow;
namespace kn = vertexflow::kernels;

namespace {

bool avx2_available() { return kn::avx2::compiled() && kn::cpu_supports_avx2(); }

vf::CsrMatrix random_csr(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> len(0, 23);
    std::uniform_int_distribution<std::size_t> col(0, n - 1);
    vf::TripletBuilder b(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        const int k = len(rng);
        for (int i = 0; i < k; ++i) b.add(r, col(rng), u(rng));
    }
    return b.finalize();
}

// Restores the default backend and thread count after each test.
class Kernels : public ::testing::Test {
protected:
    void TearDown() override {
        kn::set_backend(kn::detect_backend());
        kn::set_threads(1);
    }
};

}  // namespace

TEST_F(Kernels, BackendNames) {
    EXPECT_EQ(kn::parse_backend("scalar"), kn::Backend::scalar);
    EXPECT_EQ(kn::parse_backend("avx2"), kn::Backend::avx2);
    EXPECT_EQ(kn::backend_name(kn::Backend::scalar), "scalar");
    EXPECT_THROW(kn::parse_backend("sse9"), vf::Error);
    kn::set_backend(kn::Backend::scalar);
    EXPECT_EQ(kn::active_backend(), kn::Backend::scalar);
    if (!avx2_available()) EXPECT_THROW(kn::set_backend(kn::Backend::avx2), vf::Error);
}

TEST_F(Kernels, Avx2MatchesScalarReference) {
    if (!avx2_available()) GTEST_SKIP() << "AVX2 not available on this machine";
    const auto& s = kn::scalar::table;
    const auto& v = kn::avx2::table;
    std::mt19937_64 rng(42);
    for (std::size_t n = 0; n <= 67; ++n) {
        const auto x = vftest::uniform_vector(n, -1.0, 1.0, rng);
        const auto y = vftest::uniform_vector(n, -1.0, 1.0, rng);
        double bound = 0.0;
        for (std::size_t i = 0; i < n; ++i) bound += std::abs(x[i] * y[i]);
        EXPECT_NEAR(v.dot(x.data(), y.data(), n), s.dot(x.data(), y.data(), n), 4e-16 * (n + 1) * bound) << n;

        auto ys = y, yv = y;
        s.axpy(0.7, x.data(), ys.data(), n);
        v.axpy(0.7, x.data(), yv.data(), n);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(yv[i], ys[i], 4e-16 * (std::abs(0.7 * x[i]) + std::abs(y[i])));

        auto xs = x, xv = x;
        s.scale(-1.3, xs.data(), n);
        v.scale(-1.3, xv.data(), n);
        EXPECT_EQ(xs, xv);
    }
    for (std::size_t n : {1u, 5u, 64u, 1001u}) {
        const auto a = random_csr(n, rng);
        const auto x = vftest::uniform_vector(n, -1.0, 1.0, rng);
        std::vector<double> ys(n), yv(n);
        s.spmv_rows(a.view(), x.data(), ys.data(), 0, n);
        v.spmv_rows(a.view(), x.data(), yv.data(), 0, n);
        for (std::size_t r = 0; r < n; ++r) {
            double bound = 0.0;
            const auto cols = a.row_cols(r);
            const auto vals = a.row_vals(r);
            for (std::size_t k = 0; k < cols.size(); ++k) bound += std::abs(vals[k] * x[cols[k]]);
            EXPECT_NEAR(yv[r], ys[r], 4e-16 * (cols.size() + 1) * bound);
        }
    }
}

TEST_F(Kernels, ThreadCountDoesNotChangeResults) {
    std::mt19937_64 rng(3);
    const std::size_t n = 20000;
    const auto a = random_csr(n, rng);
    const auto x = vftest::uniform_vector(n, -1.0, 1.0, rng);
    for (auto backend : {kn::Backend::scalar, kn::Backend::avx2}) {
        if (backend == kn::Backend::avx2 && !avx2_available()) continue;
        kn::set_backend(backend);
        kn::set_threads(1);
        std::vector<double> ref(n);
        kn::spmv(a.view(), x, ref);
        const double dref = kn::dot(x, ref);
        for (int t : {2, 3, 8}) {
            kn::set_threads(t);
            std::vector<double> y(n);
            kn::spmv(a.view(), x, y);
            EXPECT_EQ(y, ref) << "threads " << t;
            EXPECT_EQ(kn::dot(x, y), dref) << "threads " << t;
        }
    }
}

TEST_F(Kernels, DispatchedHelpers) {
    const std::vector<double> x{3.0, 4.0};
    EXPECT_DOUBLE_EQ(kn::norm2(x), 5.0);
    std::vector<double> y{1.0, 1.0};
    kn::axpy(2.0, x, y);
    EXPECT_EQ(y, (std::vector<double>{7.0, 9.0}));
    kn::scale(0.5, y);
    EXPECT_EQ(y, (std::vector<double>{3.5, 4.5}));
}
