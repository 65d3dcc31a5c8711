#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "support.hpp"
#include "vertexflow/error.hpp"
#include "vertexflow/mesh.hpp"

namespace vf = vertexflow;

namespace {

vf::Mesh structured(std::vector<int> cells, std::vector<double> lengths) { return vf::build_structured(cells, lengths); }

void expect_mesh_invariants(const vf::Mesh& mesh, double measure) {
    const std::size_t M = mesh.num_vertices();
    std::vector<int> seen(M, 0);
    double total = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        EXPECT_GT(mesh.element_volume(e), 0.0);
        total += mesh.element_volume(e);
        for (int v : mesh.element(e)) {
            ASSERT_GE(v, 0);
            ASSERT_LT(static_cast<std::size_t>(v), M);
            seen[v] = 1;
        }
    }
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    EXPECT_NEAR(total, measure, 1e-12 * measure);
    for (std::size_t i = 0; i < M; ++i) {
        const auto ni = mesh.neighbors(i);
        EXPECT_EQ(std::count(ni.begin(), ni.end(), static_cast<int>(i)), 0);
        for (int j : ni) {
            const auto nj = mesh.neighbors(j);
            EXPECT_EQ(std::count(nj.begin(), nj.end(), static_cast<int>(i)), 1);
        }
    }
    double patches = 0.0;
    for (std::size_t i = 0; i < M; ++i)
        for (int e : mesh.node_patch(i)) patches += mesh.element_volume(e);
    EXPECT_NEAR(patches, (mesh.dim() + 1) * total, 1e-12 * patches);
}

}  // namespace

TEST(Mesh, SingleCellUnitSquare) {
    const auto mesh = structured({1, 1}, {1.0, 1.0});
    EXPECT_EQ(mesh.num_vertices(), 4u);
    EXPECT_EQ(mesh.num_elements(), 2u);
    EXPECT_NEAR(mesh.total_volume(), 1.0, 1e-15);
}

TEST(Mesh, QuarterFiveSpotCounts) {
    const auto mesh = structured({40, 40}, {100.0, 100.0});
    EXPECT_EQ(mesh.num_vertices(), 1681u);
    EXPECT_EQ(mesh.num_elements(), 3200u);
}

TEST(Mesh, CoarsestConvergenceLevel) { EXPECT_EQ(structured({4, 4}, {1.0, 1.0}).num_vertices(), 25u); }

TEST(Mesh, StructuredElementCounts) {
    EXPECT_EQ(structured({3, 5}, {1.0, 2.0}).num_elements(), 2u * 3 * 5);
    const auto m3 = structured({2, 3, 4}, {1.0, 1.0, 1.0});
    EXPECT_EQ(m3.num_elements(), 6u * 2 * 3 * 4);
    EXPECT_EQ(m3.num_vertices(), 3u * 4 * 5);
}

TEST(Mesh, InvariantsStructured) {
    expect_mesh_invariants(structured({7, 3}, {2.0, 0.5}), 1.0);
    expect_mesh_invariants(structured({3, 2, 4}, {1.0, 2.0, 3.0}), 6.0);
}

TEST(Mesh, InvariantsJittered) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        expect_mesh_invariants(vftest::jittered_mesh({5, 4}, {1.0, 1.0}, 0.2, rng), 1.0);
        expect_mesh_invariants(vftest::jittered_mesh({2, 3, 2}, {1.0, 1.0, 1.0}, 0.15, rng), 1.0);
    }
}

TEST(Mesh, BoundaryNodes) {
    const auto mesh = structured({6, 4}, {3.0, 2.0});
    EXPECT_EQ(mesh.boundary_nodes().size(), 2u * (6 + 4));
    for (int i : mesh.boundary_nodes()) {
        const auto& x = mesh.vertex(i);
        const bool on = x[0] == 0.0 || x[1] == 0.0 || std::abs(x[0] - 3.0) < 1e-12 || std::abs(x[1] - 2.0) < 1e-12;
        EXPECT_TRUE(on);
    }
    const auto m3 = structured({2, 2, 2}, {1.0, 1.0, 1.0});
    EXPECT_EQ(m3.boundary_nodes().size(), 27u - 1u);
}

TEST(Mesh, InvalidStructuredInput) {
    EXPECT_THROW(structured({0, 3}, {1.0, 1.0}), vf::InvalidConfig);
    EXPECT_THROW(structured({2, 3}, {1.0, -1.0}), vf::InvalidConfig);
    EXPECT_THROW(structured({2}, {1.0}), vf::InvalidConfig);
}

TEST(Mesh, GradientsOfUnitRightTriangle) {
    const std::vector<vf::Point> xs{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    const auto g = vf::p1_gradients(2, xs);
    EXPECT_DOUBLE_EQ(g[0][0], -1.0);
    EXPECT_DOUBLE_EQ(g[0][1], -1.0);
    EXPECT_DOUBLE_EQ(g[1][0], 1.0);
    EXPECT_DOUBLE_EQ(g[1][1], 0.0);
    EXPECT_DOUBLE_EQ(g[2][0], 0.0);
    EXPECT_DOUBLE_EQ(g[2][1], 1.0);
}

TEST(Mesh, GradientsPartitionOfUnity) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int dim : {2, 3})
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<vf::Point> xs(dim + 1, vf::Point{0, 0, 0});
            for (auto& x : xs)
                for (int d = 0; d < dim; ++d) x[d] = u(rng);
            if (std::abs(vf::signed_simplex_volume(dim, xs)) < 1e-3) continue;
            const auto g = vf::p1_gradients(dim, xs);
            double scale = 0.0;
            for (const auto& gi : g) scale = std::max({scale, std::abs(gi[0]), std::abs(gi[1]), std::abs(gi[2])});
            for (int d = 0; d < 3; ++d) {
                double s = 0.0;
                for (const auto& gi : g) s += gi[d];
                EXPECT_NEAR(s, 0.0, 1e-14 * scale);
            }
        }
}

TEST(Mesh, GradientsMatchReferenceAndScale) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int dim : {2, 3}) {
        std::vector<vf::Point> xs(dim + 1, vf::Point{0, 0, 0});
        do {
            for (auto& x : xs)
                for (int d = 0; d < dim; ++d) x[d] = u(rng);
        } while (std::abs(vf::signed_simplex_volume(dim, xs)) < 1e-2);
        const auto g = vf::p1_gradients(dim, xs);
        const auto ref = vftest::reference_gradients(dim, xs);
        for (int a = 0; a <= dim; ++a)
            for (int d = 0; d < dim; ++d) EXPECT_NEAR(g[a][d], ref[a](d), 1e-12 * (1 + std::abs(ref[a](d))));
        const double h = 0.01;
        auto ys = xs;
        for (auto& y : ys)
            for (int d = 0; d < dim; ++d) y[d] *= h;
        const auto gh = vf::p1_gradients(dim, ys);
        for (int a = 0; a <= dim; ++a)
            for (int d = 0; d < dim; ++d) EXPECT_NEAR(gh[a][d], g[a][d] / h, 1e-9 * std::abs(g[a][d] / h) + 1e-9);
    }
}

TEST(Mesh, DegenerateElementRejected) {
    const std::vector<vf::Point> xs{{0, 0, 0}, {1, 1, 0}, {2, 2, 0}};
    EXPECT_THROW(vf::p1_gradients(2, xs), vf::SingularElement);
}

TEST(Mesh, InterpolateNodal) {
    const auto mesh = structured({4, 4}, {1.0, 1.0});
    for (double v : vf::interpolate_nodal([](const vf::Point&) { return 2.5; }, mesh)) EXPECT_EQ(v, 2.5);
    const auto xs = vf::interpolate_nodal([](const vf::Point& x) { return x[0]; }, mesh);
    for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_EQ(xs[i], mesh.vertex(i)[0]);
    const auto s0 = vf::interpolate_nodal(
        [](const vf::Point& x) { return 0.4 + 0.4 * x[0] * x[1] + 0.2 * std::cos(x[0]); }, mesh);
    for (std::size_t i = 0; i < s0.size(); ++i) {
        const auto& x = mesh.vertex(i);
        EXPECT_DOUBLE_EQ(s0[i], 0.4 + 0.4 * x[0] * x[1] + 0.2 * std::cos(x[0]));
    }
}

TEST(Mesh, AsciiRoundTrip) {
    std::mt19937_64 rng(5);
    const auto mesh = vftest::jittered_mesh({3, 3}, {1.0, 2.0}, 0.2, rng);
    const auto path = (std::filesystem::temp_directory_path() / "vertexflow_mesh_roundtrip.txt").string();
    vf::write_mesh_ascii(mesh, path);
    const auto back = vf::read_mesh_ascii(path);
    ASSERT_EQ(back.num_vertices(), mesh.num_vertices());
    ASSERT_EQ(back.num_elements(), mesh.num_elements());
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
        for (int d = 0; d < 2; ++d) EXPECT_EQ(back.vertex(i)[d], mesh.vertex(i)[d]);
    for (std::size_t e = 0; e < mesh.num_elements(); ++e)
        for (int a = 0; a < 3; ++a) EXPECT_EQ(back.element(e)[a], mesh.element(e)[a]);
    std::filesystem::remove(path);
}

TEST(Mesh, LocatePointAndBarycentric) {
    const auto mesh = structured({5, 5}, {1.0, 1.0});
    const vf::Point x{0.33, 0.71, 0.0};
    const long e = vf::locate_point(mesh, x);
    ASSERT_GE(e, 0);
    const auto b = vf::barycentric(mesh, e, x);
    double sum = 0.0;
    vf::Point back{0, 0, 0};
    for (int a = 0; a < 3; ++a) {
        EXPECT_GE(b[a], -1e-12);
        sum += b[a];
        for (int d = 0; d < 2; ++d) back[d] += b[a] * mesh.vertex(mesh.element(e)[a])[d];
    }
    EXPECT_NEAR(sum, 1.0, 1e-14);
    EXPECT_NEAR(back[0], x[0], 1e-14);
    EXPECT_NEAR(back[1], x[1], 1e-14);
    EXPECT_EQ(vf::locate_point(mesh, {1.5, 0.5, 0.0}), -1);
}
