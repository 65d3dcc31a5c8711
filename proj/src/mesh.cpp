#include "vertexflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "vertexflow/error.hpp"

namespace vertexflow {

namespace {

Point sub(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

double det3(const Point& a, const Point& b, const Point& c) {
    return a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
           a[2] * (b[0] * c[1] - b[1] * c[0]);
}

// CSR-style adjacency from a list of (key, value) pairs with unique values per key.
void build_csr(std::size_t n, std::vector<std::pair<int, int>>& pairs, std::vector<int>& offsets,
               std::vector<int>& values) {
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    offsets.assign(n + 1, 0);
    for (const auto& [k, v] : pairs) ++offsets[k + 1];
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    values.resize(pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) values[p] = pairs[p].second;
}

}  // namespace

double signed_simplex_volume(int dim, std::span<const Point> c) {
    if (dim == 2) {
        const Point a = sub(c[1], c[0]);
        const Point b = sub(c[2], c[0]);
        return 0.5 * (a[0] * b[1] - a[1] * b[0]);
    }
    return det3(sub(c[1], c[0]), sub(c[2], c[0]), sub(c[3], c[0])) / 6.0;
}

Mesh::Mesh(int dim, std::vector<Point> vertices, std::vector<std::array<int, 4>> elements)
    : dim_(dim), vertices_(std::move(vertices)), elements_(std::move(elements)) {
    if (dim_ != 2 && dim_ != 3) throw InvalidConfig(fmt::format("mesh dimension must be 2 or 3, got {}", dim_));
    if (vertices_.empty() || elements_.empty()) throw InvalidConfig("mesh has no vertices or no elements");

    const int nv = static_cast<int>(vertices_.size());
    const int npe = dim_ + 1;
    std::vector<char> used(vertices_.size(), 0);
    volumes_.resize(elements_.size());

    for (std::size_t e = 0; e < elements_.size(); ++e) {
        auto& el = elements_[e];
        for (int a = 0; a < npe; ++a) {
            if (el[a] < 0 || el[a] >= nv)
                throw InvalidConfig(fmt::format("element {} references vertex {} (mesh has {})", e, el[a], nv));
            used[el[a]] = 1;
        }
        if (dim_ == 2) el[3] = -1;
        std::array<Point, 4> c{};
        for (int a = 0; a < npe; ++a) c[a] = vertices_[el[a]];
        double vol = signed_simplex_volume(dim_, c);
        if (vol < 0.0) {
            std::swap(el[0], el[1]);
            vol = -vol;
        }
        if (!(vol > 0.0)) throw SingularElement(fmt::format("element {} has zero volume", e));
        volumes_[e] = vol;
    }
    for (int i = 0; i < nv; ++i)
        if (!used[i]) throw InvalidConfig(fmt::format("vertex {} belongs to no element", i));

    std::vector<std::pair<int, int>> patch, nbr;
    patch.reserve(elements_.size() * npe);
    nbr.reserve(elements_.size() * npe * dim_);
    for (std::size_t e = 0; e < elements_.size(); ++e) {
        const auto& el = elements_[e];
        for (int a = 0; a < npe; ++a) {
            patch.emplace_back(el[a], static_cast<int>(e));
            for (int b = 0; b < npe; ++b)
                if (a != b) nbr.emplace_back(el[a], el[b]);
        }
    }
    build_csr(vertices_.size(), patch, patch_offsets_, patch_elements_);
    build_csr(vertices_.size(), nbr, neighbor_offsets_, neighbor_nodes_);

    // Faces owned by exactly one element lie on the boundary.
    std::vector<std::array<int, 3>> faces;
    faces.reserve(elements_.size() * npe);
    for (const auto& el : elements_) {
        for (int skip = 0; skip < npe; ++skip) {
            std::array<int, 3> f{-1, -1, -1};
            int k = 0;
            for (int a = 0; a < npe; ++a)
                if (a != skip) f[k++] = el[a];
            std::sort(f.begin(), f.begin() + dim_);
            faces.push_back(f);
        }
    }
    std::sort(faces.begin(), faces.end());
    on_boundary_.assign(vertices_.size(), 0);
    for (std::size_t p = 0; p < faces.size();) {
        std::size_t q = p + 1;
        while (q < faces.size() && faces[q] == faces[p]) ++q;
        if (q - p == 1) {
            boundary_faces_.push_back(faces[p]);
            for (int a = 0; a < dim_; ++a) on_boundary_[faces[p][a]] = 1;
        }
        p = q;
    }
    for (int i = 0; i < nv; ++i)
        if (on_boundary_[i]) boundary_nodes_.push_back(i);
}

std::span<const int> Mesh::node_patch(std::size_t i) const {
    return {patch_elements_.data() + patch_offsets_[i],
            static_cast<std::size_t>(patch_offsets_[i + 1] - patch_offsets_[i])};
}

std::span<const int> Mesh::neighbors(std::size_t i) const {
    return {neighbor_nodes_.data() + neighbor_offsets_[i],
            static_cast<std::size_t>(neighbor_offsets_[i + 1] - neighbor_offsets_[i])};
}

double Mesh::total_volume() const {
    // Pairwise-stable enough for the sizes handled here; Kahan keeps the
    // 1e-12 relative check honest on fine meshes.
    double sum = 0.0, comp = 0.0;
    for (double v : volumes_) {
        const double y = v - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

Point Mesh::element_centroid(std::size_t e) const {
    Point c{0.0, 0.0, 0.0};
    const auto el = element(e);
    for (int v : el)
        for (int k = 0; k < 3; ++k) c[k] += vertices_[v][k];
    for (double& x : c) x /= static_cast<double>(el.size());
    return c;
}

std::array<Point, 2> Mesh::bounding_box() const {
    Point lo = vertices_.front(), hi = vertices_.front();
    for (const auto& v : vertices_)
        for (int k = 0; k < 3; ++k) {
            lo[k] = std::min(lo[k], v[k]);
            hi[k] = std::max(hi[k], v[k]);
        }
    return {lo, hi};
}

double Mesh::max_diameter() const {
    double h = 0.0;
    for (std::size_t e = 0; e < elements_.size(); ++e) {
        const auto el = element(e);
        for (std::size_t a = 0; a < el.size(); ++a)
            for (std::size_t b = a + 1; b < el.size(); ++b) {
                const Point d = sub(vertices_[el[a]], vertices_[el[b]]);
                h = std::max(h, std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]));
            }
    }
    return h;
}

std::vector<Point> Mesh::element_coords(std::size_t e) const {
    std::vector<Point> c;
    for (int v : element(e)) c.push_back(vertices_[v]);
    return c;
}

Mesh build_structured(std::span<const int> cells, std::span<const double> lengths) {
    if (cells.size() != lengths.size() || (cells.size() != 2 && cells.size() != 3))
        throw InvalidConfig("structured mesh needs 2 or 3 cell counts and matching lengths");
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (cells[k] < 1) throw InvalidConfig(fmt::format("cell count along axis {} must be >= 1", k));
        if (!(lengths[k] > 0.0)) throw InvalidConfig(fmt::format("domain length along axis {} must be > 0", k));
    }
    const int dim = static_cast<int>(cells.size());
    const int nx = cells[0], ny = cells[1], nz = dim == 3 ? cells[2] : 0;
    std::vector<Point> verts;
    std::vector<std::array<int, 4>> elems;

    if (dim == 2) {
        const auto id = [&](int i, int j) { return j * (nx + 1) + i; };
        verts.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i)
                verts.push_back({lengths[0] * i / nx, lengths[1] * j / ny, 0.0});
        elems.reserve(2 * static_cast<std::size_t>(nx) * ny);
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                // Right angle first, counterclockwise.
                elems.push_back({id(i, j), id(i + 1, j), id(i, j + 1), -1});
                elems.push_back({id(i + 1, j + 1), id(i, j + 1), id(i + 1, j), -1});
            }
        return Mesh(2, std::move(verts), std::move(elems));
    }

    const auto id = [&](int i, int j, int k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
    for (int k = 0; k <= nz; ++k)
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i)
                verts.push_back({lengths[0] * i / nx, lengths[1] * j / ny, lengths[2] * k / nz});
    // Kuhn subdivision: one tetrahedron per axis permutation, all sharing the
    // main diagonal of the cell, so neighbouring cells stay conforming.
    static constexpr std::array<std::array<int, 3>, 6> perms{{
        {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0},
    }};
    elems.reserve(6 * static_cast<std::size_t>(nx) * ny * nz);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                for (const auto& p : perms) {
                    std::array<int, 3> c{i, j, k};
                    std::array<int, 4> tet{};
                    tet[0] = id(c[0], c[1], c[2]);
                    for (int s = 0; s < 3; ++s) {
                        ++c[p[s]];
                        tet[s + 1] = id(c[0], c[1], c[2]);
                    }
                    elems.push_back(tet);
                }
    return Mesh(3, std::move(verts), std::move(elems));
}

std::vector<Point> p1_gradients(int dim, std::span<const Point> c) {
    std::vector<Point> g(dim + 1, Point{0.0, 0.0, 0.0});
    if (dim == 2) {
        const double det = (c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]);
        if (det == 0.0 || !std::isfinite(det)) throw SingularElement("degenerate triangle");
        for (int a = 0; a < 3; ++a) {
            const Point& p = c[(a + 1) % 3];
            const Point& q = c[(a + 2) % 3];
            // Gradient of the barycentric coordinate of vertex a: rotated opposite edge.
            g[a] = {(p[1] - q[1]) / det, (q[0] - p[0]) / det, 0.0};
        }
        return g;
    }
    const Point e1 = sub(c[1], c[0]), e2 = sub(c[2], c[0]), e3 = sub(c[3], c[0]);
    const double det = det3(e1, e2, e3);
    if (det == 0.0 || !std::isfinite(det)) throw SingularElement("degenerate tetrahedron");
    // Rows of the inverse Jacobian are the gradients of lambda_1..lambda_3.
    const auto cross = [](const Point& a, const Point& b) {
        return Point{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
    };
    const Point r1 = cross(e2, e3), r2 = cross(e3, e1), r3 = cross(e1, e2);
    for (int k = 0; k < 3; ++k) {
        g[1][k] = r1[k] / det;
        g[2][k] = r2[k] / det;
        g[3][k] = r3[k] / det;
        g[0][k] = -(g[1][k] + g[2][k] + g[3][k]);
    }
    return g;
}

std::vector<double> interpolate_nodal(const std::function<double(const Point&)>& f, const Mesh& mesh) {
    std::vector<double> out(mesh.num_vertices());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(mesh.vertex(i));
    return out;
}

Mesh read_mesh_ascii(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig(fmt::format("cannot open mesh file '{}'", path));
    int dim = 0;
    long nv = 0, ne = 0;
    if (!(in >> dim >> nv >> ne)) throw InvalidConfig(fmt::format("{}: bad header, expected 'dim M numElements'", path));
    if ((dim != 2 && dim != 3) || nv <= 0 || ne <= 0)
        throw InvalidConfig(fmt::format("{}: invalid header values {} {} {}", path, dim, nv, ne));
    std::vector<Point> verts(nv, Point{0, 0, 0});
    for (long i = 0; i < nv; ++i)
        for (int k = 0; k < dim; ++k)
            if (!(in >> verts[i][k])) throw InvalidConfig(fmt::format("{}: truncated coordinates at vertex {}", path, i));
    std::vector<std::array<int, 4>> elems(ne, {-1, -1, -1, -1});
    for (long e = 0; e < ne; ++e)
        for (int a = 0; a <= dim; ++a)
            if (!(in >> elems[e][a])) throw InvalidConfig(fmt::format("{}: truncated connectivity at element {}", path, e));
    return Mesh(dim, std::move(verts), std::move(elems));
}

void write_mesh_ascii(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(fmt::format("cannot write mesh file '{}'", path));
    out.precision(17);
    out << mesh.dim() << ' ' << mesh.num_vertices() << ' ' << mesh.num_elements() << '\n';
    for (const auto& v : mesh.vertices()) {
        for (int k = 0; k < mesh.dim(); ++k) out << (k ? " " : "") << v[k];
        out << '\n';
    }
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto el = mesh.element(e);
        for (std::size_t a = 0; a < el.size(); ++a) out << (a ? " " : "") << el[a];
        out << '\n';
    }
}

std::array<double, 4> barycentric(const Mesh& mesh, std::size_t e, const Point& x) {
    const auto el = mesh.element(e);
    const int npe = mesh.nodes_per_element();
    std::array<Point, 4> c{};
    for (int a = 0; a < npe; ++a) c[a] = mesh.vertex(el[a]);
    const auto g = p1_gradients(mesh.dim(), std::span<const Point>(c.data(), npe));
    std::array<double, 4> lam{0, 0, 0, 0};
    // lambda_a(x) = lambda_a(x_b) + g_a . (x - x_b) with b any other vertex.
    for (int a = 0; a < npe; ++a) {
        const int b = (a + 1) % npe;
        const Point d = sub(x, c[b]);
        lam[a] = g[a][0] * d[0] + g[a][1] * d[1] + g[a][2] * d[2];
    }
    return lam;
}

long locate_point(const Mesh& mesh, const Point& x) {
    constexpr double tol = 1e-10;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto lam = barycentric(mesh, e, x);
        bool inside = true;
        for (int a = 0; a < mesh.nodes_per_element(); ++a) inside = inside && lam[a] >= -tol;
        if (inside) return static_cast<long>(e);
    }
    return -1;
}

}  // namespace vertexflow
