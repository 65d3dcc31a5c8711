#include "vertexflow/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "vertexflow/error.hpp"

namespace vertexflow {

PermRaster parse_raster(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header)) throw InvalidConfig(fmt::format("{}: empty raster file", origin));
    std::istringstream hs(header);
    std::vector<long> dims;
    long v = 0;
    while (hs >> v) dims.push_back(v);
    if (!hs.eof() || dims.size() < 2 || dims.size() > 3)
        throw InvalidConfig(fmt::format("{}:1: raster header must be 'nx ny [nz]'", origin));
    PermRaster r;
    r.dim = static_cast<int>(dims.size());
    std::size_t count = 1;
    for (std::size_t d = 0; d < dims.size(); ++d) {
        if (dims[d] < 1 || dims[d] > (1L << 24))
            throw InvalidConfig(fmt::format("{}:1: raster dimension {} is out of range", origin, dims[d]));
        r.dims[d] = static_cast<int>(dims[d]);
        count *= static_cast<std::size_t>(dims[d]);
    }
    r.values.reserve(count);
    std::string tok;
    while (in >> tok) {
        char* end = nullptr;
        const double k = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0' || !std::isfinite(k))
            throw InvalidConfig(fmt::format("{}: value #{} '{}' is not a number", origin, r.values.size() + 1, tok));
        if (!(k > 0.0))
            throw InvalidConfig(fmt::format("{}: value #{} must be positive, got {}", origin, r.values.size() + 1, k));
        r.values.push_back(k);
    }
    if (r.values.size() != count)
        throw InvalidConfig(fmt::format("{}: header announces {} values, found {}", origin, count, r.values.size()));
    for (int d = 0; d < 3; ++d) r.hi[d] = d < r.dim ? 1.0 : 0.0;
    return r;
}

PermRaster read_raster(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig(fmt::format("cannot open raster file '{}'", path));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_raster(ss.str(), path);
}

void write_raster(const PermRaster& r, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error(fmt::format("cannot write raster file '{}'", path));
    if (r.dim == 2)
        std::fprintf(f, "%d %d\n", r.dims[0], r.dims[1]);
    else
        std::fprintf(f, "%d %d %d\n", r.dims[0], r.dims[1], r.dims[2]);
    for (std::size_t i = 0; i < r.values.size(); ++i)
        std::fprintf(f, "%.17g%c", r.values[i], (i + 1) % static_cast<std::size_t>(r.dims[0]) == 0 ? '\n' : ' ');
    std::fclose(f);
}

PermRaster random_log_uniform_raster(std::array<int, 3> dims, int dim, double k_lo, double k_hi, std::uint64_t seed) {
    if (dim != 2 && dim != 3) throw InvalidConfig("raster dimension must be 2 or 3");
    if (!(k_lo > 0.0 && k_lo <= k_hi)) throw InvalidConfig("raster bounds need 0 < k_lo <= k_hi");
    PermRaster r;
    r.dim = dim;
    r.dims = dims;
    if (dim == 2) r.dims[2] = 1;
    std::size_t n = 1;
    for (int d = 0; d < 3; ++d) {
        if (r.dims[d] < 1) throw InvalidConfig("raster dimensions must be >= 1");
        n *= static_cast<std::size_t>(r.dims[d]);
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(std::log10(k_lo), std::log10(k_hi));
    r.values.resize(n);
    for (double& v : r.values) v = std::pow(10.0, u(rng));
    return r;
}

std::vector<double> raster_to_elements(const PermRaster& r, const Mesh& mesh) {
    if (r.dim != mesh.dim())
        throw InvalidConfig(fmt::format("raster is {}D but the mesh is {}D", r.dim, mesh.dim()));
    std::vector<double> k(mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const Point c = mesh.element_centroid(e);
        std::array<int, 3> idx{0, 0, 0};
        for (int d = 0; d < r.dim; ++d) {
            const double ext = r.hi[d] - r.lo[d];
            if (!(ext > 0.0)) throw InvalidConfig("raster box has non-positive extent");
            const double tol = 1e-12 * ext;
            if (c[d] < r.lo[d] - tol || c[d] > r.hi[d] + tol)
                throw InvalidConfig(fmt::format("element {} centroid lies outside the raster box", e));
            const int i = static_cast<int>(std::floor((c[d] - r.lo[d]) / ext * r.dims[d]));
            idx[d] = std::clamp(i, 0, r.dims[d] - 1);
        }
        k[e] = r.at(idx[0], idx[1], idx[2]);
    }
    return k;
}

namespace {

void check_name(const std::string& n) {
    if (n.empty() || n.find_first_of(" \t\n") != std::string::npos)
        throw Error(fmt::format("VTK field name '{}' must be a non-empty word", n));
}

void write_scalars(std::FILE* f, const NamedField& field, std::size_t expected) {
    check_name(field.name);
    if (field.values.size() != expected)
        throw Error(fmt::format("VTK field '{}' has {} values, expected {}", field.name, field.values.size(), expected));
    std::fprintf(f, "SCALARS %s double 1\nLOOKUP_TABLE default\n", field.name.c_str());
    for (double v : field.values) std::fprintf(f, "%.17g\n", v);
}

}  // namespace

void write_vtk(const Mesh& mesh, std::span<const NamedField> point_fields, std::span<const NamedField> cell_fields,
               const std::string& path, const std::string& title) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error(fmt::format("cannot write VTK file '{}'", path));
    const int nv = mesh.nodes_per_element();
    const std::size_t m = mesh.num_vertices(), ne = mesh.num_elements();
    std::fprintf(f, "# vtk DataFile Version 3.0\n%s\nASCII\nDATASET UNSTRUCTURED_GRID\n", title.c_str());
    std::fprintf(f, "POINTS %zu double\n", m);
    for (const auto& p : mesh.vertices()) std::fprintf(f, "%.17g %.17g %.17g\n", p[0], p[1], p[2]);
    std::fprintf(f, "CELLS %zu %zu\n", ne, ne * (nv + 1));
    for (std::size_t e = 0; e < ne; ++e) {
        std::fprintf(f, "%d", nv);
        for (int v : mesh.element(e)) std::fprintf(f, " %d", v);
        std::fprintf(f, "\n");
    }
    std::fprintf(f, "CELL_TYPES %zu\n", ne);
    const int type = mesh.dim() == 2 ? 5 : 10;
    for (std::size_t e = 0; e < ne; ++e) std::fprintf(f, "%d\n", type);
    try {
        if (!point_fields.empty()) {
            std::fprintf(f, "POINT_DATA %zu\n", m);
            for (const auto& fld : point_fields) write_scalars(f, fld, m);
        }
        if (!cell_fields.empty()) {
            std::fprintf(f, "CELL_DATA %zu\n", ne);
            for (const auto& fld : cell_fields) write_scalars(f, fld, ne);
        }
    } catch (...) {
        std::fclose(f);
        throw;
    }
    if (std::fclose(f) != 0) throw Error(fmt::format("error writing VTK file '{}'", path));
}

Mesh VtkData::mesh() const {
    return Mesh(dim, points, cells);
}

const std::vector<double>* VtkData::point_field(const std::string& name) const {
    for (const auto& [n, v] : point_fields)
        if (n == name) return &v;
    return nullptr;
}

VtkData read_vtk(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig(fmt::format("cannot open VTK file '{}'", path));
    std::string line;
    std::getline(in, line);
    if (line.rfind("# vtk DataFile", 0) != 0) throw InvalidConfig(fmt::format("'{}' is not a legacy VTK file", path));
    std::getline(in, line);  // title
    std::string tok;
    auto expect = [&](const std::string& want) {
        if (!(in >> tok) || tok != want)
            throw InvalidConfig(fmt::format("'{}': expected '{}', got '{}'", path, want, tok));
    };
    expect("ASCII");
    expect("DATASET");
    expect("UNSTRUCTURED_GRID");
    VtkData d;
    std::size_t npts = 0, ncells = 0, total = 0;
    expect("POINTS");
    in >> npts >> tok;
    d.points.resize(npts);
    for (auto& p : d.points) in >> p[0] >> p[1] >> p[2];
    expect("CELLS");
    in >> ncells >> total;
    d.cells.resize(ncells);
    int nv0 = -1;
    for (auto& c : d.cells) {
        int nv = 0;
        in >> nv;
        if (nv != 3 && nv != 4) throw InvalidConfig(fmt::format("'{}': only triangles and tetrahedra are supported", path));
        if (nv0 >= 0 && nv != nv0) throw InvalidConfig(fmt::format("'{}': mixed cell types", path));
        nv0 = nv;
        c = {0, 0, 0, 0};
        for (int a = 0; a < nv; ++a) in >> c[a];
    }
    d.dim = nv0 == 4 ? 3 : 2;
    expect("CELL_TYPES");
    std::size_t ntypes = 0;
    in >> ntypes;
    for (std::size_t i = 0; i < ntypes; ++i) in >> tok;
    if (!in) throw InvalidConfig(fmt::format("'{}': truncated geometry section", path));

    std::vector<std::pair<std::string, std::vector<double>>>* target = nullptr;
    std::size_t count = 0;
    while (in >> tok) {
        if (tok == "POINT_DATA" || tok == "CELL_DATA") {
            in >> count;
            target = tok == "POINT_DATA" ? &d.point_fields : &d.cell_fields;
        } else if (tok == "SCALARS") {
            if (!target) throw InvalidConfig(fmt::format("'{}': SCALARS outside a data section", path));
            std::string name, type;
            in >> name >> type;
            std::getline(in, line);  // optional component count
            expect("LOOKUP_TABLE");
            in >> tok;
            std::vector<double> vals(count);
            for (auto& v : vals) in >> v;
            if (!in) throw InvalidConfig(fmt::format("'{}': truncated field '{}'", path, name));
            target->emplace_back(name, std::move(vals));
        } else {
            throw InvalidConfig(fmt::format("'{}': unsupported section '{}'", path, tok));
        }
    }
    return d;
}

std::vector<ProbeSample> probe_line(const Mesh& mesh, std::span<const double> field, const Point& p0, const Point& p1,
                                    int samples) {
    if (field.size() != mesh.num_vertices()) throw InvalidConfig("probe field size does not match mesh");
    if (samples < 2) throw InvalidConfig("probe needs at least two samples");
    double len = 0.0;
    for (int d = 0; d < 3; ++d) len += (p1[d] - p0[d]) * (p1[d] - p0[d]);
    len = std::sqrt(len);
    std::vector<ProbeSample> out(samples);
    for (int k = 0; k < samples; ++k) {
        const double a = static_cast<double>(k) / (samples - 1);
        ProbeSample& s = out[k];
        for (int d = 0; d < 3; ++d) s.x[d] = p0[d] + a * (p1[d] - p0[d]);
        s.arc = a * len;
        const long e = locate_point(mesh, s.x);
        if (e < 0)
            throw InvalidConfig(fmt::format("probe point ({}, {}, {}) lies outside the mesh", s.x[0], s.x[1], s.x[2]));
        const auto lam = barycentric(mesh, static_cast<std::size_t>(e), s.x);
        const auto nodes = mesh.element(static_cast<std::size_t>(e));
        for (int v = 0; v < mesh.nodes_per_element(); ++v) s.value += lam[v] * field[nodes[v]];
    }
    return out;
}

CsvWriter::CsvWriter(const std::string& path, std::vector<std::string> header)
    : path_(path), columns_(header.size()) {
    file_ = std::fopen(path.c_str(), "w");
    if (!file_) throw Error(fmt::format("cannot write CSV file '{}'", path));
    for (std::size_t i = 0; i < header.size(); ++i) std::fprintf(file_, "%s%s", i ? "," : "", header[i].c_str());
    std::fprintf(file_, "\n");
}

CsvWriter::~CsvWriter() {
    if (file_) std::fclose(file_);
}

void CsvWriter::row(std::span<const double> values) {
    if (values.size() != columns_)
        throw Error(fmt::format("CSV row has {} values, header has {}", values.size(), columns_));
    for (std::size_t i = 0; i < values.size(); ++i) std::fprintf(file_, "%s%.17g", i ? "," : "", values[i]);
    std::fprintf(file_, "\n");
    std::fflush(file_);
}

}  // namespace vertexflow
