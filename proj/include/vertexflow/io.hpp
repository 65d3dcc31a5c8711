#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vertexflow/mesh.hpp"

namespace vertexflow {

/// Cell-wise permeability on a regular grid spanning the box [lo, hi].
/// Values are stored x-fastest.
struct PermRaster {
    std::array<int, 3> dims{1, 1, 1};
    int dim = 2;
    std::vector<double> values;
    Point lo{0, 0, 0};
    Point hi{1, 1, 1};

    double at(int i, int j, int k = 0) const { return values[(static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i]; }
};

/// Header "nx ny [nz]" on the first line, then the values.
PermRaster read_raster(const std::string& path);
PermRaster parse_raster(const std::string& text, const std::string& origin = "<raster>");
void write_raster(const PermRaster& raster, const std::string& path);

/// Synthetic field with log10(K) uniform on [log10(k_lo), log10(k_hi)],
/// reproducible from the seed.
PermRaster random_log_uniform_raster(std::array<int, 3> dims, int dim, double k_lo, double k_hi, std::uint64_t seed);

/// K_E = value of the raster cell containing the element centroid.
std::vector<double> raster_to_elements(const PermRaster& raster, const Mesh& mesh);

struct NamedField {
    std::string name;
    std::span<const double> values;
};

/// Legacy ASCII VTK unstructured grid with point and cell scalars.
void write_vtk(const Mesh& mesh, std::span<const NamedField> point_fields, std::span<const NamedField> cell_fields,
               const std::string& path, const std::string& title = "vertexflow");

struct VtkData {
    int dim = 2;
    std::vector<Point> points;
    std::vector<std::array<int, 4>> cells;
    std::vector<std::pair<std::string, std::vector<double>>> point_fields;
    std::vector<std::pair<std::string, std::vector<double>>> cell_fields;

    Mesh mesh() const;
    const std::vector<double>* point_field(const std::string& name) const;
};

/// Reads files written by write_vtk (triangles or tetrahedra only).
VtkData read_vtk(const std::string& path);

struct ProbeSample {
    double arc = 0.0;
    Point x{0, 0, 0};
    double value = 0.0;
};

/// P1 interpolation at `samples` equally spaced points from p0 to p1.
/// Throws InvalidConfig when a sample point lies outside the mesh.
std::vector<ProbeSample> probe_line(const Mesh& mesh, std::span<const double> field, const Point& p0, const Point& p1,
                                    int samples);

/// Minimal CSV writer: header row plus numeric rows, 17 significant digits.
class CsvWriter {
public:
    CsvWriter(const std::string& path, std::vector<std::string> header);
    ~CsvWriter();
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void row(std::span<const double> values);
    void row(std::initializer_list<double> values) { row(std::span<const double>(values.begin(), values.size())); }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::size_t columns_;
    std::FILE* file_ = nullptr;
};

}  // namespace vertexflow
