#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vertexflow/assembly.hpp"
#include "vertexflow/driver.hpp"
#include "vertexflow/problem.hpp"
#include "vertexflow/solver.hpp"

namespace vertexflow {

struct MeshSpec {
    enum class Kind { structured, file };
    Kind kind = Kind::structured;
    std::vector<int> cells;
    std::vector<double> lengths;
    std::string file;
};

struct ModelSpec {
    enum class Kind { brooks_corey, quadratic };
    Kind kind = Kind::brooks_corey;
    double theta = 0.0;
    double entry_pressure = 0.0;
    double threshold = 0.05;
    double s_rw = 0.0;
    double s_ro = 0.0;
};

struct PermSpec {
    enum class Kind { constant, block, raster };
    Kind kind = Kind::constant;
    double k = 0.0;
    /// Inclusion box and its permeability (block kind).
    Point lo{0, 0, 0};
    Point hi{0, 0, 0};
    double k_inclusion = 0.0;
    /// Raster file and the box it spans; an empty box means the mesh bounding box.
    std::string raster;
    std::optional<std::array<Point, 2>> raster_box;
};

struct ProbeSpec {
    Point from{0, 0, 0};
    Point to{0, 0, 0};
    int samples = 101;
};

struct OutputSpec {
    std::string directory = "output";
    /// VTK snapshot every this many steps; 0 disables snapshots.
    int vtk_stride = 0;
    std::vector<int> mass_balance_steps;
    std::optional<ProbeSpec> probe;
};

struct CaseConfig {
    std::string name;
    int dim = 2;
    MeshSpec mesh;
    ModelSpec model;
    FluidPair fluids;
    double porosity = 0.0;
    PermSpec perm;
    double s0 = 0.0;
    double p0 = 0.0;
    double s_in = 1.0;
    std::vector<WellBox> wells;
    TimeConfig time;
    PicardConfig picard;
    SolverConfig solver;
    OutputSpec output;
    /// Directory relative paths in the file are resolved against.
    std::string base_dir;
};

/// Parse and validate; throws InvalidConfig listing every problem found, each
/// prefixed with origin:line.
CaseConfig parse_config(const std::string& text, const std::string& origin = "<config>");
CaseConfig load_config(const std::string& path);

/// Canonical text form; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const CaseConfig& config);

/// Resolve a path from the config against its base directory.
std::string resolve_path(const CaseConfig& config, const std::string& path);

std::unique_ptr<ConstitutiveModel> make_model(const ModelSpec& spec);

/// Mesh, permeability field, wells and initial state of a configured case.
FlowProblem build_problem(const CaseConfig& config);

}  // namespace vertexflow
