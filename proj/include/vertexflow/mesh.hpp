#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace vertexflow {

using Point = std::array<double, 3>;  // unused trailing components are zero

/// Conforming simplicial mesh (triangles in 2D, tetrahedra in 3D).
///
/// Immutable after construction. Besides the raw connectivity it carries the
/// node patches (elements touching a node), the node neighbor sets and the
/// boundary node set, all of which the vertex scheme reads repeatedly.
class Mesh {
public:
    Mesh(int dim, std::vector<Point> vertices, std::vector<std::array<int, 4>> elements);

    int dim() const { return dim_; }
    int nodes_per_element() const { return dim_ + 1; }
    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_elements() const { return elements_.size(); }

    const Point& vertex(std::size_t i) const { return vertices_[i]; }
    const std::vector<Point>& vertices() const { return vertices_; }

    /// Vertex indices of element e; only the first dim()+1 entries are valid.
    std::span<const int> element(std::size_t e) const {
        return {elements_[e].data(), static_cast<std::size_t>(dim_ + 1)};
    }
    double element_volume(std::size_t e) const { return volumes_[e]; }
    std::span<const double> element_volumes() const { return volumes_; }

    std::span<const int> node_patch(std::size_t i) const;
    std::span<const int> neighbors(std::size_t i) const;
    const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }
    bool is_boundary_node(std::size_t i) const { return on_boundary_[i] != 0; }

    /// Boundary faces as (d)-tuples of vertex indices; trailing entry unused in 2D.
    const std::vector<std::array<int, 3>>& boundary_faces() const { return boundary_faces_; }

    double total_volume() const;
    Point element_centroid(std::size_t e) const;
    std::array<Point, 2> bounding_box() const;

    /// Largest element diameter.
    double max_diameter() const;

    /// Coordinates of the vertices of element e.
    std::vector<Point> element_coords(std::size_t e) const;

private:
    int dim_;
    std::vector<Point> vertices_;
    std::vector<std::array<int, 4>> elements_;
    std::vector<double> volumes_;
    std::vector<int> patch_offsets_, patch_elements_;
    std::vector<int> neighbor_offsets_, neighbor_nodes_;
    std::vector<int> boundary_nodes_;
    std::vector<char> on_boundary_;
    std::vector<std::array<int, 3>> boundary_faces_;
};

/// Signed measure of a simplex given by dim+1 points (positive for the
/// counterclockwise / right-handed orientation).
double signed_simplex_volume(int dim, std::span<const Point> coords);

/// Structured mesh of the box [0, lengths[0]] x ... split into right
/// triangles (2D, two per cell) or Kuhn tetrahedra (3D, six per cell).
/// `cells` and `lengths` must both have 2 or 3 entries.
Mesh build_structured(std::span<const int> cells, std::span<const double> lengths);

/// Gradients of the dim+1 barycentric basis functions of a simplex.
/// Throws SingularElement for a degenerate element.
std::vector<Point> p1_gradients(int dim, std::span<const Point> coords);

/// Nodal values f(x_i) for every vertex.
std::vector<double> interpolate_nodal(const std::function<double(const Point&)>& f, const Mesh& mesh);

/// ASCII mesh format: "dim M numElements", M coordinate lines, then element
/// lines of dim+1 zero-based vertex indices.
Mesh read_mesh_ascii(const std::string& path);
void write_mesh_ascii(const Mesh& mesh, const std::string& path);

/// Barycentric coordinates of x in element e (may be negative outside).
std::array<double, 4> barycentric(const Mesh& mesh, std::size_t e, const Point& x);

/// Index of an element containing x (tolerance relative to element size),
/// or -1 when none does.
long locate_point(const Mesh& mesh, const Point& x);

}  // namespace vertexflow
