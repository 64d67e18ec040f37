#ifndef FSI_MESH_HPP
#define FSI_MESH_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

#include "fsi/core.hpp"

namespace fsi {

enum class Region : std::uint8_t { fluid = 0, solid = 1 };

enum class BMark : std::uint8_t {
    none = 0,
    outer_wall,
    inlet,
    outlet,
    pillar,
    interface_edge,
};

struct GeometrySpec {
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    std::vector<Circle> holes;        // excluded from the domain (pillars, cylinder)
    std::optional<Circle> particle;   // meshed on both sides, solid-tagged inside
    double h = 0.1;

    void validate() const; // throws InfeasibleGeometry
};

struct QualityReport {
    double min_radius_ratio = 1.0; // 2*inradius/circumradius, min over triangles
    double min_angle = 0.0;        // radians
    int worst_element = -1;
};

/// Interface-fitted 6-node triangulation. Vertices come first in `nodes`,
/// edge midpoints after. Immutable in normal use: mesh operations return
/// fresh values.
class Mesh {
public:
    struct Tri {
        std::array<int, 3> v;   // CCW vertices
        std::array<int, 3> mid; // mid[k] = midpoint node of edge (v[k], v[k+1 mod 3])
    };
    struct Edge {
        int a = -1, b = -1;     // vertex ids, a < b
        int mid = -1;           // midpoint node id
        int t0 = -1, t1 = -1;   // adjacent triangles, t1 = -1 on the boundary
    };

    std::vector<Vec2> nodes;
    int n_vertices = 0;
    std::vector<Tri> tris;
    std::vector<Region> region;      // per triangle
    std::vector<Edge> edges;
    std::vector<BMark> edge_marker;  // per edge
    std::map<int, Circle> curved_edges; // edge id -> circle it conforms to

    int n_tris() const { return static_cast<int>(tris.size()); }
    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int n_edges() const { return static_cast<int>(edges.size()); }

    double signed_area(int t) const; // straight-vertex geometry
    double diameter() const;
    bool has_solid() const;

    // Region integrals with curved-edge (isoparametric) geometry.
    double region_area(Region r) const;
    Vec2 region_centroid(Region r) const;
    double solid_second_moment(Vec2 center) const; // integral of |x-center|^2 over solid

    // Builds edges, midpoint nodes, and the point-location grid. Must be
    // called after changing connectivity; node-only moves need refresh_grid().
    void finalize_connectivity();
    void refresh_grid();

    // Barycentric coordinates from straight-vertex geometry. Throws
    // PointOutsideDomain.
    std::pair<int, std::array<double, 3>> locate(Vec2 p, double tol_rel = 1e-10) const;

    std::vector<int> boundary_edges() const;
    std::vector<int> interface_edge_ids() const;

    void validate() const; // checks the structural invariants, throws on failure

private:
    // point-location acceleration grid
    struct Grid {
        double x0 = 0, y0 = 0, dx = 1, dy = 1;
        int nx = 0, ny = 0;
        std::vector<std::vector<int>> cells;
    };
    Grid grid_;
    friend class MeshBuilder;
};

QualityReport quality(const Mesh& mesh);

Mesh generate_mesh(const GeometrySpec& spec);

/// Radially projects the midpoints of edges owned by each circle onto it.
Mesh snap_curved_midpoints(const Mesh& mesh, const std::vector<Circle>& circles);
void snap_curved_midpoints_inplace(Mesh& mesh);

std::pair<int, std::array<double, 3>> locate_point(const Mesh& mesh, Vec2 p);

Mesh read_msh(std::istream& in);
Mesh read_msh_file(const std::string& path);
void write_msh(const Mesh& mesh, std::ostream& out);
void write_msh_file(const Mesh& mesh, const std::string& path);

// Delaunay triangulation of a point set (indices into pts, CCW triangles).
std::vector<std::array<int, 3>> delaunay_triangulate(const std::vector<Vec2>& pts);

} // namespace fsi

#endif
