#ifndef FSI_ALE_HPP
#define FSI_ALE_HPP

#include <array>
#include <optional>
#include <vector>

#include "fsi/mesh.hpp"
#include "fsi/system.hpp"

namespace fsi {

using Mat2 = std::array<std::array<double, 2>, 2>;
using Mat3 = std::array<std::array<double, 3>, 3>;

Mat2 rotation_matrix(double theta);
Mat3 rotation_matrix(const std::array<double, 3>& theta);

struct RigidMotionIncrement {
    Vec2 U{0, 0};
    double omega = 0.0;
    double scale = 0.0; // alpha * dtau
    Vec2 xc{0, 0};
};

Vec2 rigid_map(Vec2 y, const RigidMotionIncrement& inc);

/// Componentwise discrete-harmonic P1 extension of the rigid displacement:
/// prescribed on all solid vertices, zero on outer/pillar boundaries,
/// harmonic on fluid vertices. Returns one displacement per vertex.
std::vector<Vec2> harmonic_extension(const Mesh& mesh,
                                     const std::vector<Vec2>& solid_displacement_by_vertex);

struct MeshMotion {
    Mesh reference;                 // start-of-step configuration
    Mesh moved;                     // reference + displacement, midpoints re-snapped
    std::vector<Vec2> displacement; // per vertex
    Vec2 xc_moved{0, 0};
};

/// The mesh update operator: applies the rigid increment to the solid, extends
/// it harmonically, snaps the particle interface to the displaced circle, and
/// verifies element validity and particle clearance.
MeshMotion mesh_update(const Mesh& reference, Vec2 U, double omega, Vec2 xc, double alpha,
                       double dtau);

/// Nodal mesh velocity (2 per node) between two same-connectivity meshes.
std::vector<double> mesh_velocity(const Mesh& moved, const Mesh& reference, double dtau);

struct RemeshResult {
    Mesh mesh;
    CoupledState state;
    bool remeshed = false;
};

/// Regenerates the mesh at the current particle position when quality drops
/// below the threshold, interpolating velocity, pressure, and multiplier.
RemeshResult maybe_remesh(const Mesh& mesh, const CoupledState& state,
                          const GeometrySpec& geometry, double threshold);

} // namespace fsi

#endif
