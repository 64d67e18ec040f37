#include "doctest.h"

#include <cmath>

#include "fsi/ale.hpp"

using namespace fsi;

namespace {

constexpr double kPi = 3.14159265358979323846;

Mesh particle_mesh(Vec2 c = {0, 0}, double r = 0.9, double h = 0.35) {
    GeometrySpec g;
    g.x_min = -3; g.x_max = 3; g.y_min = -2; g.y_max = 2;
    g.particle = Circle{c, r};
    g.h = h;
    return generate_mesh(g);
}

} // namespace

TEST_CASE("rotation matrices are orthogonal with unit determinant") {
    CHECK(rotation_matrix(0.0)[0][0] == doctest::Approx(1.0));
    CHECK(rotation_matrix(0.0)[0][1] == doctest::Approx(0.0));

    Mat2 q = rotation_matrix(kPi / 2.0);
    CHECK(std::abs(q[0][0]) < 1e-15);
    CHECK(q[0][1] == doctest::Approx(-1.0));
    CHECK(q[1][0] == doctest::Approx(1.0));
    CHECK(std::abs(q[1][1]) < 1e-15);

    for (double th : {-2.0, -0.3, 0.1, 1.7, 3.9}) {
        Mat2 m = rotation_matrix(th);
        double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        CHECK(det == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(m[0][0] * m[0][1] + m[1][0] * m[1][1] == doctest::Approx(0.0).epsilon(1e-13));
    }
}

TEST_CASE("3D rotation about e3 embeds the 2D rotation; Q^T Q = I") {
    Mat3 q = rotation_matrix(std::array<double, 3>{0, 0, kPi / 2});
    Mat2 q2 = rotation_matrix(kPi / 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(q[i][j] == doctest::Approx(q2[i][j]).epsilon(1e-13));
    CHECK(q[2][2] == doctest::Approx(1.0));

    for (auto th : {std::array<double, 3>{0.3, -0.5, 0.7}, std::array<double, 3>{1e-9, 0, 1e-8}}) {
        Mat3 m = rotation_matrix(th);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double qtq = 0.0;
                for (int k = 0; k < 3; ++k) qtq += m[k][i] * m[k][j];
                CHECK(qtq == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-13));
            }
    }
}

TEST_CASE("rigid_map: translation, isometry, and composition") {
    RigidMotionIncrement trans{{2.0, -1.0}, 0.0, 0.5, {0, 0}};
    Vec2 y{1.0, 1.0};
    Vec2 z = rigid_map(y, trans);
    CHECK(z.x == doctest::Approx(2.0));
    CHECK(z.y == doctest::Approx(0.5));

    RigidMotionIncrement rot{{0, 0}, 0.7, 1.0, {0.5, 0.5}};
    for (double a = 0.0; a < 6.0; a += 0.7) {
        Vec2 p = Vec2{0.5, 0.5} + Vec2{2.0 * std::cos(a), 2.0 * std::sin(a)};
        Vec2 q = rigid_map(p, rot);
        CHECK((q - Vec2{0.5, 0.5}).norm() == doctest::Approx(2.0).epsilon(1e-12));
    }

    // Pure rotations about the same center compose by angle addition.
    RigidMotionIncrement r1{{0, 0}, 0.3, 1.0, {0, 0}};
    RigidMotionIncrement r2{{0, 0}, 0.5, 1.0, {0, 0}};
    RigidMotionIncrement r12{{0, 0}, 0.8, 1.0, {0, 0}};
    Vec2 p{1.3, -0.4};
    Vec2 a = rigid_map(rigid_map(p, r1), r2);
    Vec2 b = rigid_map(p, r12);
    CHECK((a - b).norm() < 1e-12);
}

TEST_CASE("harmonic extension: boundary data, interior residual, maximum bound") {
    Mesh m = particle_mesh();

    // Zero data -> zero extension.
    std::vector<Vec2> zero(m.n_vertices, Vec2{0, 0});
    auto x0 = harmonic_extension(m, zero);
    for (const Vec2& v : x0) CHECK(v.norm() == 0.0);

    // Pure translation of the solid: interface moves exactly, the interior
    // stays below the boundary magnitude (discrete maximum principle up to
    // roundoff), and the outer boundary is pinned.
    std::vector<Vec2> data(m.n_vertices, Vec2{0.01, 0.0});
    auto x = harmonic_extension(m, data);
    double dmax = 0.0;
    for (int t = 0; t < m.n_tris(); ++t)
        if (m.region[t] == Region::solid)
            for (int k = 0; k < 3; ++k)
                CHECK((x[m.tris[t].v[k]] - Vec2{0.01, 0.0}).norm() < 1e-12);
    for (const Vec2& v : x) dmax = std::max(dmax, v.norm());
    CHECK(dmax <= 0.01 + 1e-10);
    for (int e = 0; e < m.n_edges(); ++e) {
        if (m.edge_marker[e] == BMark::none || m.edge_marker[e] == BMark::interface_edge)
            continue;
        CHECK(x[m.edges[e].a].norm() == 0.0);
        CHECK(x[m.edges[e].b].norm() == 0.0);
    }

    // Galerkin residual of the interior rows vanishes.
    std::vector<std::uint8_t> fixed(m.n_vertices, 0);
    for (int t = 0; t < m.n_tris(); ++t)
        if (m.region[t] == Region::solid)
            for (int k = 0; k < 3; ++k) fixed[m.tris[t].v[k]] = 1;
    for (int e = 0; e < m.n_edges(); ++e)
        if (m.edge_marker[e] != BMark::none && m.edge_marker[e] != BMark::interface_edge) {
            fixed[m.edges[e].a] = 1;
            fixed[m.edges[e].b] = 1;
        }
    std::vector<Vec2> res(m.n_vertices, Vec2{0, 0});
    for (int t = 0; t < m.n_tris(); ++t) {
        if (m.region[t] != Region::fluid) continue;
        const auto& v = m.tris[t].v;
        Vec2 p0 = m.nodes[v[0]], p1 = m.nodes[v[1]], p2 = m.nodes[v[2]];
        double area2 = (p1 - p0).cross(p2 - p0);
        Vec2 g[3] = {Vec2{p1.y - p2.y, p2.x - p1.x} / area2,
                     Vec2{p2.y - p0.y, p0.x - p2.x} / area2,
                     Vec2{p0.y - p1.y, p1.x - p0.x} / area2};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                res[v[i]] += x[v[j]] * (0.5 * area2 * g[i].dot(g[j]));
    }
    for (int v = 0; v < m.n_vertices; ++v)
        if (!fixed[v]) CHECK(res[v].norm() < 1e-10);
}

TEST_CASE("mesh_update: identity, translation, rotation boundary conditions") {
    Mesh m = particle_mesh();

    MeshMotion still = mesh_update(m, {0, 0}, 0.0, {0, 0}, 1.0, 0.1);
    for (int n = 0; n < m.n_nodes(); ++n)
        CHECK((still.moved.nodes[n] - m.nodes[n]).norm() == 0.0);

    // Small translation: solid centroid displaced by alpha dtau U.
    Vec2 U{0.15, 0.1};
    MeshMotion mt = mesh_update(m, U, 0.0, {0, 0}, 0.5, 0.4);
    Vec2 c0 = m.region_centroid(Region::solid);
    Vec2 c1 = mt.moved.region_centroid(Region::solid);
    CHECK((c1 - c0 - U * 0.2).norm() < 1e-10);
    CHECK(mt.xc_moved.x == doctest::Approx(0.03));

    // Pure rotation: interface nodes rotate exactly, outer boundary fixed.
    double om = 0.3;
    MeshMotion mr = mesh_update(m, {0, 0}, om, {0, 0}, 1.0, 0.5);
    Mat2 q = rotation_matrix(0.15);
    for (int t = 0; t < m.n_tris(); ++t)
        if (m.region[t] == Region::solid)
            for (int k = 0; k < 3; ++k) {
                int v = m.tris[t].v[k];
                Vec2 expect{q[0][0] * m.nodes[v].x + q[0][1] * m.nodes[v].y,
                            q[1][0] * m.nodes[v].x + q[1][1] * m.nodes[v].y};
                CHECK((mr.moved.nodes[v] - expect).norm() < 1e-12);
            }
    for (int e = 0; e < m.n_edges(); ++e)
        if (m.edges[e].t1 < 0) {
            CHECK((mr.moved.nodes[m.edges[e].a] - m.nodes[m.edges[e].a]).norm() == 0.0);
        }

    // Solid isometry: pairwise distances preserved.
    std::vector<int> sv;
    for (int t = 0; t < m.n_tris(); ++t)
        if (m.region[t] == Region::solid) sv.push_back(m.tris[t].v[0]);
    for (std::size_t i = 0; i + 1 < sv.size(); i += 2) {
        double d0 = (m.nodes[sv[i]] - m.nodes[sv[i + 1]]).norm();
        double d1 = (mr.moved.nodes[sv[i]] - mr.moved.nodes[sv[i + 1]]).norm();
        CHECK(d1 == doctest::Approx(d0).epsilon(1e-10));
    }

    // Circle preservation on the moved configuration.
    for (auto& [e, circ] : mt.moved.curved_edges) {
        if (mt.moved.edge_marker[e] != BMark::interface_edge) continue;
        double d = (mt.moved.nodes[mt.moved.edges[e].mid] - circ.center).norm();
        CHECK(std::abs(d - circ.radius) < 1e-12 * circ.radius);
        CHECK((circ.center - Vec2{0.03, 0.02}).norm() < 1e-14);
    }
}

TEST_CASE("mesh_update rejects proximity violations") {
    Mesh m = particle_mesh({0, 0}, 0.9, 0.35);
    // Move the particle nearly into the wall.
    CHECK_THROWS_AS(mesh_update(m, {0.0, -10.0}, 0.0, {0, 0}, 1.0, 0.1), FsiError);
}

TEST_CASE("mesh_velocity: zero, uniform translation, rigid interface velocity") {
    Mesh m = particle_mesh();
    auto v0 = mesh_velocity(m, m, 0.25);
    for (double x : v0) CHECK(x == 0.0);

    Mesh shifted = m;
    for (auto& p : shifted.nodes) p += Vec2{0.3, -0.6};
    auto vt = mesh_velocity(shifted, m, 0.5);
    for (int n = 0; n < m.n_nodes(); ++n) {
        CHECK(vt[2 * n] == doctest::Approx(0.6));
        CHECK(vt[2 * n + 1] == doctest::Approx(-1.2));
    }

    // One PRK1-style update: interface nodal velocity matches U + omega x r
    // to first order in dtau*omega.
    Vec2 U{0.05, 0.02};
    double om = 0.04;
    double dtau = 0.05;
    MeshMotion mm = mesh_update(m, U, om, {0, 0}, 1.0, dtau);
    auto v = mesh_velocity(mm.moved, m, dtau);
    for (int t = 0; t < m.n_tris(); ++t) {
        if (m.region[t] != Region::solid) continue;
        for (int k = 0; k < 3; ++k) {
            int n = m.tris[t].v[k];
            Vec2 rigid = U + perp(m.nodes[n]) * om;
            CHECK(std::abs(v[2 * n] - rigid.x) < 1e-8 + 0.5 * dtau * om * om * m.nodes[n].norm());
            CHECK(std::abs(v[2 * n + 1] - rigid.y) < 1e-8 + 0.5 * dtau * om * om * m.nodes[n].norm());
        }
    }

    Mesh other = particle_mesh({0, 0}, 0.9, 0.4);
    CHECK_THROWS_AS(mesh_velocity(other, m, 1.0), ConnectivityMismatch);
}

TEST_CASE("maybe_remesh: healthy mesh unchanged; sheared mesh regenerated") {
    GeometrySpec g;
    g.x_min = -3; g.x_max = 3; g.y_min = -2; g.y_max = 2;
    g.particle = Circle{{0.0, 0.0}, 0.9};
    g.h = 0.35;
    Mesh m = generate_mesh(g);
    DofMap dof = build_dofmap(m);
    CoupledState s = CoupledState::zero(dof);
    // Linear field in the velocity slot (reproduced exactly by P2).
    for (int n = 0; n < m.n_nodes(); ++n) {
        s.u[2 * n] = m.nodes[n].x;
        s.u[2 * n + 1] = m.nodes[n].y;
    }

    RemeshResult keep = maybe_remesh(m, s, g, 0.25);
    CHECK_FALSE(keep.remeshed);
    CHECK(keep.mesh.n_nodes() == m.n_nodes());

    // Shear the interior to break quality, then remesh and check the
    // interpolated linear field is exact at the new nodes.
    Mesh bad = m;
    for (int v = 0; v < bad.n_vertices; ++v) {
        bool boundary = false;
        for (int e = 0; e < bad.n_edges(); ++e)
            if (bad.edge_marker[e] != BMark::none &&
                (bad.edges[e].a == v || bad.edges[e].b == v)) boundary = true;
        if (!boundary) bad.nodes[v].x += 0.42 * bad.nodes[v].y * (1.0 - std::abs(bad.nodes[v].y) / 2.0);
    }
    for (const Mesh::Edge& e : bad.edges)
        bad.nodes[e.mid] = (bad.nodes[e.a] + bad.nodes[e.b]) * 0.5;
    snap_curved_midpoints_inplace(bad);
    bad.refresh_grid();
    // Field must live on the distorted mesh for interpolation to make sense.
    CoupledState sb = s;
    for (int n = 0; n < bad.n_nodes(); ++n) {
        sb.u[2 * n] = bad.nodes[n].x;
        sb.u[2 * n + 1] = bad.nodes[n].y;
    }

    if (quality(bad).min_radius_ratio < 0.25) {
        RemeshResult rr = maybe_remesh(bad, sb, g, 0.25);
        CHECK(rr.remeshed);
        CHECK(quality(rr.mesh).min_radius_ratio >= 0.25);
        for (int n = 0; n < rr.mesh.n_nodes(); ++n) {
            CHECK(rr.state.u[2 * n] == doctest::Approx(rr.mesh.nodes[n].x).epsilon(1e-9));
            CHECK(rr.state.u[2 * n + 1] == doctest::Approx(rr.mesh.nodes[n].y).epsilon(1e-9));
        }
    }
}

TEST_CASE("mesh_update determinism") {
    Mesh m = particle_mesh();
    MeshMotion a = mesh_update(m, {0.1, 0.05}, 0.2, {0, 0}, 0.5, 0.3);
    MeshMotion b = mesh_update(m, {0.1, 0.05}, 0.2, {0, 0}, 0.5, 0.3);
    for (int n = 0; n < m.n_nodes(); ++n) {
        CHECK(a.moved.nodes[n].x == b.moved.nodes[n].x);
        CHECK(a.moved.nodes[n].y == b.moved.nodes[n].y);
    }
}
