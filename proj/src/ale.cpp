#include "fsi/ale.hpp"

#include <algorithm>
#include <cmath>

#include "fsi/assemble.hpp"
#include "fsi/direct.hpp"

namespace fsi {

Mat2 rotation_matrix(double theta) {
    double c = std::cos(theta), s = std::sin(theta);
    return {{{c, -s}, {s, c}}};
}

Mat3 rotation_matrix(const std::array<double, 3>& theta) {
    const double t = std::sqrt(theta[0] * theta[0] + theta[1] * theta[1] + theta[2] * theta[2]);
    // I + sinc(t) K + (1-cos t)/t^2 K^2 with the series limits at t -> 0.
    double a, b;
    if (t < 1e-4) {
        a = 1.0 - t * t / 6.0;
        b = 0.5 - t * t / 24.0;
    } else {
        a = std::sin(t) / t;
        b = (1.0 - std::cos(t)) / (t * t);
    }
    const double k1 = theta[0], k2 = theta[1], k3 = theta[2];
    Mat3 K = {{{0, -k3, k2}, {k3, 0, -k1}, {-k2, k1, 0}}};
    Mat3 K2{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            K2[i][j] = 0.0;
            for (int k = 0; k < 3; ++k) K2[i][j] += K[i][k] * K[k][j];
        }
    Mat3 Q{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            Q[i][j] = (i == j ? 1.0 : 0.0) + a * K[i][j] + b * K2[i][j];
    return Q;
}

Vec2 rigid_map(Vec2 y, const RigidMotionIncrement& inc) {
    Mat2 q = rotation_matrix(inc.scale * inc.omega);
    Vec2 r = y - inc.xc;
    Vec2 qr{q[0][0] * r.x + q[0][1] * r.y, q[1][0] * r.x + q[1][1] * r.y};
    return y + inc.U * inc.scale + (qr - r);
}

std::vector<Vec2> harmonic_extension(const Mesh& mesh,
                                     const std::vector<Vec2>& solid_displacement) {
    const int nv = mesh.n_vertices;
    std::vector<std::uint8_t> fixed(nv, 0);
    std::vector<Vec2> disp(nv, Vec2{0, 0});

    for (int t = 0; t < mesh.n_tris(); ++t)
        if (mesh.region[t] == Region::solid)
            for (int k = 0; k < 3; ++k) {
                int v = mesh.tris[t].v[k];
                fixed[v] = 1;
                disp[v] = solid_displacement[v];
            }
    for (int e = 0; e < mesh.n_edges(); ++e) {
        BMark m = mesh.edge_marker[e];
        if (m == BMark::none || m == BMark::interface_edge) continue;
        fixed[mesh.edges[e].a] = 1;
        fixed[mesh.edges[e].b] = 1;
    }

    std::vector<int> red(nv, -1), free_v;
    for (int v = 0; v < nv; ++v)
        if (!fixed[v]) {
            red[v] = static_cast<int>(free_v.size());
            free_v.push_back(v);
        }
    if (free_v.empty()) return disp;

    // P1 Laplacian over fluid triangles, straight-vertex geometry.
    TripletBuffer tb;
    std::vector<double> rhs_x(free_v.size(), 0.0), rhs_y(free_v.size(), 0.0);
    for (int t = 0; t < mesh.n_tris(); ++t) {
        if (mesh.region[t] != Region::fluid) continue;
        const auto& v = mesh.tris[t].v;
        Vec2 p0 = mesh.nodes[v[0]], p1 = mesh.nodes[v[1]], p2 = mesh.nodes[v[2]];
        double area2 = (p1 - p0).cross(p2 - p0);
        std::array<Vec2, 3> g = {Vec2{p1.y - p2.y, p2.x - p1.x} / area2,
                                 Vec2{p2.y - p0.y, p0.x - p2.x} / area2,
                                 Vec2{p0.y - p1.y, p1.x - p0.x} / area2};
        double area = 0.5 * area2;
        for (int i = 0; i < 3; ++i) {
            if (fixed[v[i]]) continue;
            for (int j = 0; j < 3; ++j) {
                double k = area * g[i].dot(g[j]);
                if (fixed[v[j]]) {
                    rhs_x[red[v[i]]] -= k * disp[v[j]].x;
                    rhs_y[red[v[i]]] -= k * disp[v[j]].y;
                } else {
                    tb.add(red[v[i]], red[v[j]], k);
                }
            }
        }
    }
    SparseDirect lap(tb.build(static_cast<int>(free_v.size()), static_cast<int>(free_v.size())),
                     SparseDirect::Kind::LDLT);
    std::vector<double> sx = lap.solve(rhs_x);
    std::vector<double> sy = lap.solve(rhs_y);
    for (std::size_t i = 0; i < free_v.size(); ++i) disp[free_v[i]] = {sx[i], sy[i]};
    return disp;
}

MeshMotion mesh_update(const Mesh& reference, Vec2 U, double omega, Vec2 xc, double alpha,
                       double dtau) {
    MeshMotion mm;
    mm.reference = reference;

    RigidMotionIncrement inc{U, omega, alpha * dtau, xc};
    std::vector<Vec2> solid_disp(reference.n_vertices, Vec2{0, 0});
    for (int t = 0; t < reference.n_tris(); ++t)
        if (reference.region[t] == Region::solid)
            for (int k = 0; k < 3; ++k) {
                int v = reference.tris[t].v[k];
                solid_disp[v] = rigid_map(reference.nodes[v], inc) - reference.nodes[v];
            }

    mm.displacement = harmonic_extension(reference, solid_disp);
    mm.xc_moved = xc + U * (alpha * dtau);

    Mesh moved = reference;
    for (int v = 0; v < moved.n_vertices; ++v) moved.nodes[v] += mm.displacement[v];
    for (const Mesh::Edge& e : moved.edges)
        moved.nodes[e.mid] = (moved.nodes[e.a] + moved.nodes[e.b]) * 0.5;

    // The particle circle translates with the center; pillars stay put.
    double iface_h = 0.0;
    int n_iface = 0;
    for (auto& [e, circ] : moved.curved_edges) {
        if (moved.edge_marker[e] == BMark::interface_edge) {
            circ.center = circ.center + U * (alpha * dtau);
            iface_h += (moved.nodes[moved.edges[e].a] - moved.nodes[moved.edges[e].b]).norm();
            ++n_iface;
        }
    }
    snap_curved_midpoints_inplace(moved);

    for (int t = 0; t < moved.n_tris(); ++t)
        if (moved.signed_area(t) <= 0.0)
            throw MeshTangled("element " + std::to_string(t) + " inverted by the mesh motion");

    if (n_iface > 0) {
        double h_est = iface_h / n_iface;
        Circle part{mm.xc_moved, 0.0};
        for (auto& [e, circ] : moved.curved_edges)
            if (moved.edge_marker[e] == BMark::interface_edge) { part = circ; break; }
        // clearance against pillars and the outer box
        double clear = 1e300;
        for (auto& [e, circ] : moved.curved_edges) {
            if (moved.edge_marker[e] != BMark::pillar) continue;
            clear = std::min(clear,
                             (circ.center - part.center).norm() - circ.radius - part.radius);
        }
        double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (int e = 0; e < moved.n_edges(); ++e) {
            BMark m = moved.edge_marker[e];
            if (m != BMark::outer_wall && m != BMark::inlet && m != BMark::outlet) continue;
            for (int v : {moved.edges[e].a, moved.edges[e].b}) {
                xmin = std::min(xmin, moved.nodes[v].x);
                xmax = std::max(xmax, moved.nodes[v].x);
                ymin = std::min(ymin, moved.nodes[v].y);
                ymax = std::max(ymax, moved.nodes[v].y);
            }
        }
        clear = std::min({clear, part.center.x - part.radius - xmin,
                          xmax - part.center.x - part.radius,
                          part.center.y - part.radius - ymin,
                          ymax - part.center.y - part.radius});
        if (clear < h_est)
            throw ProximityViolation("particle clearance " + std::to_string(clear) +
                                     " below element size " + std::to_string(h_est));
    }

    moved.refresh_grid();
    mm.moved = std::move(moved);
    return mm;
}

std::vector<double> mesh_velocity(const Mesh& moved, const Mesh& reference, double dtau) {
    if (moved.n_nodes() != reference.n_nodes() || moved.n_tris() != reference.n_tris())
        throw ConnectivityMismatch("mesh velocity requires identical connectivity");
    std::vector<double> v(2 * moved.n_nodes());
    for (int n = 0; n < moved.n_nodes(); ++n) {
        v[2 * n] = (moved.nodes[n].x - reference.nodes[n].x) / dtau;
        v[2 * n + 1] = (moved.nodes[n].y - reference.nodes[n].y) / dtau;
    }
    return v;
}

RemeshResult maybe_remesh(const Mesh& mesh, const CoupledState& state,
                          const GeometrySpec& geometry, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidField("remesh threshold in (0,1)");
    QualityReport q = quality(mesh);
    if (q.min_radius_ratio >= threshold) return {mesh, state, false};

    GeometrySpec g = geometry;
    if (g.particle) g.particle->center = state.xc;
    Mesh fresh = generate_mesh(g);
    QualityReport qf = quality(fresh);
    if (qf.min_radius_ratio < threshold)
        throw MeshingFailed("regenerated mesh quality " + std::to_string(qf.min_radius_ratio) +
                            " still below threshold");

    DofMap dof_old = build_dofmap(mesh);
    DofMap dof_new = build_dofmap(fresh);

    CoupledState out;
    out.U = state.U;
    out.omega = state.omega;
    out.xc = state.xc;
    out.t = state.t;
    out.u = interpolate_p2(mesh, state.u, 2, fresh);

    // Pressure: P1 on the fluid region; fall back to the nearest pressure
    // vertex when a new node lands in the solid by roundoff.
    out.p.assign(dof_new.np(), 0.0);
    for (int k = 0; k < dof_new.np(); ++k) {
        Vec2 x = fresh.nodes[dof_new.vertex_of_p[k]];
        auto [t, lam] = mesh.locate(x, 1e-9);
        if (mesh.region[t] == Region::fluid) {
            double val = 0.0;
            for (int a = 0; a < 3; ++a)
                val += lam[a] * state.p[dof_old.p_of_vertex[mesh.tris[t].v[a]]];
            out.p[k] = val;
        } else {
            double best = 1e300;
            for (int j = 0; j < dof_old.np(); ++j) {
                double d = (mesh.nodes[dof_old.vertex_of_p[j]] - x).norm2();
                if (d < best) { best = d; out.p[k] = state.p[j]; }
            }
        }
    }

    // Multiplier: P2 on the solid region with the same fallback.
    std::vector<double> lam_full(2 * mesh.n_nodes(), 0.0);
    for (std::size_t k = 0; k < dof_old.node_of_l.size(); ++k) {
        lam_full[2 * dof_old.node_of_l[k]] = state.lambda[2 * k];
        lam_full[2 * dof_old.node_of_l[k] + 1] = state.lambda[2 * k + 1];
    }
    out.lambda.assign(dof_new.nl(), 0.0);
    for (std::size_t k = 0; k < dof_new.node_of_l.size(); ++k) {
        Vec2 x = fresh.nodes[dof_new.node_of_l[k]];
        auto [t, lam] = mesh.locate(x, 1e-9);
        if (mesh.region[t] == Region::solid) {
            auto v = eval_p2_field(mesh, lam_full, 2, t, lam, x);
            out.lambda[2 * k] = v[0];
            out.lambda[2 * k + 1] = v[1];
        } else {
            double best = 1e300;
            int bj = 0;
            for (std::size_t j = 0; j < dof_old.node_of_l.size(); ++j) {
                double d = (mesh.nodes[dof_old.node_of_l[j]] - x).norm2();
                if (d < best) { best = d; bj = static_cast<int>(j); }
            }
            out.lambda[2 * k] = state.lambda[2 * bj];
            out.lambda[2 * k + 1] = state.lambda[2 * bj + 1];
        }
    }

    return {std::move(fresh), std::move(out), true};
}

} // namespace fsi
