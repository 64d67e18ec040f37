#include "fsi/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "fsi/fem.hpp"

namespace fsi {

void GeometrySpec::validate() const {
    if (!(h > 0.0)) throw InfeasibleGeometry("mesh size h must be positive");
    if (!(x_max > x_min && y_max > y_min)) throw InfeasibleGeometry("empty rectangle");
    std::vector<Circle> all = holes;
    if (particle) all.push_back(*particle);
    for (const Circle& c : all) {
        if (!(c.radius > 0.0)) throw InfeasibleGeometry("circle radius must be positive");
        if (c.center.x - c.radius <= x_min || c.center.x + c.radius >= x_max ||
            c.center.y - c.radius <= y_min || c.center.y + c.radius >= y_max)
            throw InfeasibleGeometry("circle not strictly inside the rectangle");
    }
    for (std::size_t i = 0; i < all.size(); ++i)
        for (std::size_t j = i + 1; j < all.size(); ++j) {
            double d = (all[i].center - all[j].center).norm();
            if (d <= all[i].radius + all[j].radius)
                throw InfeasibleGeometry("circles overlap");
        }
}

double Mesh::signed_area(int t) const {
    const Tri& tr = tris[t];
    const Vec2& a = nodes[tr.v[0]];
    const Vec2& b = nodes[tr.v[1]];
    const Vec2& c = nodes[tr.v[2]];
    return 0.5 * ((b - a).cross(c - a));
}

double Mesh::diameter() const {
    double xmin = nodes[0].x, xmax = nodes[0].x, ymin = nodes[0].y, ymax = nodes[0].y;
    for (int i = 0; i < n_vertices; ++i) {
        xmin = std::min(xmin, nodes[i].x); xmax = std::max(xmax, nodes[i].x);
        ymin = std::min(ymin, nodes[i].y); ymax = std::max(ymax, nodes[i].y);
    }
    return std::hypot(xmax - xmin, ymax - ymin);
}

bool Mesh::has_solid() const {
    return std::any_of(region.begin(), region.end(), [](Region r) { return r == Region::solid; });
}

namespace {

// Isoparametric (6-node) element integration of f(x) dx.
template <class F>
double integrate_tri(const Mesh& m, int t, const F& f, int degree = 6) {
    const QuadratureRule& qr = quadrature(degree);
    const Mesh::Tri& tr = m.tris[t];
    std::array<Vec2, 6> xs = {m.nodes[tr.v[0]],  m.nodes[tr.v[1]],  m.nodes[tr.v[2]],
                              m.nodes[tr.mid[0]], m.nodes[tr.mid[1]], m.nodes[tr.mid[2]]};
    double acc = 0.0;
    for (std::size_t q = 0; q < qr.points.size(); ++q) {
        BasisEval be = basis_eval(2, qr.points[q]);
        Vec2 x{0, 0};
        double j00 = 0, j01 = 0, j10 = 0, j11 = 0;
        for (int i = 0; i < 6; ++i) {
            x += xs[i] * be.values[i];
            j00 += xs[i].x * be.gradients[i].x;
            j01 += xs[i].x * be.gradients[i].y;
            j10 += xs[i].y * be.gradients[i].x;
            j11 += xs[i].y * be.gradients[i].y;
        }
        double det = j00 * j11 - j01 * j10;
        acc += qr.weights[q] * std::abs(det) * f(x);
    }
    return acc;
}

} // namespace

double Mesh::region_area(Region r) const {
    double a = 0.0;
    for (int t = 0; t < n_tris(); ++t)
        if (region[t] == r) a += integrate_tri(*this, t, [](Vec2) { return 1.0; });
    return a;
}

Vec2 Mesh::region_centroid(Region r) const {
    double a = 0.0, mx = 0.0, my = 0.0;
    for (int t = 0; t < n_tris(); ++t) {
        if (region[t] != r) continue;
        a += integrate_tri(*this, t, [](Vec2) { return 1.0; });
        mx += integrate_tri(*this, t, [](Vec2 x) { return x.x; });
        my += integrate_tri(*this, t, [](Vec2 x) { return x.y; });
    }
    if (a == 0.0) return {0, 0};
    return {mx / a, my / a};
}

double Mesh::solid_second_moment(Vec2 c) const {
    double s = 0.0;
    for (int t = 0; t < n_tris(); ++t)
        if (region[t] == Region::solid)
            s += integrate_tri(*this, t, [&](Vec2 x) { return (x - c).norm2(); });
    return s;
}

void Mesh::finalize_connectivity() {
    // Enforce CCW orientation before anything else.
    for (int t = 0; t < n_tris(); ++t)
        if (signed_area(t) < 0.0) std::swap(tris[t].v[1], tris[t].v[2]);

    nodes.resize(n_vertices);
    edges.clear();
    std::map<std::pair<int, int>, int> edge_of;
    for (int t = 0; t < n_tris(); ++t) {
        for (int k = 0; k < 3; ++k) {
            int a = tris[t].v[k], b = tris[t].v[(k + 1) % 3];
            auto key = std::minmax(a, b);
            auto it = edge_of.find(key);
            int e;
            if (it == edge_of.end()) {
                e = static_cast<int>(edges.size());
                edge_of.emplace(key, e);
                Edge ed;
                ed.a = key.first;
                ed.b = key.second;
                ed.mid = n_vertices + e;
                ed.t0 = t;
                edges.push_back(ed);
            } else {
                e = it->second;
                if (edges[e].t1 != -1) throw MeshingFailed("edge shared by 3+ triangles");
                edges[e].t1 = t;
            }
            tris[t].mid[k] = edges[e].mid;
        }
    }
    nodes.resize(n_vertices + edges.size());
    for (const Edge& e : edges) nodes[e.mid] = (nodes[e.a] + nodes[e.b]) * 0.5;
    if (edge_marker.size() != edges.size()) edge_marker.assign(edges.size(), BMark::none);
    refresh_grid();
}

void Mesh::refresh_grid() {
    double xmin = nodes[0].x, xmax = nodes[0].x, ymin = nodes[0].y, ymax = nodes[0].y;
    for (int i = 0; i < n_vertices; ++i) {
        xmin = std::min(xmin, nodes[i].x); xmax = std::max(xmax, nodes[i].x);
        ymin = std::min(ymin, nodes[i].y); ymax = std::max(ymax, nodes[i].y);
    }
    int n = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n_tris()))));
    grid_.x0 = xmin;
    grid_.y0 = ymin;
    grid_.nx = n;
    grid_.ny = n;
    grid_.dx = std::max((xmax - xmin) / n, 1e-300);
    grid_.dy = std::max((ymax - ymin) / n, 1e-300);
    grid_.cells.assign(static_cast<std::size_t>(n) * n, {});
    for (int t = 0; t < n_tris(); ++t) {
        double txmin = 1e300, txmax = -1e300, tymin = 1e300, tymax = -1e300;
        for (int k = 0; k < 3; ++k) {
            const Vec2& p = nodes[tris[t].v[k]];
            txmin = std::min(txmin, p.x); txmax = std::max(txmax, p.x);
            tymin = std::min(tymin, p.y); tymax = std::max(tymax, p.y);
        }
        int i0 = std::clamp(static_cast<int>((txmin - grid_.x0) / grid_.dx), 0, n - 1);
        int i1 = std::clamp(static_cast<int>((txmax - grid_.x0) / grid_.dx), 0, n - 1);
        int j0 = std::clamp(static_cast<int>((tymin - grid_.y0) / grid_.dy), 0, n - 1);
        int j1 = std::clamp(static_cast<int>((tymax - grid_.y0) / grid_.dy), 0, n - 1);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i)
                grid_.cells[static_cast<std::size_t>(j) * n + i].push_back(t);
    }
}

namespace {

bool bary_of(const Mesh& m, int t, Vec2 p, double tol, std::array<double, 3>& lam) {
    const Vec2& a = m.nodes[m.tris[t].v[0]];
    const Vec2& b = m.nodes[m.tris[t].v[1]];
    const Vec2& c = m.nodes[m.tris[t].v[2]];
    double den = (b - a).cross(c - a);
    if (den == 0.0) return false;
    double l1 = (p - a).cross(c - a) / den;
    double l2 = (b - a).cross(p - a) / den;
    double l0 = 1.0 - l1 - l2;
    lam = {l0, l1, l2};
    return l0 >= -tol && l1 >= -tol && l2 >= -tol;
}

} // namespace

std::pair<int, std::array<double, 3>> Mesh::locate(Vec2 p, double tol_rel) const {
    const double tol = tol_rel;
    std::array<double, 3> lam;
    if (grid_.nx > 0) {
        int ci = std::clamp(static_cast<int>((p.x - grid_.x0) / grid_.dx), 0, grid_.nx - 1);
        int cj = std::clamp(static_cast<int>((p.y - grid_.y0) / grid_.dy), 0, grid_.ny - 1);
        for (int ring = 0; ring <= 1; ++ring) {
            for (int j = std::max(0, cj - ring); j <= std::min(grid_.ny - 1, cj + ring); ++j)
                for (int i = std::max(0, ci - ring); i <= std::min(grid_.nx - 1, ci + ring); ++i) {
                    if (ring == 1 && i != ci - 1 && i != ci + 1 && j != cj - 1 && j != cj + 1)
                        continue;
                    for (int t : grid_.cells[static_cast<std::size_t>(j) * grid_.nx + i])
                        if (bary_of(*this, t, p, tol, lam)) return {t, lam};
                }
        }
    }
    // Robust fallback: nearest triangle by barycentric violation.
    int best = -1;
    double best_viol = 1e300;
    for (int t = 0; t < n_tris(); ++t) {
        if (bary_of(*this, t, p, tol, lam)) return {t, lam};
        const Vec2& a = nodes[tris[t].v[0]];
        const Vec2& b = nodes[tris[t].v[1]];
        const Vec2& c = nodes[tris[t].v[2]];
        double den = (b - a).cross(c - a);
        if (den == 0.0) continue;
        double l1 = (p - a).cross(c - a) / den;
        double l2 = (b - a).cross(p - a) / den;
        double l0 = 1.0 - l1 - l2;
        double viol = -std::min({l0, l1, l2, 0.0});
        if (viol < best_viol) { best_viol = viol; best = t; }
    }
    if (best >= 0 && best_viol * diameter() < 1e-7 * diameter() + 1e-12) {
        bary_of(*this, best, p, 1.0, lam);
        return {best, lam};
    }
    throw PointOutsideDomain("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                             ") not inside the mesh");
}

std::pair<int, std::array<double, 3>> locate_point(const Mesh& mesh, Vec2 p) {
    return mesh.locate(p);
}

std::vector<int> Mesh::boundary_edges() const {
    std::vector<int> out;
    for (int e = 0; e < n_edges(); ++e)
        if (edges[e].t1 == -1) out.push_back(e);
    return out;
}

std::vector<int> Mesh::interface_edge_ids() const {
    std::vector<int> out;
    for (int e = 0; e < n_edges(); ++e) {
        const Edge& ed = edges[e];
        if (ed.t1 >= 0 && region[ed.t0] != region[ed.t1]) out.push_back(e);
    }
    return out;
}

QualityReport quality(const Mesh& mesh) {
    QualityReport rep;
    rep.min_radius_ratio = 2.0;
    rep.min_angle = 10.0;
    for (int t = 0; t < mesh.n_tris(); ++t) {
        const Vec2& p0 = mesh.nodes[mesh.tris[t].v[0]];
        const Vec2& p1 = mesh.nodes[mesh.tris[t].v[1]];
        const Vec2& p2 = mesh.nodes[mesh.tris[t].v[2]];
        double a = (p1 - p2).norm(), b = (p2 - p0).norm(), c = (p0 - p1).norm();
        double area = std::abs(mesh.signed_area(t));
        double peri = a + b + c;
        double ratio = 16.0 * area * area / (peri * a * b * c);
        if (ratio < rep.min_radius_ratio) {
            rep.min_radius_ratio = ratio;
            rep.worst_element = t;
        }
        auto angle = [](double opp, double s1, double s2) {
            double ca = std::clamp((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2), -1.0, 1.0);
            return std::acos(ca);
        };
        rep.min_angle = std::min({rep.min_angle, angle(a, b, c), angle(b, c, a), angle(c, a, b)});
    }
    return rep;
}

void snap_curved_midpoints_inplace(Mesh& mesh) {
    for (const auto& [e, circ] : mesh.curved_edges) {
        const Mesh::Edge& ed = mesh.edges[e];
        Vec2 straight = (mesh.nodes[ed.a] + mesh.nodes[ed.b]) * 0.5;
        Vec2 d = straight - circ.center;
        double len = d.norm();
        if (len < 1e-14 * circ.radius)
            throw DegenerateProjection("edge midpoint coincides with circle center");
        mesh.nodes[ed.mid] = circ.center + d * (circ.radius / len);
    }
}

Mesh snap_curved_midpoints(const Mesh& mesh, const std::vector<Circle>& circles) {
    Mesh out = mesh;
    // Assign ownership: an edge belongs to a circle when both endpoints lie on it.
    for (int e = 0; e < out.n_edges(); ++e) {
        const Mesh::Edge& ed = out.edges[e];
        for (const Circle& c : circles) {
            double da = std::abs((out.nodes[ed.a] - c.center).norm() - c.radius);
            double db = std::abs((out.nodes[ed.b] - c.center).norm() - c.radius);
            if (da < 1e-9 * c.radius && db < 1e-9 * c.radius) {
                // Exclude chords: the straight midpoint of a boundary arc edge is
                // close to the circle, a chord through the interior is not.
                Vec2 m = (out.nodes[ed.a] + out.nodes[ed.b]) * 0.5;
                double dm = std::abs((m - c.center).norm() - c.radius);
                double edge_len = (out.nodes[ed.a] - out.nodes[ed.b]).norm();
                if (dm < 0.3 * edge_len + 1e-12) out.curved_edges[e] = c;
            }
        }
    }
    snap_curved_midpoints_inplace(out);
    out.refresh_grid();
    return out;
}

void Mesh::validate() const {
    for (int t = 0; t < n_tris(); ++t)
        if (signed_area(t) <= 0.0) throw MeshingFailed("non-positive triangle area");
    if (static_cast<int>(region.size()) != n_tris())
        throw MeshingFailed("region tags inconsistent");

    // Interface edges are exactly the fluid/solid shared edges.
    for (int e = 0; e < n_edges(); ++e) {
        const Edge& ed = edges[e];
        bool is_iface = ed.t1 >= 0 && region[ed.t0] != region[ed.t1];
        bool marked = edge_marker[e] == BMark::interface_edge;
        if (is_iface != marked) throw MeshingFailed("interface marker mismatch");
        if (ed.t1 == -1 && edge_marker[e] == BMark::none)
            throw MeshingFailed("boundary edge without marker");
    }

    // Curved midpoints on their circles.
    for (const auto& [e, circ] : curved_edges) {
        double d = std::abs((nodes[edges[e].mid] - circ.center).norm() - circ.radius);
        if (d > 1e-12 * circ.radius) throw MeshingFailed("curved midpoint off its circle");
    }

    // Solid triangles form one edge-connected component.
    std::vector<int> solid;
    for (int t = 0; t < n_tris(); ++t)
        if (region[t] == Region::solid) solid.push_back(t);
    if (!solid.empty()) {
        std::set<int> seen = {solid[0]};
        std::vector<int> stack = {solid[0]};
        std::map<int, std::vector<std::pair<int, int>>> tri_edges; // tri -> (edge, other)
        for (int e = 0; e < n_edges(); ++e) {
            if (edges[e].t1 < 0) continue;
            tri_edges[edges[e].t0].push_back({e, edges[e].t1});
            tri_edges[edges[e].t1].push_back({e, edges[e].t0});
        }
        while (!stack.empty()) {
            int t = stack.back();
            stack.pop_back();
            for (auto [e, o] : tri_edges[t])
                if (region[o] == Region::solid && !seen.count(o)) {
                    seen.insert(o);
                    stack.push_back(o);
                }
        }
        if (seen.size() != solid.size())
            throw MeshingFailed("solid region is not edge-connected");
    }
}

} // namespace fsi
