#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>

#include "fsi/mesh.hpp"

namespace fsi {

namespace {

constexpr double kPi = 3.14159265358979323846;

double hash_unit(std::uint64_t x) {
    // splitmix64, mapped to [-1, 1]
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    x = x ^ (x >> 31);
    return 2.0 * (static_cast<double>(x >> 11) * (1.0 / 9007199254740992.0)) - 1.0;
}

struct SeedInfo {
    std::vector<Circle> circles;          // holes then (optionally) particle
    int particle_index = -1;              // index into circles, -1 if none
    std::vector<std::vector<int>> circle_seeds; // point ids per circle, in angular order
    std::vector<int> rect_seeds;          // point ids on the rectangle loop, in order
    int n_fixed = 0;
};

// 1 = inside particle, 0 = fluid, -1 = not in domain (hole or outside)
int classify(const GeometrySpec& g, const SeedInfo& s, Vec2 p) {
    if (p.x < g.x_min || p.x > g.x_max || p.y < g.y_min || p.y > g.y_max) return -1;
    for (std::size_t c = 0; c < s.circles.size(); ++c) {
        if ((p - s.circles[c].center).norm() < s.circles[c].radius)
            return static_cast<int>(c) == s.particle_index ? 1 : -1;
    }
    return 0;
}

int circle_seed_count(const Circle& c, double h) {
    return std::max(16, static_cast<int>(std::lround(2.0 * kPi * c.radius / h)));
}

} // namespace

Mesh generate_mesh(const GeometrySpec& spec) {
    spec.validate();
    const double h = spec.h;

    for (int attempt = 0; attempt < 4; ++attempt) {
        SeedInfo info;
        info.circles = spec.holes;
        if (spec.particle) {
            info.particle_index = static_cast<int>(info.circles.size());
            info.circles.push_back(*spec.particle);
        }

        std::vector<Vec2> pts;

        // Rectangle loop seeds.
        auto add_side = [&](Vec2 a, Vec2 b) {
            int n = std::max(1, static_cast<int>(std::lround((b - a).norm() / h)));
            for (int i = 0; i < n; ++i) {
                info.rect_seeds.push_back(static_cast<int>(pts.size()));
                pts.push_back(a + (b - a) * (static_cast<double>(i) / n));
            }
        };
        add_side({spec.x_min, spec.y_min}, {spec.x_max, spec.y_min});
        add_side({spec.x_max, spec.y_min}, {spec.x_max, spec.y_max});
        add_side({spec.x_max, spec.y_max}, {spec.x_min, spec.y_max});
        add_side({spec.x_min, spec.y_max}, {spec.x_min, spec.y_min});

        // Circle seeds.
        std::vector<double> spacing(info.circles.size());
        for (std::size_t c = 0; c < info.circles.size(); ++c) {
            int n = circle_seed_count(info.circles[c], h);
            spacing[c] = 2.0 * kPi * info.circles[c].radius / n;
            info.circle_seeds.emplace_back();
            for (int i = 0; i < n; ++i) {
                double th = 2.0 * kPi * i / n;
                info.circle_seeds[c].push_back(static_cast<int>(pts.size()));
                pts.push_back(info.circles[c].center +
                              Vec2{info.circles[c].radius * std::cos(th),
                                   info.circles[c].radius * std::sin(th)});
            }
        }
        info.n_fixed = static_cast<int>(pts.size());

        // Interior lattice (hex packing), kept clear of all boundaries.
        std::vector<int> side; // per movable point: 1 inside particle, 0 fluid
        const double dy = h * std::sqrt(3.0) / 2.0;
        const double clear_rect = 0.45 * h;
        int jrow = 0;
        for (double y = spec.y_min + 0.5 * dy; y < spec.y_max; y += dy, ++jrow) {
            if (y < spec.y_min + clear_rect || y > spec.y_max - clear_rect) continue;
            double xoff = (jrow % 2 == 0) ? 0.5 * h : h;
            for (double x = spec.x_min + xoff; x < spec.x_max; x += h) {
                if (x < spec.x_min + clear_rect || x > spec.x_max - clear_rect) continue;
                Vec2 p{x, y};
                bool near_circle = false;
                bool in_domain = true;
                int region_side = 0;
                for (std::size_t c = 0; c < info.circles.size(); ++c) {
                    double d = (p - info.circles[c].center).norm() - info.circles[c].radius;
                    double clear_c = 0.5 * std::min(h, 1.4 * spacing[c]);
                    if (std::abs(d) < clear_c) near_circle = true;
                    if (d < 0.0) {
                        if (static_cast<int>(c) == info.particle_index)
                            region_side = 1;
                        else
                            in_domain = false;
                    }
                }
                if (!in_domain || near_circle) continue;
                std::uint64_t key = (static_cast<std::uint64_t>(pts.size()) << 3) | attempt;
                p.x += 1e-4 * h * hash_unit(key * 2 + 1);
                p.y += 1e-4 * h * hash_unit(key * 2 + 2);
                side.push_back(region_side);
                pts.push_back(p);
            }
        }

        // distmesh-style force relaxation with fixed boundary seeds.
        std::vector<std::array<int, 3>> tri;
        std::vector<std::uint64_t> edge_keys;
        auto retriangulate = [&]() {
            auto raw = delaunay_triangulate(pts);
            tri.clear();
            for (auto& t : raw) {
                Vec2 cen = (pts[t[0]] + pts[t[1]] + pts[t[2]]) / 3.0;
                if (classify(spec, info, cen) >= 0) tri.push_back(t);
            }
            edge_keys.clear();
            edge_keys.reserve(tri.size() * 3);
            for (auto& t : tri)
                for (int k = 0; k < 3; ++k) {
                    auto [a, b] = std::minmax(t[k], t[(k + 1) % 3]);
                    edge_keys.push_back((static_cast<std::uint64_t>(a) << 32) |
                                        static_cast<std::uint32_t>(b));
                }
            std::sort(edge_keys.begin(), edge_keys.end());
            edge_keys.erase(std::unique(edge_keys.begin(), edge_keys.end()), edge_keys.end());
        };
        retriangulate();

        std::vector<Vec2> anchor = pts; // positions at the last retriangulation
        std::vector<Vec2> force(pts.size());
        int last_retri = 0;
        for (int iter = 0; iter < 200; ++iter) {
            double sum_l2 = 0.0;
            for (std::uint64_t key : edge_keys) {
                int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
                sum_l2 += (pts[a] - pts[b]).norm2();
            }
            double l0 = 1.2 * std::sqrt(sum_l2 / static_cast<double>(edge_keys.size()));

            std::fill(force.begin(), force.end(), Vec2{0, 0});
            for (std::uint64_t key : edge_keys) {
                int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
                Vec2 d = pts[b] - pts[a];
                double len = d.norm();
                double f = std::max(l0 - len, 0.0);
                if (f > 0.0 && len > 0.0) {
                    Vec2 push = d * (f / len);
                    force[a] -= push;
                    force[b] += push;
                }
            }

            double max_move = 0.0;
            for (std::size_t i = info.n_fixed; i < pts.size(); ++i) {
                Vec2 step = force[i] * 0.2;
                double sn = step.norm();
                if (sn > 0.5 * h) step = step * (0.5 * h / sn); // limit runaway steps
                Vec2 p = pts[i] + step;

                // Keep movable points on their own side of every circle and
                // inside the rectangle.
                p.x = std::clamp(p.x, spec.x_min + 0.3 * h, spec.x_max - 0.3 * h);
                p.y = std::clamp(p.y, spec.y_min + 0.3 * h, spec.y_max - 0.3 * h);
                for (std::size_t c = 0; c < info.circles.size(); ++c) {
                    Vec2 r = p - info.circles[c].center;
                    double d = r.norm();
                    double clear_c = 0.35 * std::min(h, 1.4 * spacing[c]);
                    bool inside_allowed = static_cast<int>(c) == info.particle_index &&
                                          side[i - info.n_fixed] == 1;
                    double R = info.circles[c].radius;
                    if (inside_allowed) {
                        if (d > R - clear_c && d > 0.0) p = info.circles[c].center + r * ((R - clear_c) / d);
                    } else {
                        if (d < R + clear_c && d > 0.0) p = info.circles[c].center + r * ((R + clear_c) / d);
                    }
                }
                max_move = std::max(max_move, (p - pts[i]).norm());
                pts[i] = p;
            }

            double drift = 0.0;
            for (std::size_t i = info.n_fixed; i < pts.size(); ++i)
                drift = std::max(drift, (pts[i] - anchor[i]).norm());
            if (drift > 0.25 * h && iter - last_retri >= 3) {
                retriangulate();
                anchor = pts;
                last_retri = iter;
            }
            if (max_move < 1e-3 * h) break;
        }
        retriangulate();

        // Assemble the Mesh.
        Mesh m;
        m.nodes = pts;
        m.n_vertices = static_cast<int>(pts.size());
        for (auto& t : tri) m.tris.push_back({t, {-1, -1, -1}});
        m.region.assign(m.tris.size(), Region::fluid);
        if (spec.particle) {
            for (int t = 0; t < m.n_tris(); ++t) {
                Vec2 cen = (pts[tri[t][0]] + pts[tri[t][1]] + pts[tri[t][2]]) / 3.0;
                if ((cen - spec.particle->center).norm() < spec.particle->radius)
                    m.region[t] = Region::solid;
            }
        }
        try {
            m.finalize_connectivity();

            // Drop isolated vertices (culling can orphan lattice points that
            // ended inside holes); rebuild if any.
            // (По construction this should not happen; guarded by validate.)

            // Classify boundary edges and recover circle polylines.
            const double tol = 1e-9 * std::max(spec.x_max - spec.x_min, spec.y_max - spec.y_min);
            std::map<std::pair<int, int>, std::pair<int, int>> circle_pair; // (a,b)->(circle, adjacency ok)
            for (std::size_t c = 0; c < info.circles.size(); ++c) {
                const auto& seeds = info.circle_seeds[c];
                int n = static_cast<int>(seeds.size());
                for (int i = 0; i < n; ++i) {
                    auto key = std::minmax(seeds[i], seeds[(i + 1) % n]);
                    circle_pair[key] = {static_cast<int>(c), 1};
                }
            }
            int circle_edges_found = 0;
            for (int e = 0; e < m.n_edges(); ++e) {
                const Mesh::Edge& ed = m.edges[e];
                auto it = circle_pair.find({ed.a, ed.b});
                if (it != circle_pair.end()) {
                    int c = it->second.first;
                    m.curved_edges[e] = info.circles[c];
                    ++circle_edges_found;
                    if (c == info.particle_index) {
                        if (ed.t1 < 0) throw MeshingFailed("particle edge on outer boundary");
                        m.edge_marker[e] = BMark::interface_edge;
                    } else {
                        if (ed.t1 >= 0) throw MeshingFailed("hole boundary edge is interior");
                        m.edge_marker[e] = BMark::pillar;
                    }
                } else if (ed.t1 < 0) {
                    Vec2 mid = (m.nodes[ed.a] + m.nodes[ed.b]) * 0.5;
                    if (std::abs(mid.x - spec.x_min) < tol) m.edge_marker[e] = BMark::inlet;
                    else if (std::abs(mid.x - spec.x_max) < tol) m.edge_marker[e] = BMark::outlet;
                    else if (std::abs(mid.y - spec.y_min) < tol || std::abs(mid.y - spec.y_max) < tol)
                        m.edge_marker[e] = BMark::outer_wall;
                    else throw MeshingFailed("unclassified boundary edge");
                }
            }
            int circle_edges_expected = 0;
            for (const auto& s : info.circle_seeds) circle_edges_expected += static_cast<int>(s.size());
            if (circle_edges_found != circle_edges_expected)
                throw MeshingFailed("circle boundary polyline not recovered");

            snap_curved_midpoints_inplace(m);
            m.refresh_grid();
            m.validate();
        } catch (const FsiError&) {
            if (attempt == 3) throw;
            continue;
        }

        QualityReport q = quality(m);
        if (q.min_radius_ratio < 0.2) {
            if (attempt == 3)
                throw MeshingFailed("smoothing stagnated below quality floor (radius ratio " +
                                    std::to_string(q.min_radius_ratio) + ")");
            continue;
        }
        return m;
    }
    throw MeshingFailed("mesh generation failed");
}

} // namespace fsi
