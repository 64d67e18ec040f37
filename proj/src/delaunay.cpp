#include <algorithm>
#include <cmath>
#include <numeric>

#include "fsi/mesh.hpp"

namespace fsi {

namespace {

struct DTri {
    std::array<int, 3> v;   // CCW
    std::array<int, 3> nbr; // nbr[k] shares edge (v[(k+1)%3], v[(k+2)%3])
    bool alive = true;
};

double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
    long double d = (static_cast<long double>(b.x) - a.x) * (static_cast<long double>(c.y) - a.y) -
                    (static_cast<long double>(b.y) - a.y) * (static_cast<long double>(c.x) - a.x);
    return static_cast<double>(d);
}

// > 0 when p is strictly inside the circumcircle of CCW triangle (a,b,c).
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
    long double ax = a.x - p.x, ay = a.y - p.y;
    long double bx = b.x - p.x, by = b.y - p.y;
    long double cx = c.x - p.x, cy = c.y - p.y;
    long double a2 = ax * ax + ay * ay;
    long double b2 = bx * bx + by * by;
    long double c2 = cx * cx + cy * cy;
    long double det = ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx);
    long double mag = std::fabs(ax * by * c2) + std::fabs(ax * b2 * cy) + std::fabs(ay * bx * c2) +
                      std::fabs(ay * b2 * cx) + std::fabs(a2 * bx * cy) + std::fabs(a2 * by * cx);
    if (std::fabs(det) <= 1e-14L * mag) return 0.0; // cocircular within precision
    return static_cast<double>(det);
}

struct Triangulator {
    const std::vector<Vec2>& pts;
    std::vector<Vec2> all;
    std::vector<DTri> tris;
    int hint = 0;

    explicit Triangulator(const std::vector<Vec2>& p) : pts(p) {}

    int locate(const Vec2& p) const {
        int t = hint;
        if (t < 0 || t >= static_cast<int>(tris.size()) || !tris[t].alive) t = first_alive();
        int guard = static_cast<int>(tris.size()) * 4 + 16;
        while (guard-- > 0) {
            const DTri& tr = tris[t];
            const Vec2& a = all[tr.v[0]];
            const Vec2& b = all[tr.v[1]];
            const Vec2& c = all[tr.v[2]];
            double scale = std::abs(orient(a, b, c)) + 1e-300;
            double eps = 1e-13 * scale;
            double o0 = orient(a, b, p);
            double o1 = orient(b, c, p);
            double o2 = orient(c, a, p);
            if (o0 >= -eps && o1 >= -eps && o2 >= -eps) return t;
            // Step across the most violated edge.
            int k;
            if (o0 <= o1 && o0 <= o2) k = 2;      // edge (v0,v1) is opposite v2
            else if (o1 <= o2) k = 0;             // edge (v1,v2) opposite v0
            else k = 1;                           // edge (v2,v0) opposite v1
            int nt = tr.nbr[k];
            if (nt < 0) break;
            t = nt;
        }
        // Fallback: exhaustive scan.
        for (int i = 0; i < static_cast<int>(tris.size()); ++i) {
            if (!tris[i].alive) continue;
            const DTri& tr = tris[i];
            const Vec2& a = all[tr.v[0]];
            const Vec2& b = all[tr.v[1]];
            const Vec2& c = all[tr.v[2]];
            double scale = std::abs(orient(a, b, c)) + 1e-300;
            double eps = 1e-12 * scale;
            if (orient(a, b, p) >= -eps && orient(b, c, p) >= -eps && orient(c, a, p) >= -eps)
                return i;
        }
        throw MeshingFailed("Delaunay point location failed");
    }

    int first_alive() const {
        for (int i = 0; i < static_cast<int>(tris.size()); ++i)
            if (tris[i].alive) return i;
        throw MeshingFailed("empty triangulation");
    }

    bool in_circum(int t, const Vec2& p) const {
        const DTri& tr = tris[t];
        return incircle(all[tr.v[0]], all[tr.v[1]], all[tr.v[2]], p) > 0.0;
    }

    void insert(int pid) {
        const Vec2& p = all[pid];
        int t0 = locate(p);

        // Grow the cavity of triangles whose circumcircle contains p.
        std::vector<int> cavity;
        std::vector<char> in_cavity(tris.size(), 0);
        std::vector<int> stack = {t0};
        in_cavity[t0] = 1;
        while (!stack.empty()) {
            int t = stack.back();
            stack.pop_back();
            cavity.push_back(t);
            for (int k = 0; k < 3; ++k) {
                int nt = tris[t].nbr[k];
                if (nt >= 0 && !in_cavity[nt] && in_circum(nt, p)) {
                    in_cavity[nt] = 1;
                    stack.push_back(nt);
                }
            }
        }

        // Boundary edges of the cavity, oriented CCW as seen from inside.
        struct BEdge { int a, b, outer; };
        std::vector<BEdge> bnd;
        for (int t : cavity) {
            for (int k = 0; k < 3; ++k) {
                int nt = tris[t].nbr[k];
                if (nt < 0 || !in_cavity[nt]) {
                    int a = tris[t].v[(k + 1) % 3];
                    int b = tris[t].v[(k + 2) % 3];
                    bnd.push_back({a, b, nt});
                }
            }
        }

        for (int t : cavity) tris[t].alive = false;

        // Fan of new triangles from p.
        std::vector<int> fresh(bnd.size());
        for (std::size_t i = 0; i < bnd.size(); ++i) {
            fresh[i] = static_cast<int>(tris.size());
            DTri nt;
            nt.v = {pid, bnd[i].a, bnd[i].b};
            nt.nbr = {bnd[i].outer, -1, -1};
            tris.push_back(nt);
            if (bnd[i].outer >= 0) {
                DTri& o = tris[bnd[i].outer];
                for (int k = 0; k < 3; ++k) {
                    if ((o.v[(k + 1) % 3] == bnd[i].b && o.v[(k + 2) % 3] == bnd[i].a))
                        o.nbr[k] = fresh[i];
                }
            }
        }
        // Link the fan internally: edge (p, a) of triangle i matches edge (b, p)
        // of the triangle whose bnd edge ends at a.
        std::vector<std::pair<int, int>> start_of(bnd.size());
        for (std::size_t i = 0; i < bnd.size(); ++i) start_of[i] = {bnd[i].a, static_cast<int>(i)};
        std::sort(start_of.begin(), start_of.end());
        auto find_start = [&](int a) {
            auto it = std::lower_bound(start_of.begin(), start_of.end(), std::make_pair(a, -1));
            if (it == start_of.end() || it->first != a)
                throw MeshingFailed("cavity boundary not a closed loop");
            return it->second;
        };
        for (std::size_t i = 0; i < bnd.size(); ++i) {
            int j = find_start(bnd[i].b); // triangle j has edge (p, bnd[i].b)
            tris[fresh[i]].nbr[1] = fresh[j]; // edge (bnd[i].b, p) opposite v[1]=a
            tris[fresh[j]].nbr[2] = fresh[i]; // edge (p, a_j) opposite v[2]=b_j
        }
        hint = fresh.empty() ? first_alive() : fresh[0];
    }
};

} // namespace

std::vector<std::array<int, 3>> delaunay_triangulate(const std::vector<Vec2>& pts) {
    if (pts.size() < 3) throw MeshingFailed("need at least 3 points");
    Triangulator tr(pts);

    double xmin = pts[0].x, xmax = pts[0].x, ymin = pts[0].y, ymax = pts[0].y;
    for (const Vec2& p : pts) {
        xmin = std::min(xmin, p.x); xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y); ymax = std::max(ymax, p.y);
    }
    double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
    double span = std::max(xmax - xmin, ymax - ymin);
    if (span == 0.0) throw MeshingFailed("degenerate point set");
    double big = 64.0 * span;

    tr.all = pts;
    int s0 = static_cast<int>(tr.all.size());
    tr.all.push_back({cx - 2.0 * big, cy - big});
    tr.all.push_back({cx + 2.0 * big, cy - big});
    tr.all.push_back({cx, cy + 2.0 * big});
    DTri super;
    super.v = {s0, s0 + 1, s0 + 2};
    super.nbr = {-1, -1, -1};
    tr.tris.push_back(super);

    // Insert in a spatially coherent order so the walk stays short.
    std::vector<int> order(pts.size());
    std::iota(order.begin(), order.end(), 0);
    double cell = std::max(span / std::max(1.0, std::sqrt(static_cast<double>(pts.size()))), 1e-12);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        int ra = static_cast<int>((pts[a].y - ymin) / cell);
        int rb = static_cast<int>((pts[b].y - ymin) / cell);
        if (ra != rb) return ra < rb;
        // serpentine rows
        if (ra % 2 == 0) return pts[a].x < pts[b].x;
        return pts[a].x > pts[b].x;
    });

    for (int pid : order) tr.insert(pid);

    std::vector<std::array<int, 3>> out;
    out.reserve(tr.tris.size());
    for (const DTri& t : tr.tris) {
        if (!t.alive) continue;
        if (t.v[0] >= s0 || t.v[1] >= s0 || t.v[2] >= s0) continue;
        std::array<int, 3> tri = t.v;
        if (orient(pts[tri[0]], pts[tri[1]], pts[tri[2]]) < 0.0) std::swap(tri[1], tri[2]);
        out.push_back(tri);
    }
    return out;
}

} // namespace fsi
