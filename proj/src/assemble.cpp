#include "fsi/assemble.hpp"

#include <algorithm>
#include <cmath>

namespace fsi {

DofMap build_dofmap(const Mesh& mesh) {
    DofMap d;
    d.n_nodes = mesh.n_nodes();
    d.p_of_vertex.assign(mesh.n_vertices, -1);
    d.l_of_node.assign(mesh.n_nodes(), -1);
    d.node_dirichlet.assign(mesh.n_nodes(), 0);
    d.node_markers.assign(mesh.n_nodes(), {BMark::none, BMark::none});

    for (int t = 0; t < mesh.n_tris(); ++t) {
        const Mesh::Tri& tr = mesh.tris[t];
        if (mesh.region[t] == Region::fluid) {
            for (int k = 0; k < 3; ++k)
                if (d.p_of_vertex[tr.v[k]] < 0) {
                    d.p_of_vertex[tr.v[k]] = static_cast<int>(d.vertex_of_p.size());
                    d.vertex_of_p.push_back(tr.v[k]);
                }
        } else {
            d.rigid = true;
            for (int k = 0; k < 3; ++k) {
                for (int n : {tr.v[k], tr.mid[k]})
                    if (d.l_of_node[n] < 0) {
                        d.l_of_node[n] = static_cast<int>(d.node_of_l.size());
                        d.node_of_l.push_back(n);
                    }
            }
        }
    }

    auto add_marker = [&](int node, BMark m) {
        d.node_dirichlet[node] = 1;
        auto& ms = d.node_markers[node];
        if (ms[0] == BMark::none || ms[0] == m) ms[0] = m;
        else if (ms[1] == BMark::none || ms[1] == m) ms[1] = m;
    };
    for (int e = 0; e < mesh.n_edges(); ++e) {
        BMark m = mesh.edge_marker[e];
        if (m == BMark::none || m == BMark::interface_edge) continue;
        add_marker(mesh.edges[e].a, m);
        add_marker(mesh.edges[e].b, m);
        add_marker(mesh.edges[e].mid, m);
    }
    return d;
}

void for_each_element(const Mesh& mesh, int deg_straight, int deg_curved,
                      const std::function<void(const ElementData&)>& fn) {
    const QuadratureRule& qs = quadrature(deg_straight);
    const QuadratureRule& qc = quadrature(deg_curved);

    // Reference-basis tables per rule.
    struct Tables {
        std::vector<std::array<double, 6>> phi;
        std::vector<std::array<Vec2, 6>> gphi;
        std::vector<std::array<double, 3>> psi;
        std::vector<std::array<Vec2, 3>> gpsi;
    };
    auto make_tables = [](const QuadratureRule& qr) {
        Tables t;
        for (const Vec2& p : qr.points) {
            BasisEval b2 = basis_eval(2, p);
            BasisEval b1 = basis_eval(1, p);
            std::array<double, 6> phi;
            std::array<Vec2, 6> gphi;
            for (int i = 0; i < 6; ++i) { phi[i] = b2.values[i]; gphi[i] = b2.gradients[i]; }
            std::array<double, 3> psi;
            std::array<Vec2, 3> gpsi;
            for (int i = 0; i < 3; ++i) { psi[i] = b1.values[i]; gpsi[i] = b1.gradients[i]; }
            t.phi.push_back(phi);
            t.gphi.push_back(gphi);
            t.psi.push_back(psi);
            t.gpsi.push_back(gpsi);
        }
        return t;
    };
    Tables ts = make_tables(qs);
    Tables tc = make_tables(qc);

    ElementData ed;
    for (int t = 0; t < mesh.n_tris(); ++t) {
        const Mesh::Tri& tr = mesh.tris[t];
        ed.tri = t;
        ed.region = mesh.region[t];
        ed.node = {tr.v[0], tr.v[1], tr.v[2], tr.mid[0], tr.mid[1], tr.mid[2]};

        std::array<Vec2, 6> xs;
        for (int i = 0; i < 6; ++i) xs[i] = mesh.nodes[ed.node[i]];
        double scale = (xs[1] - xs[0]).norm() + (xs[2] - xs[0]).norm();
        bool curved = false;
        for (int k = 0; k < 3; ++k) {
            Vec2 avg = (xs[k] + xs[(k + 1) % 3]) * 0.5;
            if ((xs[3 + k] - avg).norm() > 1e-12 * scale) curved = true;
        }
        ed.curved = curved;
        const QuadratureRule& qr = curved ? qc : qs;
        const Tables& tb = curved ? tc : ts;
        const std::size_t nq = qr.points.size();
        ed.x.resize(nq);
        ed.w.resize(nq);
        ed.phi.resize(nq);
        ed.grad.resize(nq);
        ed.psi.resize(nq);
        ed.gpsi.resize(nq);

        for (std::size_t q = 0; q < nq; ++q) {
            Vec2 x{0, 0};
            double j00 = 0, j01 = 0, j10 = 0, j11 = 0;
            for (int i = 0; i < 6; ++i) {
                x += xs[i] * tb.phi[q][i];
                j00 += xs[i].x * tb.gphi[q][i].x;
                j01 += xs[i].x * tb.gphi[q][i].y;
                j10 += xs[i].y * tb.gphi[q][i].x;
                j11 += xs[i].y * tb.gphi[q][i].y;
            }
            double det = j00 * j11 - j01 * j10;
            if (det <= 0.0)
                throw NegativeJacobian("element " + std::to_string(t) +
                                       " has non-positive Jacobian");
            // J^{-T} columns for gradient transforms.
            double i00 = j11 / det, i01 = -j10 / det, i10 = -j01 / det, i11 = j00 / det;
            ed.x[q] = x;
            ed.w[q] = qr.weights[q] * det;
            ed.phi[q] = tb.phi[q];
            for (int i = 0; i < 6; ++i)
                ed.grad[q][i] = {i00 * tb.gphi[q][i].x + i01 * tb.gphi[q][i].y,
                                 i10 * tb.gphi[q][i].x + i11 * tb.gphi[q][i].y};
            ed.psi[q] = tb.psi[q];
            for (int i = 0; i < 3; ++i)
                ed.gpsi[q][i] = {i00 * tb.gpsi[q][i].x + i01 * tb.gpsi[q][i].y,
                                 i10 * tb.gpsi[q][i].x + i11 * tb.gpsi[q][i].y};
        }
        fn(ed);
    }
}

SparseMatrix Assembler::mass() const {
    TripletBuffer tb;
    tb.reserve(static_cast<std::size_t>(mesh_.n_tris()) * 72);
    for_each_element(mesh_, deg(4), deg(6), [&](const ElementData& e) {
        const double rho = c_.rho(e.region);
        for (std::size_t q = 0; q < e.w.size(); ++q) {
            const double w = rho * e.w[q];
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) {
                    double v = w * e.phi[q][i] * e.phi[q][j];
                    tb.add(dof_.u_dof(e.node[i], 0), dof_.u_dof(e.node[j], 0), v);
                    tb.add(dof_.u_dof(e.node[i], 1), dof_.u_dof(e.node[j], 1), v);
                }
        }
    });
    return tb.build(dof_.nu(), dof_.nu());
}

namespace {

// Accumulates 2 mu eps(u):eps(v) for vector P2 bases: block (i,c) x (j,d).
inline void add_strain_block(TripletBuffer& tb, const DofMap& dof, const std::array<int, 6>& node,
                             const std::array<Vec2, 6>& g, double w2mu) {
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            const Vec2 gi = g[i], gj = g[j];
            // eps(phi_i e_c):eps(phi_j e_d) contractions
            double xx = gi.x * gj.x + 0.5 * gi.y * gj.y;
            double yy = gi.y * gj.y + 0.5 * gi.x * gj.x;
            double xy = 0.5 * gi.y * gj.x;
            double yx = 0.5 * gi.x * gj.y;
            tb.add(dof.u_dof(node[i], 0), dof.u_dof(node[j], 0), w2mu * xx);
            tb.add(dof.u_dof(node[i], 1), dof.u_dof(node[j], 1), w2mu * yy);
            tb.add(dof.u_dof(node[i], 0), dof.u_dof(node[j], 1), w2mu * xy);
            tb.add(dof.u_dof(node[i], 1), dof.u_dof(node[j], 0), w2mu * yx);
        }
}

} // namespace

SparseMatrix Assembler::stiffness() const {
    TripletBuffer tb;
    tb.reserve(static_cast<std::size_t>(mesh_.n_tris()) * 144);
    for_each_element(mesh_, deg(4), deg(6), [&](const ElementData& e) {
        for (std::size_t q = 0; q < e.w.size(); ++q)
            add_strain_block(tb, dof_, e.node, e.grad[q], 2.0 * c_.mu_f * e.w[q]);
    });
    return tb.build(dof_.nu(), dof_.nu());
}

SparseMatrix Assembler::divergence() const {
    TripletBuffer tb;
    for_each_element(mesh_, deg(4), deg(6), [&](const ElementData& e) {
        if (e.region != Region::fluid) return;
        for (std::size_t q = 0; q < e.w.size(); ++q)
            for (int a = 0; a < 3; ++a) {
                int p = dof_.p_of_vertex[e.node[a]];
                double wq = -e.w[q] * e.psi[q][a];
                for (int j = 0; j < 6; ++j) {
                    tb.add(p, dof_.u_dof(e.node[j], 0), wq * e.grad[q][j].x);
                    tb.add(p, dof_.u_dof(e.node[j], 1), wq * e.grad[q][j].y);
                }
            }
    });
    return tb.build(dof_.np(), dof_.nu());
}

std::vector<double> Assembler::pressure_row() const {
    std::vector<double> r(dof_.np(), 0.0);
    for_each_element(mesh_, deg(4), deg(6), [&](const ElementData& e) {
        if (e.region != Region::fluid) return;
        for (std::size_t q = 0; q < e.w.size(); ++q)
            for (int a = 0; a < 3; ++a) r[dof_.p_of_vertex[e.node[a]]] += e.w[q] * e.psi[q][a];
    });
    return r;
}

SparseMatrix Assembler::coupling() const {
    TripletBuffer tb;
    for_each_element(mesh_, deg(4), deg(6), [&](const ElementData& e) {
        if (e.region != Region::solid) return;
        for (std::size_t q = 0; q < e.w.size(); ++q) {
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) {
                    int li = dof_.l_of_node[e.node[i]];
                    double v = c_.alpha_mass * e.w[q] * e.phi[q][i] * e.phi[q][j];
                    tb.add(2 * li, dof_.u_dof(e.node[j], 0), v);
                    tb.add(2 * li + 1, dof_.u_dof(e.node[j], 1), v);
                }
            // strain part, written into the multiplier row/velocity col layout
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) {
                    const Vec2 gi = e.grad[q][i], gj = e.grad[q][j];
                    double w2 = c_.alpha_visc * e.w[q];
                    int li = dof_.l_of_node[e.node[i]];
                    tb.add(2 * li, dof_.u_dof(e.node[j], 0), w2 * (gi.x * gj.x + 0.5 * gi.y * gj.y));
                    tb.add(2 * li + 1, dof_.u_dof(e.node[j], 1), w2 * (gi.y * gj.y + 0.5 * gi.x * gj.x));
                    tb.add(2 * li, dof_.u_dof(e.node[j], 1), w2 * (0.5 * gi.y * gj.x));
                    tb.add(2 * li + 1, dof_.u_dof(e.node[j], 0), w2 * (0.5 * gi.x * gj.y));
                }
        }
    });
    return tb.build(dof_.nl(), dof_.nu());
}

void Assembler::coupling_rigid(Vec2 xc, std::vector<std::array<double, 2>>& ru,
                               std::vector<double>& rw) const {
    // Only the L2 part of c^t survives against rigid fields (their strain
    // vanishes pointwise). Per multiplier dof (node k, component c):
    //   ru[k][c] = am \int_s phi_k          pairing of (phi_k e_c) with e_c
    //   rw[2k+c] = am \int_s phi_k perp(r)_c
    ru.assign(dof_.node_of_l.size(), {0.0, 0.0});
    rw.assign(dof_.nl(), 0.0);
    for_each_element(mesh_, deg(4), deg(6), [&](const ElementData& e) {
        if (e.region != Region::solid) return;
        for (std::size_t q = 0; q < e.w.size(); ++q) {
            Vec2 pr = perp(e.x[q] - xc);
            for (int i = 0; i < 6; ++i) {
                int li = dof_.l_of_node[e.node[i]];
                double v = c_.alpha_mass * e.w[q] * e.phi[q][i];
                ru[li][0] += v;
                ru[li][1] += v;
                rw[2 * li] += v * pr.x;
                rw[2 * li + 1] += v * pr.y;
            }
        }
    });
}

void Assembler::solid_moments(Vec2 xc, double& area, Vec2& first, double& second) const {
    area = 0.0;
    first = {0, 0};
    second = 0.0;
    for_each_element(mesh_, deg(4), deg(6), [&](const ElementData& e) {
        if (e.region != Region::solid) return;
        for (std::size_t q = 0; q < e.w.size(); ++q) {
            area += e.w[q];
            first += (e.x[q] - xc) * e.w[q];
            second += (e.x[q] - xc).norm2() * e.w[q];
        }
    });
}

SparseMatrix Assembler::pressure_mass() const {
    TripletBuffer tb;
    for_each_element(mesh_, deg(4), deg(6), [&](const ElementData& e) {
        if (e.region != Region::fluid) return;
        for (std::size_t q = 0; q < e.w.size(); ++q)
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    tb.add(dof_.p_of_vertex[e.node[a]], dof_.p_of_vertex[e.node[b]],
                           e.w[q] * e.psi[q][a] * e.psi[q][b]);
    });
    return tb.build(dof_.np(), dof_.np());
}

SparseMatrix Assembler::pressure_stiffness() const {
    TripletBuffer tb;
    for_each_element(mesh_, deg(4), deg(6), [&](const ElementData& e) {
        if (e.region != Region::fluid) return;
        for (std::size_t q = 0; q < e.w.size(); ++q)
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    tb.add(dof_.p_of_vertex[e.node[a]], dof_.p_of_vertex[e.node[b]],
                           e.w[q] * e.gpsi[q][a].dot(e.gpsi[q][b]));
    });
    return tb.build(dof_.np(), dof_.np());
}

SparseMatrix Assembler::multiplier_gram() const {
    TripletBuffer tb;
    for_each_element(mesh_, deg(4), deg(6), [&](const ElementData& e) {
        if (e.region != Region::solid) return;
        for (std::size_t q = 0; q < e.w.size(); ++q)
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) {
                    int li = dof_.l_of_node[e.node[i]];
                    int lj = dof_.l_of_node[e.node[j]];
                    double vm = c_.alpha_mass * e.w[q] * e.phi[q][i] * e.phi[q][j];
                    const Vec2 gi = e.grad[q][i], gj = e.grad[q][j];
                    double w2 = c_.alpha_visc * e.w[q];
                    tb.add(2 * li, 2 * lj, vm + w2 * (gi.x * gj.x + 0.5 * gi.y * gj.y));
                    tb.add(2 * li + 1, 2 * lj + 1, vm + w2 * (gi.y * gj.y + 0.5 * gi.x * gj.x));
                    tb.add(2 * li, 2 * lj + 1, w2 * (0.5 * gi.y * gj.x));
                    tb.add(2 * li + 1, 2 * lj, w2 * (0.5 * gi.x * gj.y));
                }
    });
    return tb.build(dof_.nl(), dof_.nl());
}

std::vector<double> Assembler::gravity_load(Vec2 g) const {
    std::vector<double> f(dof_.nu(), 0.0);
    if (g.x == 0.0 && g.y == 0.0) return f;
    for_each_element(mesh_, deg(4), deg(6), [&](const ElementData& e) {
        const double rho = c_.rho(e.region);
        for (std::size_t q = 0; q < e.w.size(); ++q)
            for (int i = 0; i < 6; ++i) {
                double v = rho * e.w[q] * e.phi[q][i];
                f[dof_.u_dof(e.node[i], 0)] += v * g.x;
                f[dof_.u_dof(e.node[i], 1)] += v * g.y;
            }
    });
    return f;
}

void Assembler::convection(const std::vector<double>& u, const std::vector<double>& mesh_vel,
                           std::vector<double>* n_out, SparseMatrix* jac) const {
    if (static_cast<int>(u.size()) != dof_.nu())
        throw InvalidField("velocity field size mismatch");
    const bool have_mv = !mesh_vel.empty();
    if (have_mv && mesh_vel.size() != u.size())
        throw InvalidField("mesh velocity field size mismatch");
    if (n_out) n_out->assign(dof_.nu(), 0.0);

    // The integrand is degree 5 on straight elements; degree 6 keeps it exact.
    for_each_element(mesh_, deg(6), deg(6), [&](const ElementData& e) {
        const double rho = c_.rho(e.region);
        for (std::size_t q = 0; q < e.w.size(); ++q) {
            Vec2 uq{0, 0}, aq{0, 0}; // velocity and advecting velocity u - V
            double gux = 0, guy = 0, gvx = 0, gvy = 0; // grad u components
            for (int i = 0; i < 6; ++i) {
                double ux = u[dof_.u_dof(e.node[i], 0)];
                double uy = u[dof_.u_dof(e.node[i], 1)];
                uq += Vec2{ux, uy} * e.phi[q][i];
                gux += ux * e.grad[q][i].x;
                guy += ux * e.grad[q][i].y;
                gvx += uy * e.grad[q][i].x;
                gvy += uy * e.grad[q][i].y;
                if (have_mv)
                    aq -= Vec2{mesh_vel[dof_.u_dof(e.node[i], 0)],
                               mesh_vel[dof_.u_dof(e.node[i], 1)]} * e.phi[q][i];
            }
            aq += uq;
            const double w = rho * e.w[q];
            Vec2 conv{aq.x * gux + aq.y * guy, aq.x * gvx + aq.y * gvy};
            if (n_out)
                for (int i = 0; i < 6; ++i) {
                    (*n_out)[dof_.u_dof(e.node[i], 0)] += w * e.phi[q][i] * conv.x;
                    (*n_out)[dof_.u_dof(e.node[i], 1)] += w * e.phi[q][i] * conv.y;
                }
            if (jac) {
                // d/du [ (a . grad)u ] = (a . grad) du + (du . grad) u
                for (int i = 0; i < 6; ++i) {
                    const double wphi = w * e.phi[q][i];
                    const int rix = dof_.u_dof(e.node[i], 0), riy = rix + 1;
                    for (int j = 0; j < 6; ++j) {
                        double adv = aq.dot(e.grad[q][j]);
                        double pj = e.phi[q][j];
                        const int cjx = dof_.u_dof(e.node[j], 0), cjy = cjx + 1;
                        jac->add_at(rix, cjx, wphi * (adv + pj * gux));
                        jac->add_at(rix, cjy, wphi * pj * guy);
                        jac->add_at(riy, cjx, wphi * pj * gvx);
                        jac->add_at(riy, cjy, wphi * (adv + pj * gvy));
                    }
                }
            }
        }
    });
}

SystemForms assemble_system_forms(const Mesh& mesh, const DofMap& dof,
                                  const FormCoefficients& c, Vec2 g, Vec2 xc) {
    SystemForms out;
    TripletBuffer tb_m, tb_k, tb_b, tb_mp, tb_ap, tb_pl, tb_c;
    const std::size_t nt = static_cast<std::size_t>(mesh.n_tris());
    tb_m.reserve(nt * 72);
    tb_k.reserve(nt * 144);
    tb_b.reserve(nt * 36);
    out.p_row.assign(dof.np(), 0.0);
    out.gravity.assign(dof.nu(), 0.0);
    out.ru.assign(dof.node_of_l.size(), {0.0, 0.0});
    out.rw.assign(dof.nl(), 0.0);
    const bool with_gravity = g.x != 0.0 || g.y != 0.0;
    const int ds = std::min(4 + c.quad_bump, 6);
    const int dc = 6;

    for_each_element(mesh, ds, dc, [&](const ElementData& e) {
        const double rho = c.rho(e.region);
        const bool solid = e.region == Region::solid;
        for (std::size_t q = 0; q < e.w.size(); ++q) {
            const double w = e.w[q];
            for (int i = 0; i < 6; ++i) {
                const double phi_i = e.phi[q][i];
                const Vec2 gi = e.grad[q][i];
                const int uix = dof.u_dof(e.node[i], 0), uiy = uix + 1;
                if (with_gravity) {
                    out.gravity[uix] += rho * w * phi_i * g.x;
                    out.gravity[uiy] += rho * w * phi_i * g.y;
                }
                for (int j = 0; j < 6; ++j) {
                    const double phi_j = e.phi[q][j];
                    const Vec2 gj = e.grad[q][j];
                    const int ujx = dof.u_dof(e.node[j], 0), ujy = ujx + 1;
                    const double mv = rho * w * phi_i * phi_j;
                    tb_m.add(uix, ujx, mv);
                    tb_m.add(uiy, ujy, mv);
                    const double w2mu = 2.0 * c.mu_f * w;
                    const double kxx = gi.x * gj.x + 0.5 * gi.y * gj.y;
                    const double kyy = gi.y * gj.y + 0.5 * gi.x * gj.x;
                    const double kxy = 0.5 * gi.y * gj.x;
                    const double kyx = 0.5 * gi.x * gj.y;
                    // The full component pattern is kept even through exact
                    // zeros: the convection Jacobian accumulates into it.
                    tb_k.add_always(uix, ujx, w2mu * kxx);
                    tb_k.add_always(uiy, ujy, w2mu * kyy);
                    tb_k.add_always(uix, ujy, w2mu * kxy);
                    tb_k.add_always(uiy, ujx, w2mu * kyx);
                    if (solid) {
                        const int li = dof.l_of_node[e.node[i]];
                        const int lj = dof.l_of_node[e.node[j]];
                        const double cm = c.alpha_mass * w * phi_i * phi_j;
                        const double wv = c.alpha_visc * w;
                        tb_pl.add(2 * li, 2 * lj, cm + wv * kxx);
                        tb_pl.add(2 * li + 1, 2 * lj + 1, cm + wv * kyy);
                        tb_pl.add(2 * li, 2 * lj + 1, wv * kxy);
                        tb_pl.add(2 * li + 1, 2 * lj, wv * kyx);
                        tb_c.add(2 * li, ujx, cm + wv * kxx);
                        tb_c.add(2 * li + 1, ujy, cm + wv * kyy);
                        tb_c.add(2 * li, ujy, wv * kxy);
                        tb_c.add(2 * li + 1, ujx, wv * kyx);
                    }
                }
            }
            if (!solid) {
                for (int a = 0; a < 3; ++a) {
                    const int p = dof.p_of_vertex[e.node[a]];
                    const double psi_a = e.psi[q][a];
                    out.p_row[p] += w * psi_a;
                    for (int j = 0; j < 6; ++j) {
                        tb_b.add(p, dof.u_dof(e.node[j], 0), -w * psi_a * e.grad[q][j].x);
                        tb_b.add(p, dof.u_dof(e.node[j], 1), -w * psi_a * e.grad[q][j].y);
                    }
                    for (int b = 0; b < 3; ++b) {
                        const int pb = dof.p_of_vertex[e.node[b]];
                        tb_mp.add(p, pb, w * psi_a * e.psi[q][b]);
                        tb_ap.add(p, pb, w * e.gpsi[q][a].dot(e.gpsi[q][b]));
                    }
                }
            } else {
                const Vec2 pr = perp(e.x[q] - xc);
                out.solid_area += w;
                out.solid_first += (e.x[q] - xc) * w;
                out.solid_second += (e.x[q] - xc).norm2() * w;
                for (int i = 0; i < 6; ++i) {
                    const int li = dof.l_of_node[e.node[i]];
                    const double v = c.alpha_mass * w * e.phi[q][i];
                    out.ru[li][0] += v;
                    out.ru[li][1] += v;
                    out.rw[2 * li] += v * pr.x;
                    out.rw[2 * li + 1] += v * pr.y;
                }
            }
        }
    });
    out.mass = tb_m.build(dof.nu(), dof.nu());
    out.stiffness = tb_k.build(dof.nu(), dof.nu());
    out.divergence = tb_b.build(dof.np(), dof.nu());
    out.pressure_mass = tb_mp.build(dof.np(), dof.np());
    out.pressure_stiffness = tb_ap.build(dof.np(), dof.np());
    out.multiplier_gram = tb_pl.build(dof.nl(), dof.nl());
    out.coupling = tb_c.build(dof.nl(), dof.nu());
    return out;
}

std::vector<double> eval_p2_field(const Mesh& mesh, const std::vector<double>& f, int ncomp,
                                  int tri, const std::array<double, 3>& bary, Vec2 x) {
    const Mesh::Tri& tr = mesh.tris[tri];
    std::array<int, 6> node = {tr.v[0], tr.v[1], tr.v[2], tr.mid[0], tr.mid[1], tr.mid[2]};
    std::array<Vec2, 6> xs;
    for (int i = 0; i < 6; ++i) xs[i] = mesh.nodes[node[i]];

    Vec2 ref{bary[1], bary[2]};
    // Invert the quadratic map by Newton; on straight elements the first
    // residual already vanishes.
    for (int it = 0; it < 30; ++it) {
        BasisEval be = basis_eval(2, ref);
        Vec2 fx{0, 0};
        double j00 = 0, j01 = 0, j10 = 0, j11 = 0;
        for (int i = 0; i < 6; ++i) {
            fx += xs[i] * be.values[i];
            j00 += xs[i].x * be.gradients[i].x;
            j01 += xs[i].x * be.gradients[i].y;
            j10 += xs[i].y * be.gradients[i].x;
            j11 += xs[i].y * be.gradients[i].y;
        }
        Vec2 r = fx - x;
        double det = j00 * j11 - j01 * j10;
        if (det == 0.0) break;
        Vec2 d{(j11 * r.x - j01 * r.y) / det, (-j10 * r.x + j00 * r.y) / det};
        ref -= d;
        if (d.norm() < 1e-14) break;
    }

    BasisEval be = basis_eval(2, ref);
    std::vector<double> out(ncomp, 0.0);
    for (int i = 0; i < 6; ++i)
        for (int c = 0; c < ncomp; ++c) out[c] += f[ncomp * node[i] + c] * be.values[i];
    return out;
}

std::vector<double> interpolate_p2(const Mesh& src, const std::vector<double>& f, int ncomp,
                                   const Mesh& dst) {
    if (static_cast<int>(f.size()) != ncomp * src.n_nodes())
        throw InvalidField("field size does not match source mesh");
    std::vector<double> out(static_cast<std::size_t>(ncomp) * dst.n_nodes(), 0.0);
    for (int n = 0; n < dst.n_nodes(); ++n) {
        auto [tri, bary] = src.locate(dst.nodes[n], 1e-9);
        std::vector<double> v = eval_p2_field(src, f, ncomp, tri, bary, dst.nodes[n]);
        for (int c = 0; c < ncomp; ++c) out[ncomp * n + c] = v[c];
    }
    return out;
}

} // namespace fsi
