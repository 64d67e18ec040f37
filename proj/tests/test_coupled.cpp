#include "doctest.h"

#include <cmath>
#include <random>

#include "fsi/assemble.hpp"
#include "fsi/precond.hpp"
#include "fsi/system.hpp"

using namespace fsi;

namespace {

Mesh unit_square_mesh(double h = 0.25) {
    GeometrySpec g;
    g.x_min = 0; g.x_max = 1; g.y_min = 0; g.y_max = 1;
    g.h = h;
    return generate_mesh(g);
}

Mesh particle_mesh(double h = 0.35) {
    GeometrySpec g;
    g.x_min = -3; g.x_max = 3; g.y_min = -2; g.y_max = 2;
    g.particle = Circle{{0.0, 0.0}, 0.9};
    g.h = h;
    return generate_mesh(g);
}

} // namespace

TEST_CASE("null data gives the zero solution in one Newton iteration") {
    Mesh m = particle_mesh();
    DofMap dof = build_dofmap(m);
    PhysParams pp;
    pp.convection = false;
    BlockSystem sys = build_system(m, dof, pp, 0.5, {0, 0}, zero_bc(), 0.0);
    SolverOptions so;
    std::vector<double> w(dof.nu(), 0.0), v;
    auto [s, rep] = newton_solve(sys, w, v, CoupledState::zero(dof), so);
    CHECK(rep.iterations <= 1);
    for (double x : s.u) CHECK(std::abs(x) < 1e-12);
    for (double x : s.p) CHECK(std::abs(x) < 1e-12);
    CHECK(std::abs(s.U.x) < 1e-12);
    CHECK(std::abs(s.omega) < 1e-12);
}

TEST_CASE("uniform Dirichlet flow is reproduced exactly") {
    Mesh m = unit_square_mesh();
    DofMap dof = build_dofmap(m);
    PhysParams pp; // convection on
    BcFn bc = [](BMark, Vec2, double) { return Vec2{1.0, 0.0}; };
    BlockSystem sys = build_system(m, dof, pp, 1.0, {0, 0}, bc, 0.0);
    std::vector<double> w(dof.nu(), 0.0), v;
    for (int n = 0; n < dof.n_nodes; ++n) w[2 * n] = 1.0;
    SolverOptions so;
    so.method = LinearMethod::direct; // exactness of the formulation, not of GMRES
    auto [s, rep] = newton_solve(sys, w, v, CoupledState::zero(dof), so);
    for (int n = 0; n < dof.n_nodes; ++n) {
        CHECK(std::abs(s.u[2 * n] - 1.0) < 1e-10);
        CHECK(std::abs(s.u[2 * n + 1]) < 1e-10);
    }
    for (double p : s.p) CHECK(std::abs(p) < 1e-8);
}

TEST_CASE("assembled forms match the spec's closed-form values on the unit square") {
    Mesh m = unit_square_mesh(0.2);
    DofMap dof = build_dofmap(m);
    FormCoefficients fc;
    Assembler as(m, dof, fc);

    // mass of u=(1,0) against v=(1,0) with rho=1 -> area
    SparseMatrix M = as.mass();
    std::vector<double> e1(dof.nu(), 0.0);
    for (int n = 0; n < dof.n_nodes; ++n) e1[2 * n] = 1.0;
    CHECK(dot(M.multiply(e1), e1) == doctest::Approx(1.0).epsilon(1e-12));

    // a(u,u) for u=(y,0), mu=1 -> 1
    SparseMatrix K = as.stiffness();
    std::vector<double> shear(dof.nu(), 0.0);
    for (int n = 0; n < dof.n_nodes; ++n) shear[2 * n] = m.nodes[n].y;
    CHECK(dot(K.multiply(shear), shear) == doctest::Approx(1.0).epsilon(1e-12));

    // b(1, (x,0)) = -1
    SparseMatrix B = as.divergence();
    std::vector<double> vx(dof.nu(), 0.0);
    for (int n = 0; n < dof.n_nodes; ++n) vx[2 * n] = m.nodes[n].x;
    std::vector<double> bv = B.multiply(vx);
    double total = 0.0;
    for (double x : bv) total += x;
    CHECK(total == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("matrix symmetry and rigid-motion annihilation") {
    Mesh m = particle_mesh();
    DofMap dof = build_dofmap(m);
    PhysParams pp;
    pp.rho_s = 1.2;
    BlockSystem sys = build_system(m, dof, pp, 0.7, {0, 0}, zero_bc(), 0.0);

    // Symmetry of the convection-free operator.
    const SparseMatrix& Ks = sys.K_sym;
    double scale = 0.0, dmax = 0.0;
    for (int i = 0; i < Ks.rows(); ++i)
        for (int k = Ks.row_ptr()[i]; k < Ks.row_ptr()[i + 1]; ++k) {
            scale = std::max(scale, std::abs(Ks.values()[k]));
            dmax = std::max(dmax, std::abs(Ks.values()[k] - Ks.coeff(Ks.col_idx()[k], i)));
        }
    CHECK(dmax < 1e-13 * scale);

    FormCoefficients fc;
    Assembler as(m, dof, fc);
    SparseMatrix K = as.stiffness();
    SparseMatrix B = as.divergence();

    // v = U + omega x r is annihilated by the strain and divergence forms.
    Vec2 U{0.3, -0.2};
    double om = 0.7;
    std::vector<double> rig(dof.nu());
    for (int n = 0; n < dof.n_nodes; ++n) {
        Vec2 x = m.nodes[n];
        rig[2 * n] = U.x - om * x.y;
        rig[2 * n + 1] = U.y + om * x.x;
    }
    std::vector<double> kr = K.multiply(rig);
    double knorm = 0.0;
    for (double x : kr) knorm = std::max(knorm, std::abs(x));
    CHECK(knorm < 1e-11);
    std::vector<double> br = B.multiply(rig);
    for (double x : br) CHECK(std::abs(x) < 1e-11);
}

TEST_CASE("c^t orthogonality of translations and rotations about the centroid") {
    Mesh m = particle_mesh();
    DofMap dof = build_dofmap(m);
    FormCoefficients fc;
    fc.alpha_mass = 2.5;
    Assembler as(m, dof, fc);
    Vec2 xc = m.region_centroid(Region::solid);
    double area;
    Vec2 first;
    double second;
    as.solid_moments(xc, area, first, second);
    // c(U, omega x r) = am * U . perp(first moment): zero about the centroid.
    CHECK(std::abs(first.x) < 1e-12 * area);
    CHECK(std::abs(first.y) < 1e-12 * area);
    CHECK(second > 0.0);
}

TEST_CASE("assembly agrees with a dense brute-force weak-form oracle") {
    // Hand-built 2-triangle mesh, straight elements.
    Mesh m;
    m.nodes = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    m.n_vertices = 4;
    m.tris.push_back({{0, 1, 2}, {-1, -1, -1}});
    m.tris.push_back({{0, 2, 3}, {-1, -1, -1}});
    m.region = {Region::fluid, Region::fluid};
    m.finalize_connectivity();
    m.edge_marker.assign(m.n_edges(), BMark::none);
    for (int e = 0; e < m.n_edges(); ++e)
        if (m.edges[e].t1 < 0) m.edge_marker[e] = BMark::outer_wall;

    DofMap dof = build_dofmap(m);
    FormCoefficients fc;
    fc.rho_f = 1.3;
    fc.mu_f = 0.7;
    Assembler as(m, dof, fc);
    SparseMatrix M = as.mass();
    SparseMatrix K = as.stiffness();
    SparseMatrix B = as.divergence();

    // Independent dense oracle: integrate basis pairs with its own quadrature
    // (duffy-type tensor rule) and its own shape functions.
    auto bary_basis = [](double x, double y, int i, double& v, Vec2& g) {
        double l[3] = {1.0 - x - y, x, y};
        Vec2 gl[3] = {{-1, -1}, {1, 0}, {0, 1}};
        if (i < 3) {
            v = l[i] * (2 * l[i] - 1);
            g = gl[i] * (4 * l[i] - 1);
        } else {
            int a = i - 3, b = (i - 2) % 3;
            v = 4 * l[a] * l[b];
            g = gl[a] * (4 * l[b]) + gl[b] * (4 * l[a]);
        }
    };
    // 16-point tensor Gauss rule mapped to the triangle by the Duffy transform.
    std::vector<Vec2> qp;
    std::vector<double> qw;
    const double gl4x[] = {0.069431844202974, 0.330009478207572, 0.669990521792428,
                           0.930568155797026};
    const double gl4w[] = {0.173927422568727, 0.326072577431273, 0.326072577431273,
                           0.173927422568727};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double u = gl4x[i], v = gl4x[j];
            qp.push_back({u * (1.0 - v), u * v});
            qw.push_back(gl4w[i] * gl4w[j] * u);
        }

    // Dense comparison of complete matrices against the oracle accumulation.
    int nu = dof.nu();
    std::vector<double> dM(nu * nu, 0.0), dK(nu * nu, 0.0);
    std::vector<double> dB(dof.np() * nu, 0.0);
    for (int t = 0; t < 2; ++t) {
        const auto& tr = m.tris[t];
        Vec2 p0 = m.nodes[tr.v[0]], p1 = m.nodes[tr.v[1]], p2 = m.nodes[tr.v[2]];
        double j00 = p1.x - p0.x, j01 = p2.x - p0.x, j10 = p1.y - p0.y, j11 = p2.y - p0.y;
        double det = j00 * j11 - j01 * j10;
        int nodes[6] = {tr.v[0], tr.v[1], tr.v[2], tr.mid[0], tr.mid[1], tr.mid[2]};
        for (std::size_t q = 0; q < qp.size(); ++q) {
            double w = qw[q] * det;
            double val[6];
            Vec2 pg[6];
            for (int i = 0; i < 6; ++i) {
                double v;
                Vec2 g;
                bary_basis(qp[q].x, qp[q].y, i, v, g);
                val[i] = v;
                pg[i] = {(j11 * g.x - j10 * g.y) / det, (-j01 * g.x + j00 * g.y) / det};
            }
            double pv[3] = {1.0 - qp[q].x - qp[q].y, qp[q].x, qp[q].y};
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) {
                    for (int c = 0; c < 2; ++c)
                        dM[(2 * nodes[i] + c) * nu + 2 * nodes[j] + c] +=
                            w * fc.rho_f * val[i] * val[j];
                    const Vec2 gi = pg[i], gj = pg[j];
                    dK[(2 * nodes[i]) * nu + 2 * nodes[j]] +=
                        w * 2 * fc.mu_f * (gi.x * gj.x + 0.5 * gi.y * gj.y);
                    dK[(2 * nodes[i] + 1) * nu + 2 * nodes[j] + 1] +=
                        w * 2 * fc.mu_f * (gi.y * gj.y + 0.5 * gi.x * gj.x);
                    dK[(2 * nodes[i]) * nu + 2 * nodes[j] + 1] +=
                        w * 2 * fc.mu_f * 0.5 * gi.y * gj.x;
                    dK[(2 * nodes[i] + 1) * nu + 2 * nodes[j]] +=
                        w * 2 * fc.mu_f * 0.5 * gi.x * gj.y;
                }
            for (int a = 0; a < 3; ++a)
                for (int j = 0; j < 6; ++j) {
                    int p = dof.p_of_vertex[tr.v[a]];
                    dB[p * nu + 2 * nodes[j]] += -w * pv[a] * pg[j].x;
                    dB[p * nu + 2 * nodes[j] + 1] += -w * pv[a] * pg[j].y;
                }
        }
    }
    double emax = 0.0;
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nu; ++j) {
            emax = std::max(emax, std::abs(dM[i * nu + j] - M.coeff(i, j)));
            emax = std::max(emax, std::abs(dK[i * nu + j] - K.coeff(i, j)));
        }
    for (int p = 0; p < dof.np(); ++p)
        for (int j = 0; j < nu; ++j)
            emax = std::max(emax, std::abs(dB[p * nu + j] - B.coeff(p, j)));
    CHECK(emax < 1e-12);
}

TEST_CASE("quadrature bump does not change straight-element assembly") {
    Mesh m = unit_square_mesh(0.3);
    DofMap dof = build_dofmap(m);
    FormCoefficients f0, f2;
    f2.quad_bump = 2;
    Assembler a0(m, dof, f0), a2(m, dof, f2);
    auto compare = [](const SparseMatrix& a, const SparseMatrix& b) {
        double scale = 0.0, d = 0.0;
        for (int i = 0; i < a.rows(); ++i)
            for (int k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
                scale = std::max(scale, std::abs(a.values()[k]));
                d = std::max(d, std::abs(a.values()[k] - b.coeff(i, a.col_idx()[k])));
            }
        return d / scale;
    };
    CHECK(compare(a0.mass(), a2.mass()) < 1e-10);
    CHECK(compare(a0.stiffness(), a2.stiffness()) < 1e-10);
}

TEST_CASE("doubling gamma_dt halves the mass-term weight exactly") {
    Mesh m = unit_square_mesh(0.3);
    DofMap dof = build_dofmap(m);
    PhysParams pp;
    BlockSystem s1 = build_system(m, dof, pp, 0.4, {0, 0}, zero_bc(), 0.0);
    BlockSystem s2 = build_system(m, dof, pp, 0.8, {0, 0}, zero_bc(), 0.0);
    // K1 - K2 = M_rho (1/0.4 - 1/0.8) on the velocity block.
    double w = 1.0 / 0.4 - 1.0 / 0.8;
    for (int n = 0; n < std::min(40, dof.nu()); ++n) {
        double d = s1.K_sym.coeff(n, n) - s2.K_sym.coeff(n, n);
        double expect = w * s1.M_rho.coeff(n, n);
        CHECK(d == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("interpolation reproduces P2 fields between meshes") {
    Mesh src = unit_square_mesh(0.3);
    Mesh dst = unit_square_mesh(0.22);

    // identical meshes: identity
    std::vector<double> f(2 * src.n_nodes());
    for (int n = 0; n < src.n_nodes(); ++n) {
        f[2 * n] = src.nodes[n].x * src.nodes[n].x; // quadratic
        f[2 * n + 1] = src.nodes[n].x + 2.0 * src.nodes[n].y; // linear
    }
    auto same = interpolate_p2(src, f, 2, src);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(same[i] == doctest::Approx(f[i]).epsilon(1e-12));

    auto moved = interpolate_p2(src, f, 2, dst);
    for (int n = 0; n < dst.n_nodes(); ++n) {
        CHECK(moved[2 * n] == doctest::Approx(dst.nodes[n].x * dst.nodes[n].x).epsilon(1e-11));
        CHECK(moved[2 * n + 1] ==
              doctest::Approx(dst.nodes[n].x + 2.0 * dst.nodes[n].y).epsilon(1e-11));
    }
}

TEST_CASE("multiplier resultant vanishes at a converged coupled solve") {
    Mesh m = particle_mesh();
    DofMap dof = build_dofmap(m);
    PhysParams pp;
    pp.mu_f = 0.01;
    pp.convection = false;
    double us = 0.02;
    BcFn bc = [us](BMark, Vec2 x, double) { return Vec2{us * x.y, 0.0}; };
    BlockSystem sys = build_system(m, dof, pp, 10.0, {0, 0}, bc, 0.0);
    std::vector<double> w(dof.nu(), 0.0), v;
    SolverOptions so;
    so.method = LinearMethod::direct;
    auto [s, rep] = newton_solve(sys, w, v, CoupledState::zero(dof), so);

    auto [Fm, Tm] = multiplier_resultant(s, m, dof, pp, 10.0);
    // The rigid test equations force these to the solver tolerance.
    double lam_scale = 0.0;
    for (double x : s.lambda) lam_scale = std::max(lam_scale, std::abs(x));
    CHECK(std::abs(Fm.x) < 1e-8 * std::max(1.0, lam_scale));
    CHECK(std::abs(Fm.y) < 1e-8 * std::max(1.0, lam_scale));
    CHECK(std::abs(Tm) < 1e-8 * std::max(1.0, lam_scale));

    // u = (us y, 0) has negative vorticity: the particle spins clockwise.
    CHECK(s.omega * us < 0.0);

    // Symmetric shear: vertical force negligible against the viscous scale.
    auto [F, T] = hydrodynamic_force_and_torque(s, m, dof, pp);
    CHECK(std::abs(F.y) < 1e-5);
    (void)T;
}

TEST_CASE("fused system forms equal the per-form assembly") {
    Mesh m = particle_mesh(0.4);
    DofMap dof = build_dofmap(m);
    FormCoefficients fc;
    fc.rho_f = 1.3;
    fc.rho_s = 2.1;
    fc.mu_f = 0.7;
    fc.alpha_mass = 3.7;
    Assembler as(m, dof, fc);
    Vec2 g{0.2, -9.8}, xc{0.0, 0.0};
    SystemForms f = assemble_system_forms(m, dof, fc, g, xc);

    auto compare = [](const SparseMatrix& a, const SparseMatrix& b) {
        REQUIRE(a.rows() == b.rows());
        double d = 0.0, scale = 1e-300;
        for (int i = 0; i < a.rows(); ++i)
            for (int k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
                scale = std::max(scale, std::abs(a.values()[k]));
                d = std::max(d, std::abs(a.values()[k] - b.coeff(i, a.col_idx()[k])));
            }
        return d / scale;
    };
    CHECK(compare(as.mass(), f.mass) < 1e-14);
    CHECK(compare(as.stiffness(), f.stiffness) < 1e-14);
    CHECK(compare(as.divergence(), f.divergence) < 1e-14);
    CHECK(compare(as.pressure_mass(), f.pressure_mass) < 1e-14);
    CHECK(compare(as.pressure_stiffness(), f.pressure_stiffness) < 1e-14);
    CHECK(compare(as.multiplier_gram(), f.multiplier_gram) < 1e-14);
    CHECK(compare(as.coupling(), f.coupling) < 1e-14);

    auto pr = as.pressure_row();
    for (int k = 0; k < dof.np(); ++k) CHECK(pr[k] == doctest::Approx(f.p_row[k]).epsilon(1e-14));
    auto gl = as.gravity_load(g);
    for (int i = 0; i < dof.nu(); ++i) CHECK(gl[i] == doctest::Approx(f.gravity[i]).epsilon(1e-14));

    std::vector<std::array<double, 2>> ru;
    std::vector<double> rw;
    as.coupling_rigid(xc, ru, rw);
    for (std::size_t k = 0; k < ru.size(); ++k) {
        CHECK(ru[k][0] == doctest::Approx(f.ru[k][0]).epsilon(1e-14));
        CHECK(rw[2 * k] == doctest::Approx(f.rw[2 * k]).epsilon(1e-13));
    }
    double area, second;
    Vec2 first;
    as.solid_moments(xc, area, first, second);
    CHECK(area == doctest::Approx(f.solid_area).epsilon(1e-14));
    CHECK(second == doctest::Approx(f.solid_second).epsilon(1e-14));
}
