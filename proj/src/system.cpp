#include "fsi/system.hpp"

#include <algorithm>
#include <cmath>

#include "fsi/precond.hpp"

namespace fsi {

CoupledState CoupledState::zero(const DofMap& dof, Vec2 xc) {
    CoupledState s;
    s.u.assign(dof.nu(), 0.0);
    s.p.assign(dof.np(), 0.0);
    s.lambda.assign(dof.nl(), 0.0);
    s.xc = xc;
    return s;
}

BcFn zero_bc() {
    return [](BMark, Vec2, double) { return Vec2{0.0, 0.0}; };
}

std::vector<double> BlockSystem::reduce(const std::vector<double>& full) const {
    std::vector<double> r(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) r[i] = full[keep[i]];
    return r;
}

void BlockSystem::scatter(const std::vector<double>& red, std::vector<double>& full) const {
    for (std::size_t i = 0; i < keep.size(); ++i) full[keep[i]] = red[i];
}

std::vector<double> BlockSystem::pack(const CoupledState& s) const {
    std::vector<double> x(n_full(), 0.0);
    std::copy(s.u.begin(), s.u.end(), x.begin());
    if (dof->rigid) {
        x[dof->U_dof(0)] = s.U.x;
        x[dof->U_dof(1)] = s.U.y;
        x[dof->w_dof()] = s.omega;
    }
    for (int k = 0; k < dof->np(); ++k) x[dof->p_dof(k)] = s.p[k] / p_scale;
    for (int k = 0; k < dof->nl(); ++k) x[dof->n_block1() + dof->np() + 1 + k] = s.lambda[k];
    // Impose the Dirichlet trace.
    for (int n = 0; n < dof->n_nodes; ++n)
        if (dof->node_dirichlet[n]) {
            x[dof->u_dof(n, 0)] = bc_values[dof->u_dof(n, 0)];
            x[dof->u_dof(n, 1)] = bc_values[dof->u_dof(n, 1)];
        }
    return x;
}

CoupledState BlockSystem::unpack(const std::vector<double>& x, Vec2 xc_, double t_) const {
    CoupledState s;
    s.u.assign(x.begin(), x.begin() + dof->nu());
    if (dof->rigid) {
        s.U = {x[dof->U_dof(0)], x[dof->U_dof(1)]};
        s.omega = x[dof->w_dof()];
    }
    s.p.resize(dof->np());
    for (int k = 0; k < dof->np(); ++k) s.p[k] = p_scale * x[dof->p_dof(k)];
    s.lambda.resize(dof->nl());
    for (int k = 0; k < dof->nl(); ++k) s.lambda[k] = x[dof->n_block1() + dof->np() + 1 + k];
    s.xc = xc_;
    s.t = t_;
    return s;
}

BlockSystem build_system(const Mesh& mesh, const DofMap& dof, const PhysParams& params,
                         double gamma_dt, Vec2 xc, const BcFn& bc, double t_bc) {
    if (!(gamma_dt > 0.0)) throw InvalidField("gamma_dt must be positive");
    BlockSystem sys;
    sys.mesh = &mesh;
    sys.dof = &dof;
    sys.params = params;
    sys.gamma_dt = gamma_dt;
    sys.xc = xc;

    FormCoefficients fc;
    fc.rho_f = params.rho_f;
    fc.rho_s = params.rho_s;
    fc.mu_f = params.mu_f;
    fc.alpha_mass = params.rho_f / gamma_dt;
    fc.alpha_visc = 2.0 * params.mu_f;
    fc.quad_bump = params.quad_bump;

    SystemForms forms = assemble_system_forms(mesh, dof, fc, params.g, xc);
    sys.M_rho = std::move(forms.mass);
    SparseMatrix K = std::move(forms.stiffness);
    SparseMatrix B_div = std::move(forms.divergence);
    sys.p_row = std::move(forms.p_row);
    sys.fluid_area = 0.0;
    for (double v : sys.p_row) sys.fluid_area += v;
    sys.f_gravity = std::move(forms.gravity);
    sys.Mp = std::move(forms.pressure_mass);
    sys.Ap = std::move(forms.pressure_stiffness);

    // Assemble the full symmetric operator.
    TripletBuffer tb;
    // Pattern-preserving: exact zeros stay so the convection Jacobian can
    // accumulate into the assembled sparsity later.
    const auto add_matrix = [&](const SparseMatrix& m, int row0, int col0, double scale) {
        const auto& rp = m.row_ptr();
        const auto& cj = m.col_idx();
        const auto& v = m.values();
        for (int i = 0; i < m.rows(); ++i)
            for (int k = rp[i]; k < rp[i + 1]; ++k)
                tb.add_always(row0 + i, col0 + cj[k], scale * v[k]);
    };

    // A block: mass/(gamma dt) + stiffness (+ augmentation below).
    add_matrix(sys.M_rho, 0, 0, 1.0 / gamma_dt);
    add_matrix(K, 0, 0, 1.0);

    // Pressure rows/columns.
    add_matrix(B_div, dof.p_dof(0), 0, 1.0);
    add_matrix(B_div.transposed(), 0, dof.p_dof(0), 1.0);

    // Mean-zero gauge: s couples to the pressure within block 2.
    for (int k = 0; k < dof.np(); ++k) {
        tb.add(dof.s_dof(), dof.p_dof(k), sys.p_row[k]);
        tb.add(dof.p_dof(k), dof.s_dof(), sys.p_row[k]);
    }

    if (dof.rigid) {
        sys.PL = forms.multiplier_gram;
        const SparseMatrix& C = forms.coupling; // nl x nu
        const auto& ru = forms.ru;
        const auto& rw = forms.rw;
        const double s_area = forms.solid_area;
        const Vec2 s_first = forms.solid_first;
        const double s_second = forms.solid_second;
        const double am = fc.alpha_mass;

        // Multiplier constraint rows c(mu, u - U - w x r) and their transpose.
        int l0 = dof.l_dof(0, 0);
        add_matrix(C, l0, 0, 1.0);
        add_matrix(C.transposed(), 0, l0, 1.0);
        for (std::size_t k = 0; k < dof.node_of_l.size(); ++k) {
            for (int c = 0; c < 2; ++c) {
                tb.add(l0 + 2 * k + c, dof.U_dof(c), -ru[k][c]);
                tb.add(dof.U_dof(c), l0 + 2 * k + c, -ru[k][c]);
                tb.add(l0 + 2 * k + c, dof.w_dof(), -rw[2 * k + c]);
                tb.add(dof.w_dof(), l0 + 2 * k + c, -rw[2 * k + c]);
            }
        }

        // Augmentation c(u - U - w x r, v - V - xi x r) in the A block:
        //   (u,v): the c Gram on velocity dofs over the solid region
        //   (u,V): -am \int_s u.V        (u,xi): -am \int_s u.perp(r)
        //   (U,V): am |Os| I             (w,xi): am \int |r|^2
        //   (U,xi): am \int perp(r)      (cross terms via first moment)
        const SparseMatrix& G = sys.PL; // same integrals, velocity indexing below
        {
            const auto& rp = G.row_ptr();
            const auto& cj = G.col_idx();
            const auto& v = G.values();
            for (int i = 0; i < G.rows(); ++i) {
                int ni = dof.node_of_l[i / 2];
                int ci = i % 2;
                for (int k = rp[i]; k < rp[i + 1]; ++k) {
                    int nj = dof.node_of_l[cj[k] / 2];
                    int cjc = cj[k] % 2;
                    tb.add(dof.u_dof(ni, ci), dof.u_dof(nj, cjc), v[k]);
                }
            }
        }
        for (std::size_t k = 0; k < dof.node_of_l.size(); ++k) {
            int n = dof.node_of_l[k];
            for (int c = 0; c < 2; ++c) {
                tb.add(dof.u_dof(n, c), dof.U_dof(c), -ru[k][c]);
                tb.add(dof.U_dof(c), dof.u_dof(n, c), -ru[k][c]);
                tb.add(dof.u_dof(n, c), dof.w_dof(), -rw[2 * k + c]);
                tb.add(dof.w_dof(), dof.u_dof(n, c), -rw[2 * k + c]);
            }
        }
        tb.add(dof.U_dof(0), dof.U_dof(0), am * s_area);
        tb.add(dof.U_dof(1), dof.U_dof(1), am * s_area);
        tb.add(dof.w_dof(), dof.w_dof(), am * s_second);
        // U-omega coupling through the first moment of the solid about xc:
        // c(V, xi x r) = am V . (xi perp(first)).
        Vec2 pf = perp(s_first);
        tb.add(dof.U_dof(0), dof.w_dof(), am * pf.x);
        tb.add(dof.w_dof(), dof.U_dof(0), am * pf.x);
        tb.add(dof.U_dof(1), dof.w_dof(), am * pf.y);
        tb.add(dof.w_dof(), dof.U_dof(1), am * pf.y);
    }

    sys.K_sym = tb.build(dof.n_total(), dof.n_total());

    // Symmetric congruence scaling of the pressure/gauge block.
    sys.p_scale = params.mu_f;
    {
        std::vector<double> scale(dof.n_total(), 1.0);
        for (int k = 0; k < dof.np(); ++k) scale[dof.p_dof(k)] = sys.p_scale;
        scale[dof.s_dof()] = sys.p_scale;
        auto& vals = sys.K_sym.values();
        const auto& rp = sys.K_sym.row_ptr();
        const auto& cj = sys.K_sym.col_idx();
        for (int i = 0; i < sys.K_sym.rows(); ++i)
            for (int k = rp[i]; k < rp[i + 1]; ++k) vals[k] *= scale[i] * scale[cj[k]];
    }

    // Dirichlet values; reject contradictory marker data.
    sys.bc_values.assign(dof.n_total(), 0.0);
    for (int n = 0; n < dof.n_nodes; ++n) {
        if (!dof.node_dirichlet[n]) continue;
        Vec2 x = mesh.nodes[n];
        Vec2 v = bc(dof.node_markers[n][0], x, t_bc);
        if (dof.node_markers[n][1] != BMark::none) {
            Vec2 v2 = bc(dof.node_markers[n][1], x, t_bc);
            double scale = std::max({1.0, std::abs(v.x), std::abs(v.y)});
            if ((v - v2).norm() > 1e-9 * scale)
                throw InconsistentDirichlet("markers disagree at a shared boundary node");
        }
        sys.bc_values[dof.u_dof(n, 0)] = v.x;
        sys.bc_values[dof.u_dof(n, 1)] = v.y;
    }

    sys.keep.clear();
    sys.full_to_red.assign(dof.n_total(), -1);
    for (int i = 0; i < dof.n_total(); ++i) {
        bool dirichlet = i < dof.nu() && dof.node_dirichlet[i / 2];
        if (!dirichlet) {
            sys.full_to_red[i] = static_cast<int>(sys.keep.size());
            sys.keep.push_back(i);
        }
    }
    return sys;
}

namespace {

struct ResidualEval {
    const BlockSystem& sys;
    const std::vector<double>& wtilde;
    const std::vector<double>& mesh_vel;
    Assembler as;

    ResidualEval(const BlockSystem& s, const std::vector<double>& w,
                 const std::vector<double>& mv)
        : sys(s), wtilde(w), mesh_vel(mv),
          as(*s.mesh, *s.dof,
             FormCoefficients{s.params.rho_f, s.params.rho_s, s.params.mu_f,
                              s.params.rho_f / s.gamma_dt, 2.0 * s.params.mu_f,
                              s.params.quad_bump}) {}

    // Full-ordering residual; Dirichlet rows zeroed.
    std::vector<double> full_residual(const std::vector<double>& x) const {
        std::vector<double> f = sys.K_sym.multiply(x);
        const DofMap& dof = *sys.dof;
        // time term rhs: (1/gdt) M rho wtilde; gravity.
        std::vector<double> mw(dof.nu(), 0.0);
        if (!wtilde.empty()) {
            sys.M_rho.multiply_add(wtilde, mw, 1.0 / sys.gamma_dt);
        }
        for (int i = 0; i < dof.nu(); ++i) f[i] -= mw[i] + sys.f_gravity[i];
        if (sys.params.convection) {
            std::vector<double> n;
            std::vector<double> uc(x.begin(), x.begin() + dof.nu());
            as.convection(uc, mesh_vel, &n, nullptr);
            for (int i = 0; i < dof.nu(); ++i) f[i] += n[i];
        }
        for (int n = 0; n < dof.n_nodes; ++n)
            if (dof.node_dirichlet[n]) {
                f[dof.u_dof(n, 0)] = 0.0;
                f[dof.u_dof(n, 1)] = 0.0;
            }
        return f;
    }

    // Full Jacobian: the symmetric operator plus the convection linearization
    // accumulated into its velocity-block pattern.
    SparseMatrix jacobian(const std::vector<double>& x) const {
        SparseMatrix j = sys.K_sym;
        std::vector<double> uc(x.begin(), x.begin() + sys.dof->nu());
        as.convection(uc, mesh_vel, nullptr, &j);
        return j;
    }
};

} // namespace

std::vector<double> stage_residual(const BlockSystem& sys, const std::vector<double>& wtilde,
                                   const std::vector<double>& mesh_velocity,
                                   const std::vector<double>& x_full) {
    ResidualEval re(sys, wtilde, mesh_velocity);
    return re.full_residual(x_full);
}

std::pair<CoupledState, NewtonReport>
newton_solve(const BlockSystem& sys, const std::vector<double>& wtilde,
             const std::vector<double>& mesh_velocity, const CoupledState& initial,
             const SolverOptions& opts, PrecondCache* cache) {
    if (opts.newton_max_iter < 1) throw InvalidField("newton_max_iter must be >= 1");
    ResidualEval re(sys, wtilde, mesh_velocity);

    std::vector<double> x = sys.pack(initial);
    NewtonReport rep;

    const bool have_conv = sys.params.convection;
    PrecondCache local_cache;
    if (cache == nullptr) cache = &local_cache;

    std::vector<double> r_full = re.full_residual(x);
    std::vector<double> r = sys.reduce(r_full);
    double r0 = norm2(r);
    rep.initial_residual = r0;
    double rn = r0;
    const double target = std::max(opts.newton_tol_abs, opts.newton_tol_rel * r0);

    while (rn > target && rep.iterations < opts.newton_max_iter) {
        SparseMatrix J_red = (have_conv ? re.jacobian(x) : sys.K_sym)
                                 .submatrix(sys.keep, sys.keep);

        std::vector<double> rhs(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) rhs[i] = -r[i];

        std::vector<double> delta;
        SolveStats stats;
        if (opts.method == LinearMethod::direct) {
            SparseDirect lu(J_red, SparseDirect::Kind::LU);
            delta = lu.solve(rhs);
            stats.iterations = 1;
            stats.converged = true;
        } else {
            {
                // Build (or refresh) the cached preconditioner. With the
                // full-Jacobian A block it is refreshed once the linearization
                // state has drifted materially since the last factorization.
                bool rebuild = cache->prec == nullptr;
                if (!rebuild && opts.precond_full_jacobian && have_conv) {
                    double drift = 0.0, scale = 1e-300;
                    for (int i = 0; i < sys.dof->nu(); ++i) {
                        drift = std::max(drift, std::abs(x[i] - cache->u_at_build[i]));
                        scale = std::max(scale, std::abs(x[i]));
                    }
                    rebuild = drift > 0.2 * scale;
                }
                if (rebuild) {
                    cache->prec = std::make_shared<BlockPreconditioner>(
                        sys, opts.precond_full_jacobian && have_conv ? &J_red : nullptr);
                    cache->u_at_build.assign(x.begin(), x.begin() + sys.dof->nu());
                }
            }
            const BlockPreconditioner* prec = cache->prec.get();
            LinearOp op = [&](const std::vector<double>& v) { return J_red.multiply(v); };
            GmresOptions gopts;
            // Inexact-Newton forcing: once the rhs is already near the Newton
            // target, solving it to lin_tol relative buys nothing and grinds
            // against the roundoff floor.
            double forcing = 0.01 * target / std::max(rn, 1e-300);
            gopts.tol_rel = std::clamp(forcing, opts.lin_tol, 1e-2);
            gopts.restart = opts.gmres_restart;
            gopts.max_iter = opts.gmres_max_iter;
            auto [d, st] = gmres(op, prec->as_op(), rhs, gopts);
            if (!st.converged)
                throw LinearSolveFailed("GMRES stalled at relative residual " +
                                        std::to_string(st.relative_residual));
            delta = std::move(d);
            stats = st;
        }
        rep.linear_stats.push_back(stats);

        // Damped update: backtrack on residual increase.
        double step = 1.0;
        std::vector<double> x_try = x;
        std::vector<double> r_try;
        double rn_try = 0.0;
        for (int bt = 0; bt < 9; ++bt) {
            x_try = x;
            for (std::size_t i = 0; i < sys.keep.size(); ++i)
                x_try[sys.keep[i]] += step * delta[i];
            r_try = sys.reduce(re.full_residual(x_try));
            rn_try = norm2(r_try);
            if (rn_try < rn || rn_try <= target) break;
            step *= 0.5;
        }
        if (rn_try >= rn && rn_try > target)
            throw NewtonDiverged("residual did not decrease after damping (" +
                                 std::to_string(rn) + " -> " + std::to_string(rn_try) + ")");
        x = std::move(x_try);
        r = std::move(r_try);
        rn = rn_try;
        ++rep.iterations;
    }
    if (rn > target)
        throw NewtonDiverged("Newton did not converge in " +
                             std::to_string(opts.newton_max_iter) + " iterations");
    rep.final_residual = rn;
    return {sys.unpack(x, sys.xc, 0.0), rep};
}

std::pair<Vec2, double> hydrodynamic_force_and_torque(const CoupledState& s, const Mesh& mesh,
                                                      const DofMap& dof, const PhysParams& p,
                                                      const TransientContext& tc) {
    // Consistent fluid-side traction against rigid extension test fields
    // (unit translations and the unit rotation about xc, supported on the
    // interface layer). The hydrostatic part of the pressure is removed so
    // the result excludes buoyancy.
    Vec2 F{0, 0};
    double T = 0.0;
    const bool transient = tc.gamma_dt > 0.0 && tc.wtilde != nullptr;
    for_each_element(mesh, 6, 6, [&](const ElementData& e) {
        if (e.region != Region::fluid) return;
        bool touches = false;
        for (int i = 0; i < 6; ++i) touches |= dof.l_of_node[e.node[i]] >= 0;
        if (!touches) return;

        for (std::size_t q = 0; q < e.w.size(); ++q) {
            Vec2 uq{0, 0}, wq{0, 0}, vq{0, 0};
            double gux = 0, guy = 0, gvx = 0, gvy = 0;
            double pq = 0.0;
            for (int i = 0; i < 6; ++i) {
                double ux = s.u[dof.u_dof(e.node[i], 0)];
                double uy = s.u[dof.u_dof(e.node[i], 1)];
                uq += Vec2{ux, uy} * e.phi[q][i];
                gux += ux * e.grad[q][i].x;
                guy += ux * e.grad[q][i].y;
                gvx += uy * e.grad[q][i].x;
                gvy += uy * e.grad[q][i].y;
                if (transient) {
                    wq += Vec2{(*tc.wtilde)[dof.u_dof(e.node[i], 0)],
                               (*tc.wtilde)[dof.u_dof(e.node[i], 1)]} * e.phi[q][i];
                    if (tc.mesh_velocity && !tc.mesh_velocity->empty())
                        vq += Vec2{(*tc.mesh_velocity)[dof.u_dof(e.node[i], 0)],
                                   (*tc.mesh_velocity)[dof.u_dof(e.node[i], 1)]} * e.phi[q][i];
                }
            }
            for (int a = 0; a < 3; ++a) {
                int pd = dof.p_of_vertex[e.node[a]];
                if (pd >= 0) pq += s.p[pd] * e.psi[q][a];
            }
            pq -= p.rho_f * p.g.dot(e.x[q]); // subtract the hydrostatic field

            Vec2 inertia{0, 0};
            if (transient) inertia += (uq - wq) * (1.0 / tc.gamma_dt);
            if (p.convection) {
                Vec2 aq = uq - vq;
                inertia += Vec2{aq.x * gux + aq.y * guy, aq.x * gvx + aq.y * gvy};
            }

            // Test fields: E_c = e_c and E_w = perp(x - xc) at interface nodes.
            for (int i = 0; i < 6; ++i) {
                if (dof.l_of_node[e.node[i]] < 0) continue;
                const double phi = e.phi[q][i];
                const Vec2 g = e.grad[q][i];
                Vec2 Ew = perp(mesh.nodes[e.node[i]] - s.xc);
                // per-component contributions of the momentum residual
                double exx = g.x, eyy_x = 0.5 * g.y;      // eps(phi e_x)
                double eyy = g.y, exx_y = 0.5 * g.x;      // eps(phi e_y)
                double epsu_xx = gux, epsu_yy = gvy, epsu_xy = 0.5 * (guy + gvx);
                double visc_x = 2.0 * p.mu_f * (epsu_xx * exx + 2.0 * epsu_xy * eyy_x);
                double visc_y = 2.0 * p.mu_f * (epsu_yy * eyy + 2.0 * epsu_xy * exx_y);
                double div_x = g.x, div_y = g.y;
                double rx = e.w[q] * (p.rho_f * inertia.x * phi + visc_x - pq * div_x);
                double ry = e.w[q] * (p.rho_f * inertia.y * phi + visc_y - pq * div_y);
                F.x -= rx;
                F.y -= ry;
                T -= Ew.x * rx + Ew.y * ry;
            }
        }
    });
    return {F, T};
}

std::pair<Vec2, double> multiplier_resultant(const CoupledState& s, const Mesh& mesh,
                                             const DofMap& dof, const PhysParams& p,
                                             double gamma_dt) {
    Vec2 F{0, 0};
    double T = 0.0;
    const double am = p.rho_f / gamma_dt;
    for_each_element(mesh, 4, 6, [&](const ElementData& e) {
        if (e.region != Region::solid) return;
        for (std::size_t q = 0; q < e.w.size(); ++q) {
            Vec2 lam{0, 0};
            for (int i = 0; i < 6; ++i) {
                int li = dof.l_of_node[e.node[i]];
                lam += Vec2{s.lambda[2 * li], s.lambda[2 * li + 1]} * e.phi[q][i];
            }
            F += lam * (am * e.w[q]);
            T += am * e.w[q] * lam.dot(perp(e.x[q] - s.xc));
        }
    });
    return {F, T};
}

} // namespace fsi
