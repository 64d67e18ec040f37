#include "fsi/timestepper.hpp"

#include <algorithm>
#include <cmath>

namespace fsi {

ButcherPair ButcherPair::prk1() {
    ButcherPair bp;
    bp.a_imp = {{0, 0}, {0, 1}};
    bp.b_imp = {0, 1};
    bp.a_exp = {{0, 0}, {1, 0}};
    bp.b_exp = {1, 0};
    bp.c = {0, 1};
    bp.gamma = 1.0;
    bp.delta = 1.0;
    bp.beta0 = 1.0;
    bp.beta_star = 0.0;
    bp.c0 = 1.0;
    bp.c_star = 0.0;
    bp.order = 1;
    return bp;
}

ButcherPair ButcherPair::prk2() {
    ButcherPair bp;
    const double g = 1.0 - 1.0 / std::sqrt(2.0);
    const double d = 1.0 - 1.0 / (2.0 * g);
    bp.a_imp = {{0, 0, 0}, {0, g, 0}, {0, 1.0 - g, g}};
    bp.b_imp = {0, 1.0 - g, g};
    bp.a_exp = {{0, 0, 0}, {g, 0, 0}, {d, 1.0 - d, 0}};
    bp.b_exp = {d, 1.0 - d, 0};
    bp.c = {0, g, 1.0};
    bp.gamma = g;
    bp.delta = d;
    bp.beta0 = 1.0 - (1.0 - g) / g;
    bp.beta_star = (1.0 - g) / g;
    bp.c0 = d;
    bp.c_star = 1.0 - d;
    bp.order = 2;
    return bp;
}

void ButcherPair::verify() const {
    const std::size_t s = c.size();
    auto check = [](bool ok, const char* what) {
        if (!ok) throw InvalidField(std::string("tableau check failed: ") + what);
    };
    check(a_imp.size() == s && a_exp.size() == s, "stage counts");
    for (std::size_t i = 0; i < s; ++i) {
        double ri = 0.0, re = 0.0;
        for (std::size_t j = 0; j < s; ++j) {
            ri += a_imp[i][j];
            re += a_exp[i][j];
            if (j > i) check(a_imp[i][j] == 0.0, "implicit tableau not lower triangular");
            if (j >= i) check(a_exp[i][j] == 0.0, "explicit tableau not strictly lower");
        }
        check(std::abs(ri - c[i]) < 1e-14, "implicit row sum");
        check(std::abs(re - c[i]) < 1e-14, "explicit row sum");
    }
    double sb = 0.0, sbe = 0.0, sbc = 0.0, sbec = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
        sb += b_imp[i];
        sbe += b_exp[i];
        sbc += b_imp[i] * c[i];
        sbec += b_exp[i] * c[i];
    }
    check(std::abs(sb - 1.0) < 1e-14, "implicit weights sum");
    check(std::abs(sbe - 1.0) < 1e-14, "explicit weights sum");
    if (order >= 2) {
        check(std::abs(sbc - 0.5) < 1e-14, "implicit second-order condition");
        check(std::abs(sbec - 0.5) < 1e-14, "explicit second-order condition");
    }
}

namespace {

double solve_scalar_stage(double base, double aii_dt, const std::function<double(double)>& f,
                          double guess) {
    // y = base + aii_dt f(y) by Newton with a numerical derivative.
    double y = guess;
    for (int it = 0; it < 60; ++it) {
        double r = y - base - aii_dt * f(y);
        if (std::abs(r) < 1e-15 * std::max(1.0, std::abs(y))) return y;
        double eps = 1e-7 * std::max(1.0, std::abs(y));
        double fp = (f(y + eps) - f(y - eps)) / (2.0 * eps);
        double dr = 1.0 - aii_dt * fp;
        y -= r / dr;
    }
    return y;
}

} // namespace

double dirk_scalar_step(const ButcherPair& bp, double y, double dt,
                        const std::function<double(double)>& f) {
    const std::size_t s = bp.c.size();
    std::vector<double> k(s, 0.0);
    for (std::size_t i = 0; i < s; ++i) {
        double base = y;
        for (std::size_t j = 0; j < i; ++j) base += dt * bp.a_imp[i][j] * k[j];
        double aii = bp.a_imp[i][i];
        double yi = aii == 0.0 ? base : solve_scalar_stage(base, dt * aii, f, base);
        k[i] = f(yi);
    }
    double out = y;
    for (std::size_t i = 0; i < s; ++i) out += dt * bp.b_imp[i] * k[i];
    return out;
}

double prk_scalar_step(const ButcherPair& bp, double y, double dt,
                       const std::function<double(double)>& f) {
    if (bp.order == 1) {
        return solve_scalar_stage(y, dt, f, y);
    }
    const double gdt = bp.gamma * dt;
    double ystar = solve_scalar_stage(y, gdt, f, y);
    double wtilde = bp.beta0 * y + bp.beta_star * ystar;
    return solve_scalar_stage(wtilde, gdt, f, ystar);
}

std::pair<CoupledState, NewtonReport>
fsi_solve(const std::vector<double>& wtilde, const std::vector<double>& mesh_vel, double gamma,
          const Mesh& moved_mesh, const DofMap& dof, double dt, const PhysParams& params,
          const BcFn& bc, double t_bc, Vec2 xc, const CoupledState& initial,
          const SolverOptions& solver) {
    BlockSystem sys = build_system(moved_mesh, dof, params, gamma * dt, xc, bc, t_bc);
    return newton_solve(sys, wtilde, mesh_vel, initial, solver);
}

Simulation::Simulation(Mesh mesh, CoupledState initial, SimOptions opt)
    : mesh_(std::move(mesh)), state_(std::move(initial)), opt_(std::move(opt)) {
    opt_.scheme.verify();
    dof_ = build_dofmap(mesh_);
    if (state_.u.empty()) state_ = CoupledState::zero(dof_, state_.xc);
}

TrajectoryRecord Simulation::step_prk1() {
    const double dt = opt_.dt;
    const bool moving = mesh_.has_solid();
    TrajectoryRecord rec;

    const Mesh* solve_mesh = &mesh_;
    MeshMotion mm;
    std::vector<double> vmesh;
    Vec2 xc_new = state_.xc;
    if (moving) {
        mm = mesh_update(mesh_, state_.U, state_.omega, state_.xc, 1.0, dt);
        vmesh = mesh_velocity(mm.moved, mesh_, dt);
        solve_mesh = &mm.moved;
        xc_new = mm.xc_moved;
    }

    CoupledState next;
    NewtonReport rep;
    if (!moving && opt_.steady) {
        // Pseudo-steady on a fixed mesh with static boundary data: assemble
        // once, keep the preconditioner across pseudo-steps.
        if (!static_sys_)
            static_sys_ = build_system(mesh_, dof_, opt_.params, dt, xc_new, opt_.bc,
                                       state_.t + dt);
        std::tie(next, rep) =
            newton_solve(*static_sys_, state_.u, vmesh, state_, opt_.solver, &static_prec_);
    } else {
        std::tie(next, rep) = fsi_solve(state_.u, vmesh, 1.0, *solve_mesh, dof_, dt, opt_.params,
                                        opt_.bc, state_.t + dt, xc_new, state_, opt_.solver);
    }

    last_increment_ = 0.0;
    for (std::size_t i = 0; i < next.u.size(); ++i)
        last_increment_ = std::max(last_increment_, std::abs(next.u[i] - state_.u[i]));

    next.t = state_.t + dt;
    next.xc = xc_new;
    state_ = std::move(next);
    if (moving) mesh_ = std::move(mm.moved);

    rec.newton_iters = rep.iterations;
    rec.gmres_iters_avg = rep.gmres_avg();
    return rec;
}

TrajectoryRecord Simulation::step_prk2() {
    const double dt = opt_.dt;
    const ButcherPair& bp = opt_.scheme;
    const bool moving = mesh_.has_solid();
    TrajectoryRecord rec;

    // Stage 1 at t* = t + gamma dt.
    const Mesh* mesh1 = &mesh_;
    MeshMotion mm1;
    std::vector<double> v1;
    Vec2 xc1 = state_.xc;
    if (moving) {
        mm1 = mesh_update(mesh_, state_.U, state_.omega, state_.xc, bp.gamma, dt);
        v1 = mesh_velocity(mm1.moved, mesh_, bp.gamma * dt);
        mesh1 = &mm1.moved;
        xc1 = mm1.xc_moved;
    }
    auto [star, rep1] = fsi_solve(state_.u, v1, bp.gamma, *mesh1, dof_, dt, opt_.params,
                                  opt_.bc, state_.t + bp.gamma * dt, xc1, state_, opt_.solver);

    // Stage 2 at t + dt from the step-start configuration.
    Vec2 Uss = state_.U * bp.c0 + star.U * bp.c_star;
    double wss = bp.c0 * state_.omega + bp.c_star * star.omega;
    const Mesh* mesh2 = &mesh_;
    MeshMotion mm2;
    std::vector<double> v2;
    Vec2 xc2 = state_.xc;
    if (moving) {
        mm2 = mesh_update(mesh_, Uss, wss, state_.xc, 1.0, dt);
        v2 = mesh_velocity(mm2.moved, mesh_, dt);
        mesh2 = &mm2.moved;
        xc2 = mm2.xc_moved;
    }
    std::vector<double> wtilde(state_.u.size());
    for (std::size_t i = 0; i < wtilde.size(); ++i)
        wtilde[i] = bp.beta0 * state_.u[i] + bp.beta_star * star.u[i];

    CoupledState guess = star;
    auto [next, rep2] = fsi_solve(wtilde, v2, bp.gamma, *mesh2, dof_, dt, opt_.params,
                                  opt_.bc, state_.t + dt, xc2, guess, opt_.solver);

    last_increment_ = 0.0;
    for (std::size_t i = 0; i < next.u.size(); ++i)
        last_increment_ = std::max(last_increment_, std::abs(next.u[i] - state_.u[i]));

    next.t = state_.t + dt;
    next.xc = xc2;
    state_ = std::move(next);
    if (moving) mesh_ = std::move(mm2.moved);

    rec.newton_iters = rep1.iterations + rep2.iterations;
    double n_lin = static_cast<double>(rep1.linear_stats.size() + rep2.linear_stats.size());
    if (n_lin > 0) {
        double s = 0.0;
        for (const auto& st : rep1.linear_stats) s += st.iterations;
        for (const auto& st : rep2.linear_stats) s += st.iterations;
        rec.gmres_iters_avg = s / n_lin;
    }
    return rec;
}

TrajectoryRecord Simulation::step() {
    TrajectoryRecord rec;
    try {
        rec = opt_.scheme.order >= 2 ? step_prk2() : step_prk1();
    } catch (const MeshTangled& e) {
        throw StepRejected(e.what());
    }
    ++step_count_;

    if (opt_.remesh_enabled && mesh_.has_solid()) {
        RemeshResult rr = maybe_remesh(mesh_, state_, opt_.geometry, opt_.remesh_threshold);
        if (rr.remeshed) {
            mesh_ = std::move(rr.mesh);
            state_ = std::move(rr.state);
            dof_ = build_dofmap(mesh_);
            rec.remeshed = true;
        }
    }

    rec.step = step_count_;
    rec.t = state_.t;
    rec.xc = state_.xc;
    rec.U = state_.U;
    rec.omega = state_.omega;
    rec.min_quality = quality(mesh_).min_radius_ratio;
    return rec;
}

std::vector<TrajectoryRecord> Simulation::run(
    const std::function<void(const TrajectoryRecord&, const Simulation&)>& on_record) {
    std::vector<TrajectoryRecord> records;
    TrajectoryRecord init;
    init.step = 0;
    init.t = state_.t;
    init.xc = state_.xc;
    init.U = state_.U;
    init.omega = state_.omega;
    init.min_quality = quality(mesh_).min_radius_ratio;
    records.push_back(init);
    if (on_record) on_record(init, *this);

    const double t0 = state_.t;
    int n = 0;
    while (true) {
        if (!opt_.steady && t0 + (n + 1) * opt_.dt > opt_.t_end + 1e-12 * opt_.dt) break;
        if (n >= opt_.max_steps) break;
        if (state_.xc.x > opt_.stop_x) break;
        TrajectoryRecord rec;
        try {
            rec = step();
        } catch (const FsiError& e) {
            throw SimulationAborted("step " + std::to_string(n + 1) + ": " + e.what());
        }
        ++n;
        rec.t = t0 + n * opt_.dt; // exact multiples for sampling
        state_.t = rec.t;
        records.push_back(rec);
        if (on_record) on_record(rec, *this);
        if (opt_.steady && last_increment_ < opt_.steady_tol) break;
    }
    return records;
}

} // namespace fsi
