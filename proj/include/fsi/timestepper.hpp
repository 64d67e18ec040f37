#ifndef FSI_TIMESTEPPER_HPP
#define FSI_TIMESTEPPER_HPP

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "fsi/ale.hpp"
#include "fsi/mesh.hpp"
#include "fsi/precond.hpp"
#include "fsi/system.hpp"

namespace fsi {

/// Implicit/explicit tableau pair with the leading zero stage, plus the
/// derived second-order scheme scalars.
struct ButcherPair {
    std::vector<std::vector<double>> a_imp, a_exp;
    std::vector<double> b_imp, b_exp, c;
    double gamma = 1.0;
    double delta = 0.0;
    double beta0 = 0.0;
    double beta_star = 0.0;
    double c0 = 0.0;
    double c_star = 0.0;
    int order = 1;

    static ButcherPair prk1();
    static ButcherPair prk2();

    // Row-sum and order conditions; throws InvalidField on violation.
    void verify() const;
};

/// Generic DIRK step for the scalar surrogate y' = f(y), driven directly by
/// the implicit tableau. Exercises the same coefficients as the FSI stepper.
double dirk_scalar_step(const ButcherPair& bp, double y, double dt,
                        const std::function<double(double)>& f);

/// The same step written in the semi-implicit algorithm form (stage solves
/// with the beta/c combinations); must agree with dirk_scalar_step.
double prk_scalar_step(const ButcherPair& bp, double y, double dt,
                       const std::function<double(double)>& f);

struct TrajectoryRecord {
    int step = 0;
    double t = 0.0;
    Vec2 xc{0, 0};
    Vec2 U{0, 0};
    double omega = 0.0;
    int newton_iters = 0;
    double gmres_iters_avg = 0.0;
    double min_quality = 1.0;
    bool remeshed = false;
};

struct SimOptions {
    ButcherPair scheme = ButcherPair::prk1();
    double dt = 0.1;
    double t_end = 1.0;
    double stop_x = std::numeric_limits<double>::infinity();
    bool steady = false;          // pseudo-time stepping to steady state
    double steady_tol = 1e-9;
    int max_steps = 1 << 26;
    double remesh_threshold = 0.25;
    bool remesh_enabled = true;
    PhysParams params;
    SolverOptions solver;
    BcFn bc = zero_bc();
    GeometrySpec geometry;        // remesh template
};

/// FSI solution operator: one implicit stage solve on the given (already
/// moved) mesh with estimated previous velocity wtilde and mesh velocity.
std::pair<CoupledState, NewtonReport>
fsi_solve(const std::vector<double>& wtilde, const std::vector<double>& mesh_vel, double gamma,
          const Mesh& moved_mesh, const DofMap& dof, double dt, const PhysParams& params,
          const BcFn& bc, double t_bc, Vec2 xc, const CoupledState& initial,
          const SolverOptions& solver);

class Simulation {
public:
    Simulation(Mesh mesh, CoupledState initial, SimOptions opt);

    // Advances one step with the configured scheme (including remeshing);
    // returns the record for the accepted step.
    TrajectoryRecord step();

    std::vector<TrajectoryRecord> run(
        const std::function<void(const TrajectoryRecord&, const Simulation&)>& on_record = {});

    const Mesh& mesh() const { return mesh_; }
    const CoupledState& state() const { return state_; }
    const DofMap& dofmap() const { return dof_; }
    const SimOptions& options() const { return opt_; }
    double last_increment() const { return last_increment_; }

private:
    TrajectoryRecord step_prk1();
    TrajectoryRecord step_prk2();

    Mesh mesh_;
    CoupledState state_;
    SimOptions opt_;
    DofMap dof_;
    int step_count_ = 0;
    double last_increment_ = std::numeric_limits<double>::infinity();
    // Fixed-mesh runs reuse the assembled system and preconditioner.
    std::optional<BlockSystem> static_sys_;
    PrecondCache static_prec_;
};

} // namespace fsi

#endif
