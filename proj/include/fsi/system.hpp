#ifndef FSI_SYSTEM_HPP
#define FSI_SYSTEM_HPP

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "fsi/assemble.hpp"
#include "fsi/direct.hpp"
#include "fsi/gmres.hpp"
#include "fsi/mesh.hpp"
#include "fsi/sparse.hpp"

namespace fsi {

struct PhysParams {
    double rho_f = 1.0;
    double rho_s = 1.0;
    double mu_f = 1.0;
    Vec2 g{0.0, 0.0};
    double Re = 0.0; // reported characteristic Reynolds number
    bool convection = true;
    int quad_bump = 0;
};

struct CoupledState {
    std::vector<double> u;      // velocity coefficients, 2 per node
    std::vector<double> p;      // pressure coefficients on fluid vertices
    Vec2 U{0.0, 0.0};
    double omega = 0.0;
    std::vector<double> lambda; // multiplier coefficients, 2 per solid node
    Vec2 xc{0.0, 0.0};
    double t = 0.0;

    static CoupledState zero(const DofMap& dof, Vec2 xc = {0, 0});
};

/// Velocity boundary values by marker; must agree where markers meet.
using BcFn = std::function<Vec2(BMark, Vec2, double)>;

BcFn zero_bc();

/// The assembled saddle-point system for one implicit stage: the symmetric
/// generalized-Stokes part, the rho-weighted velocity mass (for the time
/// term), Dirichlet reduction metadata, and the preconditioner ingredients.
struct BlockSystem {
    const Mesh* mesh = nullptr;
    const DofMap* dof = nullptr;
    PhysParams params;
    double gamma_dt = 1.0;
    Vec2 xc{0, 0};

    SparseMatrix K_sym;             // full ordering, convection excluded
    SparseMatrix M_rho;             // nu x nu
    std::vector<double> f_gravity;  // nu
    std::vector<double> bc_values;  // full, nonzero at Dirichlet velocity dofs

    // The pressure and gauge unknowns are scaled by mu_f inside the algebraic
    // system so all rows carry comparable magnitudes; pack/unpack convert.
    double p_scale = 1.0;

    std::vector<int> keep;          // reduced -> full dof ids
    std::vector<int> full_to_red;   // -1 for eliminated dofs

    SparseMatrix Mp, Ap, PL;        // pressure mass/stiffness, multiplier Gram
    std::vector<double> p_row;      // integral of each pressure basis function
    double fluid_area = 0.0;

    int n_full() const { return dof->n_total(); }
    int n_reduced() const { return static_cast<int>(keep.size()); }

    std::vector<double> reduce(const std::vector<double>& full) const;
    void scatter(const std::vector<double>& red, std::vector<double>& full) const;

    std::vector<double> pack(const CoupledState& s) const;   // imposes bc values
    CoupledState unpack(const std::vector<double>& x, Vec2 xc, double t) const;
};

BlockSystem build_system(const Mesh& mesh, const DofMap& dof, const PhysParams& params,
                         double gamma_dt, Vec2 xc, const BcFn& bc, double t_bc);

enum class LinearMethod { gmres, direct };

struct SolverOptions {
    double newton_tol_rel = 1e-8;
    double newton_tol_abs = 1e-12;
    int newton_max_iter = 20;
    LinearMethod method = LinearMethod::gmres;
    double lin_tol = 1e-6;
    int gmres_restart = 200;
    int gmres_max_iter = 2000;
    // Preconditioner A block: the generalized-Stokes operator by default, or
    // the current full Jacobian (needed by the convection-dominated steady
    // cylinder runs).
    bool precond_full_jacobian = false;
};

struct NewtonReport {
    int iterations = 0;
    double initial_residual = 0.0;
    double final_residual = 0.0;
    std::vector<SolveStats> linear_stats;
    double gmres_avg() const {
        if (linear_stats.empty()) return 0.0;
        double s = 0.0;
        for (const auto& st : linear_stats) s += st.iterations;
        return s / static_cast<double>(linear_stats.size());
    }
};

class BlockPreconditioner; // precond.hpp

/// Reusable preconditioner slot for repeated solves against one system
/// (fixed-mesh pseudo-time stepping); newton_solve refreshes it in place
/// under its usual drift policy.
struct PrecondCache {
    std::shared_ptr<BlockPreconditioner> prec;
    std::vector<double> u_at_build;
};

/// Newton on Problem "generalized IMEX stage": the residual pairs the
/// momentum, continuity, and constraint rows of the monolithic DLM form with
/// mass weight 1/(gamma dt) against the estimated previous velocity wtilde
/// and mesh velocity field.
std::pair<CoupledState, NewtonReport>
newton_solve(const BlockSystem& sys, const std::vector<double>& wtilde,
             const std::vector<double>& mesh_velocity, const CoupledState& initial,
             const SolverOptions& opts, PrecondCache* cache = nullptr);

/// Residual of the stage equations at an arbitrary state (full ordering,
/// Dirichlet rows zeroed). Exposed for the weak-form oracle tests.
std::vector<double> stage_residual(const BlockSystem& sys, const std::vector<double>& wtilde,
                                   const std::vector<double>& mesh_velocity,
                                   const std::vector<double>& x_full);

struct TransientContext {
    const std::vector<double>* wtilde = nullptr;
    const std::vector<double>* mesh_velocity = nullptr;
    double gamma_dt = 0.0; // 0 disables the time term (steady evaluation)
};

/// Net hydrodynamic force and torque on the particle, with the hydrostatic
/// contribution of the fluid removed: the consistent traction evaluated from
/// the fluid-side momentum residual against rigid extension test fields.
std::pair<Vec2, double> hydrodynamic_force_and_torque(const CoupledState& s, const Mesh& mesh,
                                                      const DofMap& dof, const PhysParams& p,
                                                      const TransientContext& tc = {});

/// c^t pairing of the multiplier with unit rigid motions. The rigid test
/// equations of the monolithic system force this to the solver tolerance;
/// exposed to verify exactly that.
std::pair<Vec2, double> multiplier_resultant(const CoupledState& s, const Mesh& mesh,
                                             const DofMap& dof, const PhysParams& p,
                                             double gamma_dt);

} // namespace fsi

#endif
