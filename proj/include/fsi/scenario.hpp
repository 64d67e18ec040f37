#ifndef FSI_SCENARIO_HPP
#define FSI_SCENARIO_HPP

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "fsi/timestepper.hpp"
#include "fsi/toml.hpp"

namespace fsi {

struct ScenarioConfig {
    std::string name = "custom";

    GeometrySpec geometry;

    // physics
    PhysParams phys;
    double u_m = 0.0;     // cylinder peak inflow
    double u_s = 0.0;     // shear rate
    double u0 = 0.0;      // channel inflow scale
    double channel_w = 0.0;
    double ramp_t = 0.0;
    double stop_x = std::numeric_limits<double>::infinity();
    std::string bc_profile = "noslip"; // noslip | cylinder | shear | dld
    std::string initial_velocity = "zero"; // zero | bc

    // discretization
    double h = 0.1;
    double dt = 0.1;
    double t_end = 1.0;
    std::string scheme = "prk2";
    bool quad_bump = false;
    bool isoparametric = true;
    bool steady = false;
    double steady_tol = 1e-9;

    // solver
    double newton_tol_rel = 1e-8;
    double newton_tol_abs = 1e-12;
    int newton_max_iter = 20;
    std::string method = "gmres"; // gmres | direct
    std::string precond = "stokes"; // stokes | jacobian
    double gmres_tol = 1e-6;
    int gmres_restart = 200;
    int gmres_max_iter = 2000;
    double remesh_threshold = 0.25;
    bool remesh = true;

    // output
    std::string out_dir = "out";
    int cadence = 1;
    bool fields = false;

    static ScenarioConfig case_default(const std::string& name);
    static ScenarioConfig from_toml(const TomlTable& t);
    static ScenarioConfig load(const std::string& name_or_path);
    TomlTable to_toml() const;

    // "section.key=value" override, same validation as the file path.
    void set_override(const std::string& assignment);

    BcFn make_bc() const;
    Mesh make_mesh() const;
    CoupledState make_initial(const Mesh& mesh, const DofMap& dof) const;
    SimOptions sim_options() const;
    SolverOptions solver_options() const;
};

/// Replaces curved midpoints by straight averages (standard Taylor-Hood).
Mesh straightened(const Mesh& mesh);

Vec2 inflow_velocity(double y, double t, double u0, double W, double T);

/// Asymptotic wall-correction factor and the resulting terminal velocity
/// magnitude for a disk of diameter d settling in a channel of width D.
std::pair<double, double> wall_correction(double d, double D, double rho_s, double rho_f,
                                          double mu_f, double g);

double rms_error(const std::vector<std::pair<double, double>>& series,
                 const std::vector<std::pair<double, double>>& reference,
                 const std::vector<double>& sample_times);

struct ConvergenceRow {
    double param = 0.0;
    double error = 0.0;
    double order = std::numeric_limits<double>::quiet_NaN();
};

struct ConvergenceTable {
    std::string label;
    std::vector<ConvergenceRow> rows;
    void compute_orders(); // log2(e_k / e_{k+1}) for halved parameters
    double last_order() const;
};

/// Full trajectory of one run plus the terminal state.
struct RunResult {
    std::vector<TrajectoryRecord> records;
    CoupledState final_state;
    Mesh final_mesh;
    double wall_seconds = 0.0;
};

RunResult run_case(const ScenarioConfig& cfg);

/// Temporal self-convergence: `levels` runs halving dt from cfg.dt, measured
/// against a PRK2 reference at one further halving. The metric is the RMS
/// error of omega (shear), |U| (sedimentation), or x_c (dld_b1).
ConvergenceTable temporal_study(const ScenarioConfig& cfg, const std::string& scheme,
                                int levels);

struct CylinderStudy {
    ConvergenceTable iso_l2, iso_h1, straight_l2, straight_h1;
};

/// Spatial study for the steady cylinder flow: isoparametric and straight
/// variants against the isoparametric reference one halving finer.
CylinderStudy cylinder_study(const ScenarioConfig& cfg, int levels);

struct PrecondCell {
    double h = 0.0, dt = 0.0;
    double n_gmres = 0.0;
    int steps = 0;
};

std::vector<PrecondCell> precond_study(const ScenarioConfig& cfg, const std::vector<double>& hs,
                                       const std::vector<double>& dts, int n_steps = 10);

void write_trajectory_csv(const std::vector<TrajectoryRecord>& records, std::ostream& out);
void write_vtk(const Mesh& mesh, const DofMap& dof, const CoupledState& s, std::ostream& out);

/// L2 norm and H1 seminorm of a 2-component P2 nodal field.
std::pair<double, double> field_norms(const Mesh& mesh, const std::vector<double>& f);

} // namespace fsi

#endif
