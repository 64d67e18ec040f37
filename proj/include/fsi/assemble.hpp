#ifndef FSI_ASSEMBLE_HPP
#define FSI_ASSEMBLE_HPP

#include <array>
#include <functional>
#include <vector>

#include "fsi/fem.hpp"
#include "fsi/mesh.hpp"
#include "fsi/sparse.hpp"

namespace fsi {

/// Degree-of-freedom layout for the coupled saddle-point system.
///
/// Global ordering: velocity (2 per node, all nodes), then rigid (U_x, U_y,
/// omega) when a solid region exists, then pressure (P1 on fluid vertices),
/// the scalar mean-zero multiplier, and the DLM multiplier (2 per solid node).
struct DofMap {
    int n_nodes = 0;
    std::vector<int> p_of_vertex;  // vertex -> pressure dof, -1 outside fluid
    std::vector<int> vertex_of_p;
    std::vector<int> l_of_node;    // node -> multiplier pair index, -1 outside solid
    std::vector<int> node_of_l;
    bool rigid = false;

    // Velocity Dirichlet data (markers other than the interface).
    std::vector<std::uint8_t> node_dirichlet;          // per node
    std::vector<std::array<BMark, 2>> node_markers;    // up to two markers per node

    int nu() const { return 2 * n_nodes; }
    int np() const { return static_cast<int>(vertex_of_p.size()); }
    int nl() const { return 2 * static_cast<int>(node_of_l.size()); }
    int n_block1() const { return nu() + (rigid ? 3 : 0); }
    int n_total() const { return n_block1() + np() + 1 + nl(); }

    int u_dof(int node, int c) const { return 2 * node + c; }
    int U_dof(int c) const { return nu() + c; }
    int w_dof() const { return nu() + 2; }
    int p_dof(int k) const { return n_block1() + k; }
    int s_dof() const { return n_block1() + np(); }
    int l_dof(int k, int c) const { return n_block1() + np() + 1 + 2 * k + c; }
};

DofMap build_dofmap(const Mesh& mesh);

/// Per-element isoparametric geometry and basis data at quadrature points.
struct ElementData {
    int tri = -1;
    Region region = Region::fluid;
    bool curved = false;
    std::array<int, 6> node;                 // P2 node ids (3 vertices, 3 midpoints)
    std::vector<Vec2> x;                     // physical quadrature points
    std::vector<double> w;                   // quadrature weight * |det J|
    std::vector<std::array<double, 6>> phi;  // P2 values
    std::vector<std::array<Vec2, 6>> grad;   // P2 physical gradients
    std::vector<std::array<double, 3>> psi;  // P1 values
    std::vector<std::array<Vec2, 3>> gpsi;   // P1 physical gradients
};

/// Element sweep shared by all assembly routines. Quadrature degree is
/// selected per element: `deg_straight` on affine elements, `deg_curved` on
/// isoparametric ones. Throws NegativeJacobian on inverted geometry.
void for_each_element(const Mesh& mesh, int deg_straight, int deg_curved,
                      const std::function<void(const ElementData&)>& fn);

struct FormCoefficients {
    double rho_f = 1.0;
    double rho_s = 1.0;
    double mu_f = 1.0;
    double alpha_mass = 1.0;  // rho_f / (gamma dt): L2 weight in the coupling form
    double alpha_visc = 2.0;  // 2 mu_f: strain weight in the coupling form
    int quad_bump = 0;        // raises quadrature exactness by this amount (cap 6)

    double rho(Region r) const { return r == Region::solid ? rho_s : rho_f; }
};

/// Assembles the spec's bilinear forms on the velocity space (2N x 2N).
class Assembler {
public:
    Assembler(const Mesh& mesh, const DofMap& dof, FormCoefficients coef)
        : mesh_(mesh), dof_(dof), c_(coef) {}

    int deg(int base) const { return std::min(base + c_.quad_bump, 6); }

    SparseMatrix mass() const;       // integral of rho u.v over Omega
    SparseMatrix stiffness() const;  // 2 mu integral eps(u):eps(v) over Omega

    // Pressure rows: -integral_f q div(v); the mean-zero row is kept separate.
    SparseMatrix divergence() const;             // np x 2N
    std::vector<double> pressure_row() const;    // np entries: integral_f psi_q

    // c^t(mu, u) on multiplier rows vs velocity columns (nl x 2N).
    SparseMatrix coupling() const;
    // Rigid couplings of the c form: columns for U (2) and omega (1).
    // ru[k][c], rw[k]: c^t pairings of multiplier basis against e_c and perp(r).
    void coupling_rigid(Vec2 xc, std::vector<std::array<double, 2>>& ru,
                        std::vector<double>& rw) const;

    // Scalars of the rigid-rigid block: integral_s 1, integral_s r, integral_s |r|^2.
    void solid_moments(Vec2 xc, double& area, Vec2& first, double& second) const;

    SparseMatrix pressure_mass() const;       // np x np
    SparseMatrix pressure_stiffness() const;  // np x np, Neumann Laplacian
    SparseMatrix multiplier_gram() const;     // nl x nl: c^t on the multiplier space

    std::vector<double> gravity_load(Vec2 g) const;  // integral rho g.v over Omega

    // Convection N(u)(v) = integral rho ((u - V).grad u).v and its exact
    // Jacobian, accumulated into a matrix whose pattern holds all element
    // velocity couplings (the assembled system matrix qualifies).
    void convection(const std::vector<double>& u, const std::vector<double>& mesh_vel,
                    std::vector<double>* n_out, SparseMatrix* jac) const;

private:
    const Mesh& mesh_;
    const DofMap& dof_;
    FormCoefficients c_;
};

/// Every matrix and functional of one stage system, gathered in a single
/// element sweep. Entries agree with the per-form Assembler methods.
struct SystemForms {
    SparseMatrix mass;               // rho-weighted velocity mass
    SparseMatrix stiffness;
    SparseMatrix divergence;
    SparseMatrix pressure_mass;
    SparseMatrix pressure_stiffness;
    SparseMatrix multiplier_gram;
    SparseMatrix coupling;
    std::vector<double> p_row;
    std::vector<double> gravity;
    std::vector<std::array<double, 2>> ru;
    std::vector<double> rw;
    double solid_area = 0.0;
    Vec2 solid_first{0, 0};
    double solid_second = 0.0;
};

SystemForms assemble_system_forms(const Mesh& mesh, const DofMap& dof,
                                  const FormCoefficients& coef, Vec2 g, Vec2 xc);

/// Evaluates a P2 nodal field (ncomp interleaved components) at a physical
/// point of the given element, inverting the isoparametric map when curved.
std::vector<double> eval_p2_field(const Mesh& mesh, const std::vector<double>& f, int ncomp,
                                  int tri, const std::array<double, 3>& bary, Vec2 x);

/// Interpolates a P2 nodal field onto the nodes of another mesh.
std::vector<double> interpolate_p2(const Mesh& src, const std::vector<double>& f, int ncomp,
                                   const Mesh& dst);

} // namespace fsi

#endif
