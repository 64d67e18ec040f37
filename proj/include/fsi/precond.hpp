#ifndef FSI_PRECOND_HPP
#define FSI_PRECOND_HPP

#include "fsi/direct.hpp"
#include "fsi/system.hpp"

namespace fsi {

/// Block-triangular preconditioner for the reduced saddle-point system:
/// exact solves with the symmetric velocity/rigid block, the pressure block
/// approximated Cahouet-Chabard style (mu M^-1 + rho/(gamma dt) A^+), and the
/// multiplier block by its c^t Gram matrix. Stateless after construction.
class BlockPreconditioner {
public:
    // When a reduced Jacobian is supplied, its velocity/rigid block is
    // factored (LU) instead of the symmetric generalized-Stokes block.
    explicit BlockPreconditioner(const BlockSystem& sys,
                                 const SparseMatrix* jacobian_reduced = nullptr);

    std::vector<double> apply(const std::vector<double>& r_reduced) const;

    LinearOp as_op() const {
        return [this](const std::vector<double>& r) { return apply(r); };
    }

private:
    std::vector<double> apply_schur_inv(const std::vector<double>& r2) const;
    std::vector<double> apply_ap_plus(const std::vector<double>& rp) const;

    int n_red_ = 0;
    int n1_ = 0;                 // reduced block-1 size
    int np_ = 0, nl_ = 0;
    std::vector<int> b1_, b2_;   // reduced positions of the two blocks
    SparseMatrix B_, Bt_;
    SparseDirect A_fact_, Mp_fact_, Ap_fact_, PL_fact_;
    std::vector<double> p_row_;
    double fluid_area_ = 1.0;
    double mu_ = 1.0;
    double kappa_ = 0.0;         // rho_f / (gamma dt)
};

} // namespace fsi

#endif
