#include "fsi/precond.hpp"

#include <cmath>

namespace fsi {

BlockPreconditioner::BlockPreconditioner(const BlockSystem& sys,
                                         const SparseMatrix* jacobian_reduced) {
    const DofMap& dof = *sys.dof;
    n_red_ = sys.n_reduced();
    np_ = dof.np();
    nl_ = dof.nl();
    // Schur scales carry the congruence factor of the pressure block.
    const double ps2 = sys.p_scale * sys.p_scale;
    mu_ = sys.params.mu_f / ps2;
    kappa_ = sys.params.rho_f / sys.gamma_dt / ps2;
    p_row_ = sys.p_row;
    fluid_area_ = sys.fluid_area;

    // Reduced positions of the two blocks. Block 2 dofs are never Dirichlet,
    // so their reduced order is (p..., s, lambda...).
    for (int i = 0; i < n_red_; ++i) {
        if (sys.keep[i] < dof.n_block1()) b1_.push_back(i);
        else b2_.push_back(i);
    }
    n1_ = static_cast<int>(b1_.size());

    SparseMatrix K_red = sys.K_sym.submatrix(sys.keep, sys.keep);
    B_ = K_red.submatrix(b2_, b1_);
    Bt_ = K_red.submatrix(b1_, b2_);
    if (jacobian_reduced) {
        SparseMatrix A = jacobian_reduced->submatrix(b1_, b1_);
        A_fact_ = SparseDirect(A, SparseDirect::Kind::LU);
    } else {
        SparseMatrix A = K_red.submatrix(b1_, b1_);
        A_fact_ = SparseDirect(A, SparseDirect::Kind::LDLT);
    }
    Mp_fact_ = SparseDirect(sys.Mp, SparseDirect::Kind::LDLT);

    // Pin one pressure dof of the Neumann Laplacian; constants are deflected
    // around the pinned solve.
    {
        TripletBuffer tb;
        const auto& rp = sys.Ap.row_ptr();
        const auto& cj = sys.Ap.col_idx();
        const auto& v = sys.Ap.values();
        double diag_scale = 0.0;
        for (int i = 0; i < sys.Ap.rows(); ++i)
            for (int k = rp[i]; k < rp[i + 1]; ++k)
                if (cj[k] == i) diag_scale = std::max(diag_scale, std::abs(v[k]));
        for (int i = 0; i < sys.Ap.rows(); ++i)
            for (int k = rp[i]; k < rp[i + 1]; ++k) {
                if (i == 0 || cj[k] == 0) continue;
                tb.add(i, cj[k], v[k]);
            }
        tb.add(0, 0, diag_scale > 0 ? diag_scale : 1.0);
        Ap_fact_ = SparseDirect(tb.build(sys.Ap.rows(), sys.Ap.cols()),
                                SparseDirect::Kind::LDLT);
    }

    if (nl_ > 0) PL_fact_ = SparseDirect(sys.PL, SparseDirect::Kind::LDLT);
}

std::vector<double> BlockPreconditioner::apply_ap_plus(const std::vector<double>& rp) const {
    // Deflate the constant: make the functional orthogonal to 1, pin dof 0,
    // solve, then remove the weighted mean of the result.
    std::vector<double> rt = rp;
    double sum = 0.0;
    for (double v : rp) sum += v;
    double c = sum / fluid_area_;
    for (int i = 0; i < np_; ++i) rt[i] -= c * p_row_[i];
    rt[0] = 0.0;
    std::vector<double> z = Ap_fact_.solve(rt);
    double zm = 0.0;
    for (int i = 0; i < np_; ++i) zm += p_row_[i] * z[i];
    zm /= fluid_area_;
    for (double& v : z) v -= zm;
    return z;
}

std::vector<double> BlockPreconditioner::apply_schur_inv(const std::vector<double>& r2) const {
    // r2 ordered as (p..., s, lambda...).
    std::vector<double> rp(r2.begin(), r2.begin() + np_);
    std::vector<double> z2(r2.size(), 0.0);

    std::vector<double> zm = Mp_fact_.solve(rp);
    std::vector<double> za = kappa_ > 0.0 ? apply_ap_plus(rp) : std::vector<double>(np_, 0.0);
    for (int i = 0; i < np_; ++i) z2[i] = mu_ * zm[i] + kappa_ * za[i];

    z2[np_] = mu_ * r2[np_] / fluid_area_;

    if (nl_ > 0) {
        std::vector<double> rl(r2.begin() + np_ + 1, r2.end());
        std::vector<double> zl = PL_fact_.solve(rl);
        for (int i = 0; i < nl_; ++i) z2[np_ + 1 + i] = zl[i];
    }
    return z2;
}

std::vector<double> BlockPreconditioner::apply(const std::vector<double>& r) const {
    std::vector<double> r1(n1_), r2(b2_.size());
    for (int i = 0; i < n1_; ++i) r1[i] = r[b1_[i]];
    for (std::size_t i = 0; i < b2_.size(); ++i) r2[i] = r[b2_[i]];

    // Block factorization as printed: lower sweep, diagonal solves, upper sweep.
    std::vector<double> y1 = A_fact_.solve(r1);
    std::vector<double> r2c = r2;
    B_.multiply_add(y1, r2c, -1.0);
    std::vector<double> z2 = apply_schur_inv(r2c);
    std::vector<double> bt_z2 = Bt_.multiply(z2);
    std::vector<double> corr = A_fact_.solve(bt_z2);

    std::vector<double> z(r.size(), 0.0);
    for (int i = 0; i < n1_; ++i) z[b1_[i]] = y1[i] - corr[i];
    for (std::size_t i = 0; i < b2_.size(); ++i) z[b2_[i]] = z2[i];
    return z;
}

} // namespace fsi
