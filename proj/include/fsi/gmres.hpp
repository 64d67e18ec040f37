#ifndef FSI_GMRES_HPP
#define FSI_GMRES_HPP

#include <functional>
#include <vector>

#include "fsi/core.hpp"

namespace fsi {

struct SolveStats {
    int iterations = 0;
    double relative_residual = 0.0;
    int restarts = 0;
    bool converged = false;
};

using LinearOp = std::function<std::vector<double>(const std::vector<double>&)>;

struct GmresOptions {
    double tol_rel = 1e-6;
    int restart = 200;
    int max_iter = 2000;
    bool throw_on_max_iter = false;
};

/// Right-preconditioned GMRES: solves K x = b by minimizing ||b - K M(y)||
/// over the Krylov space of K∘M, then x = M(y). Pass an identity for M to
/// run unpreconditioned. The preconditioned residual norm is the true
/// residual norm, monotone over the inner iterations.
std::pair<std::vector<double>, SolveStats>
gmres(const LinearOp& apply_op, const LinearOp& apply_prec,
      const std::vector<double>& rhs, const GmresOptions& opts = {});

} // namespace fsi

#endif
