#include "fsi/gmres.hpp"

#include <algorithm>
#include <cmath>

namespace fsi {

std::pair<std::vector<double>, SolveStats>
gmres(const LinearOp& apply_op, const LinearOp& apply_prec,
      const std::vector<double>& rhs, const GmresOptions& opts) {
    const std::size_t n = rhs.size();
    SolveStats stats;
    std::vector<double> x(n, 0.0);

    double bnorm = 0.0;
    for (double v : rhs) bnorm += v * v;
    bnorm = std::sqrt(bnorm);
    if (bnorm == 0.0) {
        stats.converged = true;
        return {x, stats};
    }

    const int m = std::max(1, opts.restart);
    std::vector<std::vector<double>> V;     // Arnoldi basis
    std::vector<double> H((m + 1) * m, 0.0); // Hessenberg, column-major
    std::vector<double> cs(m), sn(m), g(m + 1);

    auto resid_vec = [&](const std::vector<double>& xc) {
        std::vector<double> r = apply_op(xc);
        for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - r[i];
        return r;
    };

    int total_iters = 0;
    double rel = 1.0;
    while (total_iters < opts.max_iter) {
        std::vector<double> r = resid_vec(x);
        double beta = 0.0;
        for (double v : r) beta += v * v;
        beta = std::sqrt(beta);
        rel = beta / bnorm;
        if (rel <= opts.tol_rel) {
            stats.converged = true;
            break;
        }

        V.assign(1, r);
        for (double& v : V[0]) v /= beta;
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = beta;

        int k = 0;
        for (; k < m && total_iters < opts.max_iter; ++k, ++total_iters) {
            std::vector<double> w = apply_op(apply_prec(V[k]));
            // Modified Gram-Schmidt
            for (int i = 0; i <= k; ++i) {
                double h = 0.0;
                for (std::size_t j = 0; j < n; ++j) h += w[j] * V[i][j];
                H[i + k * (m + 1)] = h;
                for (std::size_t j = 0; j < n; ++j) w[j] -= h * V[i][j];
            }
            double hkk = 0.0;
            for (double v : w) hkk += v * v;
            hkk = std::sqrt(hkk);
            H[(k + 1) + k * (m + 1)] = hkk;
            bool breakdown = hkk < 1e-300;
            if (!breakdown) {
                for (double& v : w) v /= hkk;
                V.push_back(std::move(w));
            }

            // Apply accumulated Givens rotations to the new column.
            for (int i = 0; i < k; ++i) {
                double h0 = H[i + k * (m + 1)];
                double h1 = H[(i + 1) + k * (m + 1)];
                H[i + k * (m + 1)] = cs[i] * h0 + sn[i] * h1;
                H[(i + 1) + k * (m + 1)] = -sn[i] * h0 + cs[i] * h1;
            }
            double h0 = H[k + k * (m + 1)];
            double h1 = H[(k + 1) + k * (m + 1)];
            double d = std::hypot(h0, h1);
            if (d < 1e-300) throw BreakdownDetected("Givens rotation degenerate");
            cs[k] = h0 / d;
            sn[k] = h1 / d;
            H[k + k * (m + 1)] = d;
            H[(k + 1) + k * (m + 1)] = 0.0;
            double g0 = g[k];
            g[k] = cs[k] * g0;
            g[k + 1] = -sn[k] * g0;

            rel = std::abs(g[k + 1]) / bnorm;
            if (rel <= opts.tol_rel || breakdown) {
                ++k;
                ++total_iters;
                break;
            }
        }

        // Solve the small triangular system and update x.
        std::vector<double> y(k, 0.0);
        for (int i = k - 1; i >= 0; --i) {
            double s = g[i];
            for (int j = i + 1; j < k; ++j) s -= H[i + j * (m + 1)] * y[j];
            y[i] = s / H[i + i * (m + 1)];
        }
        std::vector<double> z(n, 0.0);
        for (int i = 0; i < k; ++i)
            for (std::size_t j = 0; j < n; ++j) z[j] += y[i] * V[i][j];
        z = apply_prec(z);
        for (std::size_t j = 0; j < n; ++j) x[j] += z[j];

        if (rel <= opts.tol_rel) {
            stats.converged = true;
            break;
        }
        if (total_iters < opts.max_iter) ++stats.restarts;
    }

    // Recompute the true relative residual for reporting.
    {
        std::vector<double> r = resid_vec(x);
        double beta = 0.0;
        for (double v : r) beta += v * v;
        rel = std::sqrt(beta) / bnorm;
        if (rel <= opts.tol_rel) stats.converged = true;
    }
    stats.iterations = total_iters;
    stats.relative_residual = rel;
    if (!stats.converged && opts.throw_on_max_iter)
        throw MaxIterationsExceeded("GMRES did not reach tolerance");
    return {x, stats};
}

} // namespace fsi
