#ifndef FSI_FEM_HPP
#define FSI_FEM_HPP

#include <array>
#include <vector>

#include "fsi/core.hpp"

namespace fsi {

/// Lagrange shape functions on the unit triangle (vertices (0,0),(1,0),(0,1)).
/// Order 1: 3 vertex nodes. Order 2: vertices then edge midpoints in local
/// edge order (0-1), (1-2), (2-0).
struct BasisEval {
    std::vector<double> values;
    std::vector<Vec2> gradients;
};

BasisEval basis_eval(int order, Vec2 ref_point);

inline int basis_size(int order) { return order == 1 ? 3 : 6; }

/// Positive-weight rules on the unit triangle; weights sum to 1/2.
struct QuadratureRule {
    std::vector<Vec2> points;
    std::vector<double> weights;
    int degree = 0;
};

// Smallest available rule exact for polynomials of total degree d (d <= 6).
const QuadratureRule& quadrature(int degree);

} // namespace fsi

#endif
