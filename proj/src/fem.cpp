#include "fsi/fem.hpp"

namespace fsi {

BasisEval basis_eval(int order, Vec2 p) {
    BasisEval out;
    const double x = p.x, y = p.y;
    const double l0 = 1.0 - x - y, l1 = x, l2 = y;
    if (order == 1) {
        out.values = {l0, l1, l2};
        out.gradients = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
    } else if (order == 2) {
        out.values = {l0 * (2.0 * l0 - 1.0), l1 * (2.0 * l1 - 1.0), l2 * (2.0 * l2 - 1.0),
                      4.0 * l0 * l1, 4.0 * l1 * l2, 4.0 * l2 * l0};
        const Vec2 g0{-1.0, -1.0}, g1{1.0, 0.0}, g2{0.0, 1.0};
        out.gradients = {
            g0 * (4.0 * l0 - 1.0),
            g1 * (4.0 * l1 - 1.0),
            g2 * (4.0 * l2 - 1.0),
            4.0 * (g0 * l1 + g1 * l0),
            4.0 * (g1 * l2 + g2 * l1),
            4.0 * (g2 * l0 + g0 * l2),
        };
    } else {
        throw UnsupportedDegree("basis order must be 1 or 2");
    }
    return out;
}

namespace {

QuadratureRule make_rule(int degree) {
    QuadratureRule r;
    r.degree = degree;
    auto add = [&](double a, double b, double w) {
        r.points.push_back({a, b});
        r.weights.push_back(0.5 * w);
    };
    // Weights below are normalized to sum 1 over the reference triangle.
    auto add3 = [&](double a, double w) {
        // Barycentric (a, a, 1-2a), three rotations.
        double c = 1.0 - 2.0 * a;
        add(a, a, w);
        add(c, a, w);
        add(a, c, w);
    };
    auto add6 = [&](double a, double b, double w) {
        double c = 1.0 - a - b;
        add(b, c, w); add(c, a, w); add(a, b, w);
        add(c, b, w); add(a, c, w); add(b, a, w);
    };
    switch (degree) {
        case 1:
            add(1.0 / 3.0, 1.0 / 3.0, 1.0);
            break;
        case 2:
            add3(1.0 / 6.0, 1.0 / 3.0);
            break;
        case 4:
            add3(0.445948490915965, 0.223381589678011);
            add3(0.091576213509771, 0.109951743655322);
            break;
        case 6:
            add3(0.249286745170910, 0.116786275726379);
            add3(0.063089014491502, 0.050844906370207);
            add6(0.310352451033785, 0.636502499121399, 0.082851075618374);
            break;
        default:
            throw UnsupportedDegree("no rule of degree " + std::to_string(degree));
    }
    return r;
}

} // namespace

const QuadratureRule& quadrature(int degree) {
    if (degree < 0 || degree > 6) throw UnsupportedDegree("degree must be in [0, 6]");
    static const QuadratureRule r1 = make_rule(1);
    static const QuadratureRule r2 = make_rule(2);
    static const QuadratureRule r4 = make_rule(4);
    static const QuadratureRule r6 = make_rule(6);
    if (degree <= 1) return r1;
    if (degree == 2) return r2;
    if (degree <= 4) return r4;
    return r6;
}

} // namespace fsi
