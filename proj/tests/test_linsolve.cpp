#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "fsi/direct.hpp"
#include "fsi/gmres.hpp"
#include "fsi/sparse.hpp"

using namespace fsi;

namespace {

SparseMatrix diag_matrix(const std::vector<double>& d) {
    TripletBuffer tb;
    for (std::size_t i = 0; i < d.size(); ++i) tb.add((int)i, (int)i, d[i]);
    return tb.build((int)d.size(), (int)d.size());
}

LinearOp matrix_op(const SparseMatrix& m) {
    return [&m](const std::vector<double>& x) { return m.multiply(x); };
}

LinearOp identity_op() {
    return [](const std::vector<double>& x) { return x; };
}

} // namespace

TEST_CASE("sparse matrix triplet assembly merges duplicates") {
    TripletBuffer tb;
    tb.add(0, 1, 2.0);
    tb.add(0, 1, 3.0);
    tb.add(1, 0, -1.0);
    tb.add(0, 0, 1.0);
    SparseMatrix m = tb.build(2, 2);
    CHECK(m.nnz() == 3);
    CHECK(m.coeff(0, 1) == doctest::Approx(5.0));
    CHECK(m.coeff(0, 0) == doctest::Approx(1.0));
    std::vector<double> y = m.multiply({1.0, 1.0});
    CHECK(y[0] == doctest::Approx(6.0));
    CHECK(y[1] == doctest::Approx(-1.0));
}

TEST_CASE("sparse transpose and submatrix") {
    TripletBuffer tb;
    tb.add(0, 2, 1.5);
    tb.add(1, 0, 2.5);
    SparseMatrix m = tb.build(2, 3);
    SparseMatrix mt = m.transposed();
    CHECK(mt.coeff(2, 0) == doctest::Approx(1.5));
    CHECK(mt.coeff(0, 1) == doctest::Approx(2.5));

    SparseMatrix sub = m.submatrix({0, 1}, {0, 2});
    CHECK(sub.coeff(0, 1) == doctest::Approx(1.5));
    CHECK(sub.coeff(1, 0) == doctest::Approx(2.5));
}

TEST_CASE("gmres: identity converges in one iteration") {
    std::vector<double> b = {1.0, -2.0, 3.0};
    auto [x, stats] = gmres(identity_op(), identity_op(), b);
    CHECK(stats.converged);
    CHECK(stats.iterations <= 1);
    for (int i = 0; i < 3; ++i) CHECK(x[i] == doctest::Approx(b[i]));
}

TEST_CASE("gmres: SPD diagonal in at most n iterations") {
    std::vector<double> d(10);
    for (int i = 0; i < 10; ++i) d[i] = i + 1.0;
    SparseMatrix m = diag_matrix(d);
    std::vector<double> b(10, 1.0);
    GmresOptions opts;
    opts.tol_rel = 1e-12;
    auto [x, stats] = gmres(matrix_op(m), identity_op(), b, opts);
    CHECK(stats.converged);
    CHECK(stats.iterations <= 10);
    for (int i = 0; i < 10; ++i) CHECK(x[i] == doctest::Approx(1.0 / d[i]).epsilon(1e-10));
}

TEST_CASE("gmres matches a dense direct solve on a random well-conditioned system") {
    const int n = 50;
    std::mt19937 rng(1234);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    TripletBuffer tb;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double v = 0.1 * uni(rng);
            if (i == j) v += 3.0;
            a(i, j) = v;
            tb.add(i, j, v);
        }
    SparseMatrix m = tb.build(n, n);
    std::vector<double> b(n);
    for (double& v : b) v = uni(rng);

    Eigen::Map<const Eigen::VectorXd> be(b.data(), n);
    Eigen::VectorXd xd = a.fullPivLu().solve(be);

    GmresOptions opts;
    opts.tol_rel = 1e-12;
    auto [x, stats] = gmres(matrix_op(m), identity_op(), b, opts);
    CHECK(stats.converged);
    for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(xd(i)).epsilon(1e-8));
}

TEST_CASE("gmres residual is monotone across iterations") {
    // Track residuals by re-running with increasing max_iter on a stiff system.
    const int n = 40;
    TripletBuffer tb;
    for (int i = 0; i < n; ++i) {
        tb.add(i, i, 2.0 + i * 0.5);
        if (i > 0) tb.add(i, i - 1, -1.0);
        if (i < n - 1) tb.add(i, i + 1, -0.5);
    }
    SparseMatrix m = tb.build(n, n);
    std::vector<double> b(n, 1.0);
    double prev = 1e300;
    for (int k = 1; k <= 12; ++k) {
        GmresOptions opts;
        opts.tol_rel = 1e-16;
        opts.max_iter = k;
        auto [x, stats] = gmres(matrix_op(m), identity_op(), b, opts);
        CHECK(stats.relative_residual <= prev + 1e-14);
        prev = stats.relative_residual;
    }
}

TEST_CASE("sparse_direct: 1x1 system") {
    TripletBuffer tb;
    tb.add(0, 0, 2.0);
    SparseDirect f = sparse_direct(tb.build(1, 1));
    auto x = f.solve({4.0});
    CHECK(x[0] == doctest::Approx(2.0));
}

TEST_CASE("sparse_direct: factor-then-solve matches dense inverse on random SPD") {
    const int n = 30;
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = uni(rng);
    Eigen::MatrixXd a = g * g.transpose() + 5.0 * Eigen::MatrixXd::Identity(n, n);

    TripletBuffer tb;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) tb.add(i, j, a(i, j));
    SparseMatrix m = tb.build(n, n);

    std::vector<double> b(n);
    for (double& v : b) v = uni(rng);
    Eigen::Map<const Eigen::VectorXd> be(b.data(), n);
    Eigen::VectorXd xd = a.inverse() * be;

    for (auto kind : {SparseDirect::Kind::LU, SparseDirect::Kind::LDLT}) {
        SparseDirect f = sparse_direct(m, kind);
        auto x = f.solve(b);
        for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(xd(i)).epsilon(1e-9));
    }
}

TEST_CASE("sparse_direct reproduces identity action on random vectors") {
    const int n = 25;
    TripletBuffer tb;
    for (int i = 0; i < n; ++i) {
        tb.add(i, i, 4.0);
        if (i > 0) tb.add(i, i - 1, -1.0);
        if (i < n - 1) tb.add(i, i + 1, -1.0);
    }
    SparseMatrix m = tb.build(n, n);
    SparseDirect f = sparse_direct(m);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> v(n);
        for (double& x : v) x = uni(rng);
        auto w = f.solve(m.multiply(v));
        for (int i = 0; i < n; ++i) CHECK(w[i] == doctest::Approx(v[i]).epsilon(1e-10));
    }
}
