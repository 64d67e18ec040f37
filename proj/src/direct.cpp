#include "fsi/direct.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace fsi {

namespace {

Eigen::SparseMatrix<double> to_eigen(const SparseMatrix& a) {
    using T = Eigen::Triplet<double>;
    std::vector<T> trips;
    trips.reserve(a.nnz());
    const auto& rp = a.row_ptr();
    const auto& cj = a.col_idx();
    const auto& v = a.values();
    for (int i = 0; i < a.rows(); ++i)
        for (int k = rp[i]; k < rp[i + 1]; ++k) trips.emplace_back(i, cj[k], v[k]);
    Eigen::SparseMatrix<double> m(a.rows(), a.cols());
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return m;
}

} // namespace

struct SparseDirect::Impl {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    Kind kind = Kind::LU;
};

SparseDirect::SparseDirect(const SparseMatrix& a, Kind kind) : dim_(a.rows()) {
    if (a.rows() != a.cols()) throw SingularMatrix("matrix not square");
    auto m = to_eigen(a);
    auto impl = std::make_shared<Impl>();
    impl->kind = kind;
    if (kind == Kind::LU) {
        impl->lu.compute(m);
        if (impl->lu.info() != Eigen::Success)
            throw SingularMatrix("LU factorization failed");
    } else {
        impl->ldlt.compute(m);
        if (impl->ldlt.info() != Eigen::Success)
            throw FactorizationFailed("LDLT factorization failed");
    }
    impl_ = impl;
}

std::vector<double> SparseDirect::solve(const std::vector<double>& rhs) const {
    if (!impl_) throw LinearSolveFailed("solve on empty factorization");
    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    Eigen::VectorXd x;
    if (impl_->kind == Kind::LU)
        x = impl_->lu.solve(b);
    else
        x = impl_->ldlt.solve(b);
    return std::vector<double>(x.data(), x.data() + x.size());
}

} // namespace fsi
