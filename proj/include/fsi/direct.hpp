#ifndef FSI_DIRECT_HPP
#define FSI_DIRECT_HPP

#include <memory>
#include <vector>

#include "fsi/sparse.hpp"

namespace fsi {

/// Handle to a sparse direct factorization. Immutable after construction;
/// solves may be issued concurrently.
class SparseDirect {
public:
    enum class Kind { LU, LDLT };

    SparseDirect() = default;
    // Throws SingularMatrix / FactorizationFailed.
    SparseDirect(const SparseMatrix& a, Kind kind);

    std::vector<double> solve(const std::vector<double>& rhs) const;
    bool valid() const { return impl_ != nullptr; }
    int dim() const { return dim_; }

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
    int dim_ = 0;
};

inline SparseDirect sparse_direct(const SparseMatrix& a,
                                  SparseDirect::Kind kind = SparseDirect::Kind::LU) {
    return SparseDirect(a, kind);
}

} // namespace fsi

#endif
