#ifndef FSI_SPARSE_HPP
#define FSI_SPARSE_HPP

#include <vector>

#include "fsi/core.hpp"

namespace fsi {

/// Compressed-row sparse matrix. Columns within a row are sorted and unique.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int nnz() const { return static_cast<int>(vals_.size()); }

    const std::vector<int>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return vals_; }
    std::vector<double>& values() { return vals_; }

    std::vector<double> multiply(const std::vector<double>& x) const;
    void multiply_add(const std::vector<double>& x, std::vector<double>& y,
                      double scale = 1.0) const;
    // y += scale * A^T x
    void multiply_transpose_add(const std::vector<double>& x, std::vector<double>& y,
                                double scale = 1.0) const;

    SparseMatrix transposed() const;

    double coeff(int i, int j) const;

    // Accumulates into an existing entry; the pattern must already hold (i, j).
    void add_at(int i, int j, double v);

    // Extract the square submatrix on the given index set (order preserved).
    SparseMatrix submatrix(const std::vector<int>& row_ids,
                           const std::vector<int>& col_ids) const;

    // Zero the values while keeping the pattern.
    void set_zero() { std::fill(vals_.begin(), vals_.end(), 0.0); }

    static SparseMatrix from_triplets(int rows, int cols,
                                      const std::vector<int>& ti,
                                      const std::vector<int>& tj,
                                      const std::vector<double>& tv);

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<int> row_ptr_;
    std::vector<int> col_idx_;
    std::vector<double> vals_;
};

/// Accumulates (i, j, v) entries; duplicates are summed on build.
class TripletBuffer {
public:
    void add(int i, int j, double v) {
        if (v == 0.0) return;
        is_.push_back(i);
        js_.push_back(j);
        vs_.push_back(v);
    }
    // Keeps exact zeros: used where the pattern itself is the contract.
    void add_always(int i, int j, double v) {
        is_.push_back(i);
        js_.push_back(j);
        vs_.push_back(v);
    }
    void reserve(std::size_t n) { is_.reserve(n); js_.reserve(n); vs_.reserve(n); }
    SparseMatrix build(int rows, int cols) const {
        return SparseMatrix::from_triplets(rows, cols, is_, js_, vs_);
    }
    void clear() { is_.clear(); js_.clear(); vs_.clear(); }

private:
    std::vector<int> is_, js_;
    std::vector<double> vs_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a);
void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y);

} // namespace fsi

#endif
