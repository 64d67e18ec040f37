#include "fsi/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fsi {

SparseMatrix SparseMatrix::from_triplets(int rows, int cols,
                                         const std::vector<int>& ti,
                                         const std::vector<int>& tj,
                                         const std::vector<double>& tv) {
    SparseMatrix m(rows, cols);
    const std::size_t n = tv.size();
    std::vector<int> count(rows + 1, 0);
    for (std::size_t k = 0; k < n; ++k) count[ti[k] + 1]++;
    for (int i = 0; i < rows; ++i) count[i + 1] += count[i];

    std::vector<int> cj(n);
    std::vector<double> cv(n);
    std::vector<int> fill(count.begin(), count.end() - 1);
    for (std::size_t k = 0; k < n; ++k) {
        int pos = fill[ti[k]]++;
        cj[pos] = tj[k];
        cv[pos] = tv[k];
    }

    // Sort each row by column and merge duplicates.
    m.row_ptr_.assign(rows + 1, 0);
    std::vector<int> perm;
    for (int i = 0; i < rows; ++i) {
        int b = count[i], e = count[i + 1];
        perm.resize(e - b);
        std::iota(perm.begin(), perm.end(), b);
        std::sort(perm.begin(), perm.end(), [&](int a, int c) { return cj[a] < cj[c]; });
        int last_col = -1;
        for (int p : perm) {
            if (cj[p] == last_col) {
                m.vals_.back() += cv[p];
            } else {
                m.col_idx_.push_back(cj[p]);
                m.vals_.push_back(cv[p]);
                last_col = cj[p];
            }
        }
        m.row_ptr_[i + 1] = static_cast<int>(m.vals_.size());
    }
    return m;
}

std::vector<double> SparseMatrix::multiply(const std::vector<double>& x) const {
    std::vector<double> y(rows_, 0.0);
    multiply_add(x, y);
    return y;
}

void SparseMatrix::multiply_add(const std::vector<double>& x, std::vector<double>& y,
                                double scale) const {
    for (int i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += vals_[k] * x[col_idx_[k]];
        y[i] += scale * s;
    }
}

void SparseMatrix::multiply_transpose_add(const std::vector<double>& x,
                                          std::vector<double>& y, double scale) const {
    for (int i = 0; i < rows_; ++i) {
        const double xi = scale * x[i];
        if (xi == 0.0) continue;
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) y[col_idx_[k]] += vals_[k] * xi;
    }
}

SparseMatrix SparseMatrix::transposed() const {
    std::vector<int> ti, tj;
    std::vector<double> tv;
    ti.reserve(nnz());
    tj.reserve(nnz());
    tv.reserve(nnz());
    for (int i = 0; i < rows_; ++i)
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            ti.push_back(col_idx_[k]);
            tj.push_back(i);
            tv.push_back(vals_[k]);
        }
    return from_triplets(cols_, rows_, ti, tj, tv);
}

void SparseMatrix::add_at(int i, int j, double v) {
    int lo = row_ptr_[i], hi = row_ptr_[i + 1];
    while (lo < hi) {
        int mid = (lo + hi) / 2;
        if (col_idx_[mid] < j) lo = mid + 1;
        else hi = mid;
    }
    if (lo >= row_ptr_[i + 1] || col_idx_[lo] != j)
        throw FsiError("add_at outside the sparsity pattern");
    vals_[lo] += v;
}

double SparseMatrix::coeff(int i, int j) const {
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
        if (col_idx_[k] == j) return vals_[k];
    return 0.0;
}

SparseMatrix SparseMatrix::submatrix(const std::vector<int>& row_ids,
                                     const std::vector<int>& col_ids) const {
    std::vector<int> col_map(cols_, -1);
    for (std::size_t k = 0; k < col_ids.size(); ++k) col_map[col_ids[k]] = static_cast<int>(k);
    std::vector<int> ti, tj;
    std::vector<double> tv;
    for (std::size_t r = 0; r < row_ids.size(); ++r) {
        int i = row_ids[r];
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            int c = col_map[col_idx_[k]];
            if (c >= 0) {
                ti.push_back(static_cast<int>(r));
                tj.push_back(c);
                tv.push_back(vals_[k]);
            }
        }
    }
    return from_triplets(static_cast<int>(row_ids.size()),
                         static_cast<int>(col_ids.size()), ti, tj, tv);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

} // namespace fsi
