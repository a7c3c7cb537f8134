#include "biot/sparse.hpp"

#include "biot/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace biot {

CsrMatrix::CsrMatrix(int rows, int cols, std::vector<int> row_ptr, std::vector<int> col, std::vector<double> val)
    : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_(std::move(col)), val_(std::move(val)) {
    if (static_cast<int>(row_ptr_.size()) != rows_ + 1 || col_.size() != val_.size())
        throw DimensionMismatch("CsrMatrix: inconsistent arrays");
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    if (static_cast<int>(x.size()) != cols_ || static_cast<int>(y.size()) != rows_)
        throw DimensionMismatch("CsrMatrix::multiply: size mismatch");
    kernels::spmv(view(), x, y);
}

std::vector<double> CsrMatrix::operator*(std::span<const double> x) const {
    std::vector<double> y(rows_);
    multiply(x, y);
    return y;
}

double CsrMatrix::coeff(int r, int c) const {
    const auto first = col_.begin() + row_ptr_[r];
    const auto last = col_.begin() + row_ptr_[r + 1];
    const auto it = std::lower_bound(first, last, c);
    return (it != last && *it == c) ? val_[static_cast<std::size_t>(it - col_.begin())] : 0.0;
}

CsrMatrix CsrMatrix::transpose() const {
    std::vector<int> ptr(cols_ + 1, 0);
    for (int c : col_) ++ptr[c + 1];
    std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
    std::vector<int> next(ptr.begin(), ptr.end() - 1);
    std::vector<int> tc(col_.size());
    std::vector<double> tv(val_.size());
    for (int r = 0; r < rows_; ++r)
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            const int dst = next[col_[k]]++;
            tc[dst] = r;
            tv[dst] = val_[k];
        }
    return CsrMatrix(cols_, rows_, std::move(ptr), std::move(tc), std::move(tv));
}

CsrMatrix CsrMatrix::combine(double a, const CsrMatrix& A, double b, const CsrMatrix& B) {
    if (A.rows_ != B.rows_ || A.cols_ != B.cols_) throw DimensionMismatch("CsrMatrix::combine: shape mismatch");
    std::vector<int> ptr{0};
    std::vector<int> cols;
    std::vector<double> vals;
    for (int r = 0; r < A.rows_; ++r) {
        int i = A.row_ptr_[r], j = B.row_ptr_[r];
        const int ie = A.row_ptr_[r + 1], je = B.row_ptr_[r + 1];
        while (i < ie || j < je) {
            if (j >= je || (i < ie && A.col_[i] < B.col_[j])) {
                cols.push_back(A.col_[i]);
                vals.push_back(a * A.val_[i++]);
            } else if (i >= ie || B.col_[j] < A.col_[i]) {
                cols.push_back(B.col_[j]);
                vals.push_back(b * B.val_[j++]);
            } else {
                cols.push_back(A.col_[i]);
                vals.push_back(a * A.val_[i++] + b * B.val_[j++]);
            }
        }
        ptr.push_back(static_cast<int>(cols.size()));
    }
    return CsrMatrix(A.rows_, A.cols_, std::move(ptr), std::move(cols), std::move(vals));
}

CsrMatrix CsrMatrix::scaled(double s) const {
    CsrMatrix out = *this;
    for (double& v : out.val_) v *= s;
    return out;
}

Eigen::SparseMatrix<double> CsrMatrix::to_eigen() const {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(val_.size());
    for (int r = 0; r < rows_; ++r)
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) t.emplace_back(r, col_[k], val_[k]);
    Eigen::SparseMatrix<double> m(rows_, cols_);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

Eigen::MatrixXd CsrMatrix::to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows_, cols_);
    for (int r = 0; r < rows_; ++r)
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) m(r, col_[k]) = val_[k];
    return m;
}

void CsrMatrix::write_matrix_market(std::ostream& os) const {
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << rows_ << ' ' << cols_ << ' ' << val_.size() << '\n';
    char buf[64];
    for (int r = 0; r < rows_; ++r)
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", val_[k]);
            os << r + 1 << ' ' << col_[k] + 1 << ' ' << buf << '\n';
        }
}

CsrMatrix TripletBuilder::build() const {
    std::vector<std::size_t> order(entries_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
        const Entry& x = entries_[a];
        const Entry& y = entries_[b];
        return x.r != y.r ? x.r < y.r : x.c < y.c;
    });
    std::vector<int> ptr(rows_ + 1, 0);
    std::vector<int> cols;
    std::vector<double> vals;
    int last_r = -1, last_c = -1;
    for (std::size_t idx : order) {
        const Entry& e = entries_[idx];
        if (e.r < 0 || e.r >= rows_ || e.c < 0 || e.c >= cols_)
            throw DimensionMismatch("TripletBuilder: index out of range");
        if (e.r == last_r && e.c == last_c) {
            vals.back() += e.v;
            continue;
        }
        cols.push_back(e.c);
        vals.push_back(e.v);
        ++ptr[e.r + 1];
        last_r = e.r;
        last_c = e.c;
    }
    std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
    return CsrMatrix(rows_, cols_, std::move(ptr), std::move(cols), std::move(vals));
}

} // namespace biot
