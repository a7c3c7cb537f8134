#pragma once

#include "biot/kernels.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <iosfwd>
#include <span>
#include <vector>

namespace biot {

/// Compressed sparse row matrix with sorted column indices.
class CsrMatrix {
public:
    CsrMatrix() = default;
    CsrMatrix(int rows, int cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}
    CsrMatrix(int rows, int cols, std::vector<int> row_ptr, std::vector<int> col, std::vector<double> val);

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return val_.size(); }
    const std::vector<int>& row_ptr() const noexcept { return row_ptr_; }
    const std::vector<int>& col() const noexcept { return col_; }
    const std::vector<double>& val() const noexcept { return val_; }

    kernels::CsrView view() const { return {rows_, cols_, row_ptr_.data(), col_.data(), val_.data()}; }

    /// y = A x.
    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> operator*(std::span<const double> x) const;

    /// Entry (r, c) or 0.
    double coeff(int r, int c) const;

    CsrMatrix transpose() const;
    /// a A + b B with the union sparsity pattern.
    static CsrMatrix combine(double a, const CsrMatrix& A, double b, const CsrMatrix& B);
    CsrMatrix scaled(double s) const;

    Eigen::SparseMatrix<double> to_eigen() const;
    Eigen::MatrixXd to_dense() const;

    /// Matrix Market coordinate (general, real) dump.
    void write_matrix_market(std::ostream& os) const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<int> row_ptr_{0};
    std::vector<int> col_;
    std::vector<double> val_;
};

/// Collects (row, col, value) contributions. Duplicates are summed in
/// insertion order, so assembly in a fixed element order is reproducible
/// bit for bit.
class TripletBuilder {
public:
    TripletBuilder(int rows, int cols) : rows_(rows), cols_(cols) {}

    void add(int r, int c, double v) { entries_.push_back({r, c, v}); }
    CsrMatrix build() const;

private:
    struct Entry {
        int r, c;
        double v;
    };
    int rows_, cols_;
    std::vector<Entry> entries_;
};

} // namespace biot
