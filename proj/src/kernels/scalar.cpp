#include "biot/kernels.hpp"

namespace biot::kernels {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpby_scalar(double a, const double* x, double b, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void spmv_scalar(const CsrView& A, const double* x, double* y) {
    for (int r = 0; r < A.rows; ++r) {
        double s = 0.0;
        for (int k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k) s += A.val[k] * x[A.col[k]];
        y[r] = s;
    }
}

} // namespace

const Backend& scalar_backend() {
    static const Backend b{"scalar", dot_scalar, axpy_scalar, axpby_scalar, spmv_scalar};
    return b;
}

} // namespace biot::kernels
