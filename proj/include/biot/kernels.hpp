#pragma once

// Data-parallel inner loops of the Krylov solver. Every kernel has a scalar
// reference implementation and, on x86-64, an AVX2/FMA variant. The variant
// is picked once at startup from CPUID; BIOT_SIMD=scalar forces the
// reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace biot::kernels {

/// Read-only CSR view.
struct CsrView {
    int rows = 0;
    int cols = 0;
    const int* row_ptr = nullptr;
    const int* col = nullptr;
    const double* val = nullptr;
};

struct Backend {
    std::string_view name;
    double (*dot)(const double* x, const double* y, std::size_t n);
    void (*axpy)(double a, const double* x, double* y, std::size_t n);         // y += a x
    void (*axpby)(double a, const double* x, double b, double* y, std::size_t n);  // y = a x + b y
    void (*spmv)(const CsrView& A, const double* x, double* y);                // y = A x
};

const Backend& scalar_backend();
/// nullptr when the translation unit was built without AVX2 support.
const Backend* avx2_backend();
/// True when the running CPU reports AVX2 and FMA.
bool cpu_has_avx2();
const Backend& active();

inline double dot(std::span<const double> x, std::span<const double> y) {
    return active().dot(x.data(), y.data(), x.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    active().axpy(a, x.data(), y.data(), x.size());
}
inline void axpby(double a, std::span<const double> x, double b, std::span<double> y) {
    active().axpby(a, x.data(), b, y.data(), x.size());
}
inline void spmv(const CsrView& A, std::span<const double> x, std::span<double> y) {
    active().spmv(A, x.data(), y.data());
}

} // namespace biot::kernels
