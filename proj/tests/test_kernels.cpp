#include "biot/kernels.hpp"
#include "biot/mesh.hpp"
#include "biot/assembly.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <string_view>

using namespace biot;
namespace k = biot::kernels;

namespace {

// Relative tolerance for reassociated sums of length n.
double sum_tol(std::size_t n, double magnitude) { return 4.0 * n * 2.2e-16 * magnitude; }

} // namespace

TEST_CASE("active backend honours the override") {
    const char* env = std::getenv("BIOT_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") {
        CHECK(k::active().name == "scalar");
    } else if (k::avx2_backend() != nullptr && k::cpu_has_avx2()) {
        CHECK(k::active().name == "avx2");
    } else {
        CHECK(k::active().name == "scalar");
    }
    MESSAGE("active backend: " << k::active().name);
}

TEST_CASE("scalar reference kernels") {
    const auto& s = k::scalar_backend();
    const std::vector<double> x{1, 2, 3}, y{4, -5, 6};
    CHECK(s.dot(x.data(), y.data(), 3) == 12.0);
    std::vector<double> z = y;
    s.axpy(2.0, x.data(), z.data(), 3);
    CHECK(z == std::vector<double>{6, -1, 12});
    z = y;
    s.axpby(2.0, x.data(), -1.0, z.data(), 3);
    CHECK(z == std::vector<double>{-2, 9, 0});
    CHECK(s.dot(x.data(), y.data(), 0) == 0.0);
}

TEST_CASE("AVX2 kernels match the scalar reference") {
    const k::Backend* v = k::avx2_backend();
    if (v == nullptr || !k::cpu_has_avx2()) {
        MESSAGE("AVX2 not available; equivalence skipped");
        return;
    }
    const auto& s = k::scalar_backend();
    // Lengths cover empty input, remainders 1..3 and 4-wide bodies.
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 63u, 1000u, 4099u}) {
        CAPTURE(n);
        const std::vector<double> x = oracle::random_vector(n, 1 + n), y0 = oracle::random_vector(n, 2 + n);
        double mag = 0.0;
        for (std::size_t i = 0; i < n; ++i) mag += std::abs(x[i] * y0[i]);
        CHECK(std::abs(v->dot(x.data(), y0.data(), n) - s.dot(x.data(), y0.data(), n)) <= sum_tol(n, mag) + 1e-300);

        std::vector<double> ya = y0, yb = y0;
        v->axpy(0.37, x.data(), ya.data(), n);
        s.axpy(0.37, x.data(), yb.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(ya[i] - yb[i]) <= 2.2e-16 * (std::abs(yb[i]) + 1.0));

        ya = y0;
        yb = y0;
        v->axpby(-1.3, x.data(), 0.6, ya.data(), n);
        s.axpby(-1.3, x.data(), 0.6, yb.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(ya[i] - yb[i]) <= 4.4e-16 * (std::abs(yb[i]) + 1.0));
    }

    // Sparse products on real operators with varied row lengths.
    const Discretization d = Discretization::structured(5);
    for (const CsrMatrix& A : {assemble_ah(d.U(), DGConfig{}), assemble_div_coupling(d.U(), d.P()),
                               assemble_mass(d.V())}) {
        const std::vector<double> x = oracle::random_vector(A.cols(), 9);
        std::vector<double> ya(A.rows()), yb(A.rows());
        v->spmv(A.view(), x.data(), ya.data());
        s.spmv(A.view(), x.data(), yb.data());
        for (int r = 0; r < A.rows(); ++r) {
            double mag = 0.0;
            for (int j = A.row_ptr()[r]; j < A.row_ptr()[r + 1]; ++j) mag += std::abs(A.val()[j] * x[A.col()[j]]);
            CHECK(std::abs(ya[r] - yb[r]) <= sum_tol(A.row_ptr()[r + 1] - A.row_ptr()[r], mag) + 1e-300);
        }
    }
}

TEST_CASE("span wrappers dispatch to the active backend") {
    const std::vector<double> x = oracle::random_vector(37, 3), y = oracle::random_vector(37, 4);
    CHECK(k::dot(x, y) == k::active().dot(x.data(), y.data(), x.size()));
    std::vector<double> a = y, b = y;
    k::axpy(0.5, x, a);
    k::active().axpy(0.5, x.data(), b.data(), b.size());
    CHECK(a == b);
}
