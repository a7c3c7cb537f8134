#include "biot/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace biot::kernels {

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Backend& active() {
    static const Backend& chosen = []() -> const Backend& {
        const char* env = std::getenv("BIOT_SIMD");
        if (env != nullptr && std::string_view(env) == "scalar") return scalar_backend();
        if (const Backend* b = avx2_backend(); b != nullptr && cpu_has_avx2()) return *b;
        return scalar_backend();
    }();
    return chosen;
}

} // namespace biot::kernels
