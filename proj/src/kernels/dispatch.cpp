#include "cavsync/kernels/pair_kernel.hpp"

#include <stdexcept>

namespace cavsync::kernels {

bool cpu_has_avx2() {
#if defined(CAVSYNC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    static const bool has = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    }();
    return has;
#else
    return false;
#endif
}

PairRowKernel select_pair_kernel(bool prefer_simd, bool require_simd) {
#if defined(CAVSYNC_HAVE_AVX2)
    if (prefer_simd && cpu_has_avx2()) return &pair_row_avx2;
#endif
    if (require_simd) {
        throw std::runtime_error("AVX2 pair kernel requested but not available on this CPU/build");
    }
    return &pair_row_scalar;
}

std::string_view kernel_name(PairRowKernel kernel) {
#if defined(CAVSYNC_HAVE_AVX2)
    if (kernel == &pair_row_avx2) return "avx2";
#endif
    if (kernel == &pair_row_scalar) return "scalar";
    return "unknown";
}

}  // namespace cavsync::kernels
