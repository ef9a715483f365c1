// pair_kernel.hpp: the O(k^2) cross-class block of the cumulant equations.
//
// One call processes a row of the upper triangle: class k against every
// k' > k. It writes the derivatives of the five stored pair moments and
// accumulates the cavity-mediated cross sums
//   sum_{k' != k} g_k' N_k' <sz_k s-_k'>,  <s-_k s-_k'>,  <s+_k s-_k'>
// into row (class k) and column (class k') accumulators.
//
// A scalar reference and an AVX2 variant exist; select_pair_kernel picks one
// at runtime. The variants agree to rounding, not bitwise.

#pragma once

#include <complex>
#include <string_view>

namespace cavsync::kernels {

using cplx = std::complex<double>;

// Per-class inputs, structure of arrays over all classes. `sz` carries a zero
// imaginary part.
struct ClassArrays {
    const cplx* sm = nullptr;
    const cplx* sz = nullptr;
    const cplx* asz = nullptr;
    const cplx* asm_ = nullptr;
    const cplx* asp = nullptr;
    const cplx* omega = nullptr;
    const double* g = nullptr;
    const double* gn = nullptr;
};

struct PairRow {
    int k = 0;
    int n_classes = 0;
    cplx a{};
    double gamma = 0.0;
    double eta = 0.0;
    ClassArrays cls;

    // Stored pair moments for (k, k+1) .. (k, K-1).
    const cplx* mm = nullptr;
    const cplx* zz = nullptr;
    const cplx* zm = nullptr;
    const cplx* zmr = nullptr;
    const cplx* pm = nullptr;
    cplx* dmm = nullptr;
    cplx* dzz = nullptr;
    cplx* dzm = nullptr;
    cplx* dzmr = nullptr;
    cplx* dpm = nullptr;

    // Column accumulators indexed by class (length K).
    cplx* col_sz = nullptr;
    cplx* col_sm = nullptr;
    cplx* col_sp = nullptr;

    // Row sums for class k (outputs).
    cplx row_sz{};
    cplx row_sm{};
    cplx row_sp{};
};

using PairRowKernel = void (*)(PairRow&);

void pair_row_scalar(PairRow& row);
#if defined(CAVSYNC_HAVE_AVX2)
void pair_row_avx2(PairRow& row);
#endif

bool cpu_has_avx2();

// prefer_simd=false forces the scalar reference. Throws std::runtime_error
// when AVX2 is requested explicitly but unavailable.
PairRowKernel select_pair_kernel(bool prefer_simd, bool require_simd = false);
std::string_view kernel_name(PairRowKernel kernel);

}  // namespace cavsync::kernels
