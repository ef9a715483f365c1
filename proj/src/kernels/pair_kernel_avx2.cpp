// AVX2/FMA variant of the pair kernel: two complex doubles per register,
// interleaved (re, im). This translation unit is compiled with -mavx2 -mfma
// and only reached through select_pair_kernel after a CPU feature check.
// It avoids std::complex arithmetic so no AVX-encoded inline template can
// leak into scalar callers.

#include "cavsync/kernels/pair_kernel.hpp"

#include <immintrin.h>

#include <cstring>

namespace cavsync::kernels {

namespace {

struct c2 {
    __m256d v;
};

inline const double* dp(const cplx* p) { return reinterpret_cast<const double*>(p); }
inline double* dp(cplx* p) { return reinterpret_cast<double*>(p); }

inline c2 load(const cplx* p) { return {_mm256_loadu_pd(dp(p))}; }
inline void store(cplx* p, c2 x) { _mm256_storeu_pd(dp(p), x.v); }
inline c2 bcast(const cplx& z) {
    const double* d = dp(&z);
    return {_mm256_setr_pd(d[0], d[1], d[0], d[1])};
}
// [p0, p0, p1, p1]
inline __m256d dup_reals(const double* p) {
    return _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(p)), 0x50);
}

inline c2 operator+(c2 a, c2 b) { return {_mm256_add_pd(a.v, b.v)}; }
inline c2 operator-(c2 a, c2 b) { return {_mm256_sub_pd(a.v, b.v)}; }
inline c2 operator*(c2 a, __m256d s) { return {_mm256_mul_pd(a.v, s)}; }
inline c2 operator*(c2 a, c2 b) {
    const __m256d br = _mm256_movedup_pd(b.v);
    const __m256d bi = _mm256_permute_pd(b.v, 0xF);
    const __m256d as = _mm256_permute_pd(a.v, 0x5);
    return {_mm256_fmaddsub_pd(a.v, br, _mm256_mul_pd(as, bi))};
}
inline c2 conj(c2 a) { return {_mm256_xor_pd(a.v, _mm256_setr_pd(0.0, -0.0, 0.0, -0.0))}; }
inline c2 mul_i(c2 a) {
    const __m256d sw = _mm256_permute_pd(a.v, 0x5);
    return {_mm256_xor_pd(sw, _mm256_setr_pd(-0.0, 0.0, -0.0, 0.0))};
}
inline c2 real_part(c2 a) { return {_mm256_blend_pd(a.v, _mm256_setzero_pd(), 0b1010)}; }
inline c2 imag_as_real(c2 a) {
    return {_mm256_blend_pd(_mm256_permute_pd(a.v, 0xF), _mm256_setzero_pd(), 0b1010)};
}
inline __m256d splat(double s) { return _mm256_set1_pd(s); }

inline c2 closure(c2 ab, c2 bc, c2 ac, c2 a, c2 b, c2 c) {
    return ab * c + bc * a + ac * b - (a * b * c) * splat(2.0);
}

struct RowConst {
    c2 a, ac;
    c2 m1, z1, az1, am1, ap1, w1;
    c2 m1c, ap1c, az1c, w1c;
    __m256d g1, gn1;
    __m256d ge, eg;
};

struct Lanes {
    const cplx* m2;
    const cplx* z2;
    const cplx* az2;
    const cplx* am2;
    const cplx* ap2;
    const cplx* w2;
    const double* g2;
    const double* gn2;
    const cplx* mm;
    const cplx* zz;
    const cplx* zm;
    const cplx* zmr;
    const cplx* pm;
    cplx* dmm;
    cplx* dzz;
    cplx* dzm;
    cplx* dzmr;
    cplx* dpm;
    cplx* col_sz;
    cplx* col_sm;
    cplx* col_sp;
};

inline void body2(const RowConst& c, const Lanes& l, c2& row_sz, c2& row_sm, c2& row_sp) {
    const c2 m2 = load(l.m2);
    const c2 z2 = load(l.z2);
    const c2 az2 = load(l.az2);
    const c2 am2 = load(l.am2);
    const c2 ap2 = load(l.ap2);
    const c2 w2 = load(l.w2);
    const __m256d g2 = dup_reals(l.g2);
    const __m256d gn2 = dup_reals(l.gn2);

    const c2 MM = load(l.mm);
    const c2 ZZ = real_part(load(l.zz));
    const c2 ZM = load(l.zm);
    const c2 MZ = load(l.zmr);
    const c2 PM = load(l.pm);

    const c2 a_z1_m2 = closure(c.az1, ZM, am2, c.a, c.z1, m2);
    const c2 a_m1_z2 = closure(c.am1, MZ, az2, c.a, c.m1, z2);
    const c2 a_p1_z2 = closure(c.ap1, conj(MZ), az2, c.a, c.m1c, z2);
    const c2 a_p2_z1 = closure(ap2, conj(ZM), c.az1, c.a, conj(m2), c.z1);
    const c2 a_z1_z2 = closure(c.az1, ZZ, az2, c.a, c.z1, z2);
    const c2 a_p1_m2 = closure(c.ap1, PM, am2, c.a, c.m1c, m2);
    const c2 a_p2_m1 = closure(ap2, conj(PM), c.am1, c.a, conj(m2), c.m1);
    const c2 ad_m1_m2 = closure(c.ap1c, MM, conj(ap2), c.ac, c.m1, m2);
    const c2 ad_z1_m2 = closure(c.az1c, ZM, conj(ap2), c.ac, c.z1, m2);

    const c2 dmm = mul_i(a_z1_m2 * c.g1 + a_m1_z2 * g2 - (c.w1 + w2) * MM);
    const c2 dzz = imag_as_real(a_p1_z2 * (c.g1 * splat(4.0)) + a_p2_z1 * (g2 * splat(4.0))) +
                   real_part((c.z1 + z2) * c.eg - ZZ * (c.ge * splat(2.0)));
    const c2 dzm = mul_i(a_z1_z2 * g2 - w2 * ZM - (a_p1_m2 - ad_m1_m2) * (c.g1 * splat(2.0))) +
                   m2 * c.eg - ZM * c.ge;
    const c2 dzmr = mul_i(a_z1_z2 * c.g1 - c.w1 * MZ - (a_p2_m1 - ad_m1_m2) * (g2 * splat(2.0))) +
                    c.m1 * c.eg - MZ * c.ge;
    const c2 dpm = mul_i(a_p1_z2 * g2 - ad_z1_m2 * c.g1 - (w2 - c.w1c) * PM);

    store(l.dmm, dmm);
    store(l.dzz, dzz);
    store(l.dzm, dzm);
    store(l.dzmr, dzmr);
    store(l.dpm, dpm);

    row_sz = row_sz + ZM * gn2;
    row_sm = row_sm + MM * gn2;
    row_sp = row_sp + PM * gn2;
    store(l.col_sz, load(l.col_sz) + MZ * c.gn1);
    store(l.col_sm, load(l.col_sm) + MM * c.gn1);
    store(l.col_sp, load(l.col_sp) + conj(PM) * c.gn1);
}

inline void hsum_to(const c2& x, cplx& out) {
    alignas(32) double t[4];
    _mm256_store_pd(t, x.v);
    double* o = dp(&out);
    o[0] = t[0] + t[2];
    o[1] = t[1] + t[3];
}

}  // namespace

void pair_row_avx2(PairRow& r) {
    const int k = r.k;
    RowConst c{};
    c.a = bcast(r.a);
    c.ac = conj(c.a);
    c.m1 = bcast(r.cls.sm[k]);
    c.z1 = bcast(r.cls.sz[k]);
    c.az1 = bcast(r.cls.asz[k]);
    c.am1 = bcast(r.cls.asm_[k]);
    c.ap1 = bcast(r.cls.asp[k]);
    c.w1 = bcast(r.cls.omega[k]);
    c.m1c = conj(c.m1);
    c.ap1c = conj(c.ap1);
    c.az1c = conj(c.az1);
    c.w1c = conj(c.w1);
    c.g1 = splat(r.cls.g[k]);
    c.gn1 = splat(r.cls.gn[k]);
    c.ge = splat(r.gamma + r.eta);
    c.eg = splat(r.eta - r.gamma);

    c2 row_sz{_mm256_setzero_pd()}, row_sm{_mm256_setzero_pd()}, row_sp{_mm256_setzero_pd()};
    const int len = r.n_classes - k - 1;
    const int kp0 = k + 1;
    int i = 0;
    for (; i + 2 <= len; i += 2) {
        const int kp = kp0 + i;
        const Lanes l{r.cls.sm + kp,  r.cls.sz + kp,   r.cls.asz + kp, r.cls.asm_ + kp,
                      r.cls.asp + kp, r.cls.omega + kp, r.cls.g + kp,  r.cls.gn + kp,
                      r.mm + i,       r.zz + i,        r.zm + i,       r.zmr + i,
                      r.pm + i,       r.dmm + i,       r.dzz + i,      r.dzm + i,
                      r.dzmr + i,     r.dpm + i,       r.col_sz + kp,  r.col_sm + kp,
                      r.col_sp + kp};
        body2(c, l, row_sz, row_sm, row_sp);
    }
    if (i < len) {
        // Odd tail: run the two-lane body on a padded copy; the padding lane
        // has zero coupling and contributes nothing to the row sums.
        const int kp = kp0 + i;
        constexpr int kIn = 11;
        constexpr int kOut = 8;
        alignas(32) double in[kIn][4] = {};
        alignas(32) double out[kOut][4] = {};
        double g2[2] = {r.cls.g[kp], 0.0};
        double gn2[2] = {r.cls.gn[kp], 0.0};
        const cplx* src[kIn] = {r.cls.sm + kp, r.cls.sz + kp, r.cls.asz + kp, r.cls.asm_ + kp,
                                r.cls.asp + kp, r.cls.omega + kp, r.mm + i, r.zz + i, r.zm + i,
                                r.zmr + i, r.pm + i};
        for (int j = 0; j < kIn; ++j) std::memcpy(in[j], dp(src[j]), 2 * sizeof(double));
        std::memcpy(out[5], dp(r.col_sz + kp), 2 * sizeof(double));
        std::memcpy(out[6], dp(r.col_sm + kp), 2 * sizeof(double));
        std::memcpy(out[7], dp(r.col_sp + kp), 2 * sizeof(double));
        auto* ci = reinterpret_cast<const cplx*>(in);
        auto* co = reinterpret_cast<cplx*>(out);
        const Lanes l{ci + 0,  ci + 2,  ci + 4,  ci + 6,  ci + 8,  ci + 10, g2,
                      gn2,     ci + 12, ci + 14, ci + 16, ci + 18, ci + 20, co + 0,
                      co + 2,  co + 4,  co + 6,  co + 8,  co + 10, co + 12, co + 14};
        body2(c, l, row_sz, row_sm, row_sp);
        cplx* dst[kOut] = {r.dmm + i,    r.dzz + i,      r.dzm + i,     r.dzmr + i,
                           r.dpm + i,    r.col_sz + kp,  r.col_sm + kp, r.col_sp + kp};
        for (int j = 0; j < kOut; ++j) std::memcpy(dp(dst[j]), out[j], 2 * sizeof(double));
    }
    hsum_to(row_sz, r.row_sz);
    hsum_to(row_sm, r.row_sm);
    hsum_to(row_sp, r.row_sp);
}

}  // namespace cavsync::kernels
