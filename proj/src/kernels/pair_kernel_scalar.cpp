#include "cavsync/kernels/pair_kernel.hpp"

namespace cavsync::kernels {

namespace {

inline cplx closure(cplx ab, cplx bc, cplx ac, cplx a, cplx b, cplx c) {
    return ab * c + bc * a + ac * b - 2.0 * a * b * c;
}

constexpr cplx I{0.0, 1.0};

}  // namespace

void pair_row_scalar(PairRow& r) {
    const int k = r.k;
    const cplx a = r.a;
    const cplx ac = std::conj(a);
    const double ge = r.gamma + r.eta;
    const double eg = r.eta - r.gamma;

    const cplx m1 = r.cls.sm[k];
    const cplx z1 = r.cls.sz[k];
    const cplx az1 = r.cls.asz[k];
    const cplx am1 = r.cls.asm_[k];
    const cplx ap1 = r.cls.asp[k];
    const cplx w1 = r.cls.omega[k];
    const double g1 = r.cls.g[k];
    const double gn1 = r.cls.gn[k];
    const cplx m1c = std::conj(m1);
    const cplx ap1c = std::conj(ap1);
    const cplx az1c = std::conj(az1);
    const cplx w1c = std::conj(w1);

    cplx row_sz{}, row_sm{}, row_sp{};
    const int len = r.n_classes - k - 1;
    for (int i = 0; i < len; ++i) {
        const int kp = k + 1 + i;
        const cplx m2 = r.cls.sm[kp];
        const cplx z2 = r.cls.sz[kp];
        const cplx az2 = r.cls.asz[kp];
        const cplx am2 = r.cls.asm_[kp];
        const cplx ap2 = r.cls.asp[kp];
        const cplx w2 = r.cls.omega[kp];
        const double g2 = r.cls.g[kp];
        const double gn2 = r.cls.gn[kp];

        const cplx MM = r.mm[i];
        const cplx ZZ{r.zz[i].real(), 0.0};
        const cplx ZM = r.zm[i];
        const cplx MZ = r.zmr[i];
        const cplx PM = r.pm[i];

        const cplx a_z1_m2 = closure(az1, ZM, am2, a, z1, m2);
        const cplx a_m1_z2 = closure(am1, MZ, az2, a, m1, z2);
        const cplx a_p1_z2 = closure(ap1, std::conj(MZ), az2, a, m1c, z2);
        const cplx a_p2_z1 = closure(ap2, std::conj(ZM), az1, a, std::conj(m2), z1);
        const cplx a_z1_z2 = closure(az1, ZZ, az2, a, z1, z2);
        const cplx a_p1_m2 = closure(ap1, PM, am2, a, m1c, m2);
        const cplx a_p2_m1 = closure(ap2, std::conj(PM), am1, a, std::conj(m2), m1);
        const cplx ad_m1_m2 = closure(ap1c, MM, std::conj(ap2), ac, m1, m2);
        const cplx ad_z1_m2 = closure(az1c, ZM, std::conj(ap2), ac, z1, m2);

        r.dmm[i] = -I * (w1 + w2) * MM + I * g1 * a_z1_m2 + I * g2 * a_m1_z2;
        const double dzz = 4.0 * g1 * a_p1_z2.imag() + 4.0 * g2 * a_p2_z1.imag() +
                           eg * (z1.real() + z2.real()) - 2.0 * ge * ZZ.real();
        r.dzz[i] = cplx{dzz, 0.0};
        r.dzm[i] = -I * w2 * ZM + I * g2 * a_z1_z2 - 2.0 * I * g1 * (a_p1_m2 - ad_m1_m2) +
                   eg * m2 - ge * ZM;
        r.dzmr[i] = -I * w1 * MZ + I * g1 * a_z1_z2 - 2.0 * I * g2 * (a_p2_m1 - ad_m1_m2) +
                    eg * m1 - ge * MZ;
        r.dpm[i] = -I * (w2 - w1c) * PM + I * g2 * a_p1_z2 - I * g1 * ad_z1_m2;

        row_sz += gn2 * ZM;
        row_sm += gn2 * MM;
        row_sp += gn2 * PM;
        r.col_sz[kp] += gn1 * MZ;
        r.col_sm[kp] += gn1 * MM;
        r.col_sp[kp] += gn1 * std::conj(PM);
    }
    r.row_sz = row_sz;
    r.row_sm = row_sm;
    r.row_sp = row_sp;
}

}  // namespace cavsync::kernels
