#include "cavsync/eom.hpp"

#include "cavsync/kernels/pair_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

#if defined(CAVSYNC_HAVE_OPENMP)
#include <omp.h>
#endif

namespace cavsync {

namespace {

constexpr cplx I{0.0, 1.0};

kernels::PairRowKernel pick_kernel(KernelChoice choice) {
    switch (choice) {
        case KernelChoice::Scalar: return kernels::select_pair_kernel(false);
        case KernelChoice::Avx2: return kernels::select_pair_kernel(true, true);
        case KernelChoice::Auto: break;
    }
    return kernels::select_pair_kernel(true);
}

// Row ranges [begin, end) with approximately equal pair counts.
std::vector<int> partition_rows(int K, int parts) {
    std::vector<int> bounds{0};
    const double total = 0.5 * K * (K - 1.0);
    double acc = 0.0;
    int part = 1;
    for (int k = 0; k < K - 1 && part < parts; ++k) {
        acc += K - k - 1;
        if (acc >= total * part / parts) {
            bounds.push_back(k + 1);
            ++part;
        }
    }
    bounds.push_back(std::max(K - 1, 0));
    bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
    if (bounds.size() == 1) bounds.push_back(bounds.front());
    return bounds;
}

}  // namespace

ModelSystem::ModelSystem(PhysicalParams params, std::vector<FrequencyClass> classes,
                         DrivePulse drive, EomOptions options)
    : params_(params),
      classes_(std::move(classes)),
      drive_(drive),
      options_(options),
      layout_(static_cast<int>(classes_.empty() ? 0 : classes_.size())) {
    params_.validate();
    drive_.validate();
    for (const auto& c : classes_) c.validate();
    if (options_.threads < 1) throw ValidationError("thread count must be >= 1");
    omega_c_ = cplx{params_.delta_c, -0.5 * params_.kappa};
    const double coh_decay = 0.5 * (params_.gamma + params_.eta) + params_.gamma_phi;
    omega_.reserve(classes_.size());
    for (const auto& c : classes_) {
        omega_.emplace_back(c.delta, -coh_decay);
        g_.push_back(c.g);
        gn_.push_back(c.g * static_cast<double>(c.n_emitters));
    }
    if (options_.kernel == KernelChoice::Avx2) pick_kernel(options_.kernel);
}

std::int64_t ModelSystem::total_emitters() const noexcept {
    std::int64_t n = 0;
    for (const auto& c : classes_) n += c.n_emitters;
    return n;
}

std::vector<double> ModelSystem::breakpoints() const {
    if (drive_.amplitude == 0.0 || drive_.t_on == drive_.t_off) return {};
    return {drive_.t_on, drive_.t_off};
}

ModelSystem ModelSystem::with_drive(DrivePulse drive) const {
    return ModelSystem(params_, classes_, drive, options_);
}
ModelSystem ModelSystem::with_params(PhysicalParams params) const {
    return ModelSystem(params, classes_, drive_, options_);
}
ModelSystem ModelSystem::with_options(EomOptions options) const {
    return ModelSystem(params_, classes_, drive_, options);
}

double ModelSystem::total_excitation(std::span<const cplx> y) const {
    double e = y[StateLayout::adag_a()].real();
    for (int k = 0; k < n_classes(); ++k) {
        const double z = y[layout_.cls(k, ClassMoment::Sz)].real();
        e += static_cast<double>(classes_[static_cast<std::size_t>(k)].n_emitters) * 0.5 *
             (z + 1.0);
    }
    return e;
}

double ModelSystem::total_excitation(const CumulantState& state) const {
    return total_excitation(state.data());
}

CumulantState ModelSystem::rhs(double t, const CumulantState& state) const {
    if (!(state.layout() == layout_)) {
        throw ValidationError("state layout does not match the model system");
    }
    CumulantState out(layout_);
    rhs(t, state.data(), out.data());
    return out;
}

void ModelSystem::rhs(double t, std::span<const cplx> y, std::span<cplx> dy) const {
    if (y.size() != layout_.size() || dy.size() != layout_.size()) {
        throw ValidationError(fmt::format("rhs dimension mismatch: got {} / {}, expected {}",
                                          y.size(), dy.size(), layout_.size()));
    }
    const int K = n_classes();
    const auto Ks = static_cast<std::size_t>(K);
    const double F = drive_.at(t);
    const double gamma = params_.gamma;
    const double eta = params_.eta;
    const cplx wc = omega_c_;

    const cplx a = y[StateLayout::a()];
    const cplx ac = std::conj(a);
    const cplx a2 = y[StateLayout::a2()];
    const double n = y[StateLayout::adag_a()].real();

    // Per-class first and cavity-emitter moments, structure of arrays.
    std::vector<cplx> sm(Ks), sz(Ks), asz(Ks), asm_(Ks), asp(Ks);
    for (int k = 0; k < K; ++k) {
        const std::size_t b = layout_.class_base(k);
        const auto kk = static_cast<std::size_t>(k);
        sm[kk] = y[b + static_cast<std::size_t>(ClassMoment::Sm)];
        sz[kk] = cplx{y[b + static_cast<std::size_t>(ClassMoment::Sz)].real(), 0.0};
        asz[kk] = y[b + static_cast<std::size_t>(ClassMoment::ASz)];
        asm_[kk] = y[b + static_cast<std::size_t>(ClassMoment::ASm)];
        asp[kk] = y[b + static_cast<std::size_t>(ClassMoment::ASp)];
    }

    // Cross-class sums S[k] = sum_{k' != k} g_k' N_k' <X_k Y_k'>.
    std::vector<cplx> cross_sz(Ks), cross_sm(Ks), cross_sp(Ks);
    if (K > 1) {
        const kernels::ClassArrays cls{sm.data(),    sz.data(), asz.data(), asm_.data(),
                                       asp.data(),   omega_.data(), g_.data(), gn_.data()};
        const auto kernel = pick_kernel(options_.kernel);
        const cplx* base = y.data();
        cplx* dbase = dy.data();
        const auto block = [&](PairMoment m) { return layout_.pair_block(m); };
        const std::size_t b_mm = block(PairMoment::SmSm), b_zz = block(PairMoment::SzSz),
                          b_zm = block(PairMoment::SzSm), b_zmr = block(PairMoment::SzSmRev),
                          b_pm = block(PairMoment::SpSm);

        const auto bounds = partition_rows(K, options_.threads);
        const int parts = static_cast<int>(bounds.size()) - 1;
        // Thread-private column accumulators, reduced below in part order.
        std::vector<cplx> cols(static_cast<std::size_t>(parts) * 3 * Ks, cplx{});
        std::vector<cplx> row_sz(Ks), row_sm(Ks), row_sp(Ks);

        const auto run_part = [&](int part) {
            cplx* col = cols.data() + static_cast<std::size_t>(part) * 3 * Ks;
            kernels::PairRow r;
            r.n_classes = K;
            r.a = a;
            r.gamma = gamma;
            r.eta = eta;
            r.cls = cls;
            r.col_sz = col;
            r.col_sm = col + Ks;
            r.col_sp = col + 2 * Ks;
            for (int k = bounds[static_cast<std::size_t>(part)];
                 k < bounds[static_cast<std::size_t>(part) + 1]; ++k) {
                const std::size_t p0 = layout_.pair_index(k, k + 1);
                r.k = k;
                r.mm = base + b_mm + p0;
                r.zz = base + b_zz + p0;
                r.zm = base + b_zm + p0;
                r.zmr = base + b_zmr + p0;
                r.pm = base + b_pm + p0;
                r.dmm = dbase + b_mm + p0;
                r.dzz = dbase + b_zz + p0;
                r.dzm = dbase + b_zm + p0;
                r.dzmr = dbase + b_zmr + p0;
                r.dpm = dbase + b_pm + p0;
                kernel(r);
                const auto kk = static_cast<std::size_t>(k);
                row_sz[kk] = r.row_sz;
                row_sm[kk] = r.row_sm;
                row_sp[kk] = r.row_sp;
            }
        };

#if defined(CAVSYNC_HAVE_OPENMP)
        if (parts > 1) {
#pragma omp parallel for schedule(static, 1) num_threads(parts)
            for (int part = 0; part < parts; ++part) run_part(part);
        } else {
            run_part(0);
        }
#else
        for (int part = 0; part < parts; ++part) run_part(part);
#endif
        for (std::size_t k = 0; k < Ks; ++k) {
            cplx s_z = row_sz[k], s_m = row_sm[k], s_p = row_sp[k];
            for (int part = 0; part < parts; ++part) {
                const cplx* col = cols.data() + static_cast<std::size_t>(part) * 3 * Ks;
                s_z += col[k];
                s_m += col[Ks + k];
                s_p += col[2 * Ks + k];
            }
            cross_sz[k] = s_z;
            cross_sm[k] = s_m;
            cross_sp[k] = s_p;
        }
    }

    // Cavity block.
    cplx sum_gn_m{}, sum_gn_am{};
    double sum_gn_im_ap = 0.0;
    for (std::size_t k = 0; k < Ks; ++k) {
        sum_gn_m += gn_[k] * sm[k];
        sum_gn_am += gn_[k] * asm_[k];
        sum_gn_im_ap += gn_[k] * asp[k].imag();
    }
    dy[StateLayout::a()] = -I * wc * a - I * sum_gn_m - I * F;
    dy[StateLayout::a2()] = -2.0 * I * wc * a2 - 2.0 * I * sum_gn_am - 2.0 * I * F * a;
    dy[StateLayout::adag_a()] =
        cplx{-2.0 * sum_gn_im_ap - 2.0 * F * a.imag() - params_.kappa * n, 0.0};

    const double ge = gamma + eta;
    const double eg = eta - gamma;
    const double abs_a2 = std::norm(a);
    const double commutator_sign = options_.az_ordering == AzOrdering::NormalOrdered ? 1.0 : -1.0;

    for (int k = 0; k < K; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const std::size_t b = layout_.class_base(k);
        const auto at = [&](ClassMoment m) { return y[b + static_cast<std::size_t>(m)]; };
        const auto out = [&](ClassMoment m) -> cplx& { return dy[b + static_cast<std::size_t>(m)]; };

        const double g = g_[kk];
        const double nm1 = static_cast<double>(classes_[kk].n_emitters - 1);
        const cplx w = omega_[kk];
        const cplx m = sm[kk];
        const cplx mc = std::conj(m);
        const double z = sz[kk].real();
        const cplx az = asz[kk];
        const cplx am = asm_[kk];
        const cplx ap = asp[kk];
        const cplx apc = std::conj(ap);
        const cplx azc = std::conj(az);
        const cplx MZs = at(ClassMoment::SmSz);
        const double PMs = at(ClassMoment::SmSp).real();
        const cplx MMs = at(ClassMoment::SmSm);
        const double ZZs = at(ClassMoment::SzSz).real();

        // Third-order closures.
        const cplx a_a_p = factorize_third_order(a2, ap, ap, a, a, mc);         // <a a s+>
        const cplx ad_a_m = factorize_third_order(n, am, apc, ac, a, m);        // <a+ a s->
        const cplx a_a_z = factorize_third_order(a2, az, az, a, a, z);          // <a a sz>
        const cplx ad_a_z = n * z + az * ac + azc * a - 2.0 * abs_a2 * z;       // <a+ a sz>
        const cplx a_zz_s = factorize_third_order(az, ZZs, az, a, z, z);        // <a sz sz'>
        const cplx a_p_m_s = factorize_third_order(ap, PMs, am, a, mc, m);      // <a s+' s->
        const cplx ad_m_m_s = factorize_third_order(apc, MMs, apc, ac, m, m);   // <a+ s- s-'>
        const cplx ad_m_z_s = factorize_third_order(apc, MZs, azc, ac, m, z);   // <a+ s- sz'>
        const cplx a_m_z_s = factorize_third_order(am, MZs, az, a, m, z);       // <a s- sz'>
        const cplx a_p_z_s = factorize_third_order(ap, std::conj(MZs), az, a, mc, z);  // <a s+ sz'>

        out(ClassMoment::Sm) = -I * w * m + I * g * az;
        out(ClassMoment::Sz) = cplx{4.0 * g * ap.imag() - gamma * (1.0 + z) + eta * (1.0 - z), 0.0};
        out(ClassMoment::ASz) = -I * wc * az + commutator_sign * I * g * m -
                                I * g * nm1 * MZs - I * cross_sz[kk] -
                                2.0 * I * g * (a_a_p - ad_a_m) - gamma * (a + az) +
                                eta * (a - az) - I * F * z;
        out(ClassMoment::ASm) = -I * (wc + w) * am - I * cross_sm[kk] - I * g * nm1 * MMs +
                                I * g * a_a_z - I * F * m;
        out(ClassMoment::ASp) = I * (std::conj(w) - wc) * ap - 0.5 * I * g * (1.0 + z) -
                                I * g * ad_a_z - I * g * nm1 * PMs - I * cross_sp[kk] -
                                I * F * mc;
        out(ClassMoment::SmSz) = -I * w * MZs + I * g * a_zz_s -
                                 2.0 * I * g * (a_p_m_s - ad_m_m_s) + eg * m - ge * MZs;
        out(ClassMoment::SmSp) = cplx{2.0 * w.imag() * PMs + 2.0 * g * ad_m_z_s.imag(), 0.0};
        out(ClassMoment::SmSm) = -2.0 * I * w * MMs + 2.0 * I * g * a_m_z_s;
        out(ClassMoment::SzSz) =
            cplx{8.0 * g * a_p_z_s.imag() + 2.0 * eg * z - 2.0 * ge * ZZs, 0.0};
    }
}

}  // namespace cavsync
