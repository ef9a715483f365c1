// Shared fixtures for the unit tests.
#pragma once

#include "cavsync/eom.hpp"
#include "cavsync/model.hpp"

#include <random>
#include <vector>

namespace testutil {

using cavsync::cplx;

struct SpinTilt {
    double theta = 0.0;  // 0 is the ground state
    double phi = 0.0;
};

// Moments of a product state: coherent field alpha, every emitter of class k
// in cos(t/2)|g> + e^{i phi} sin(t/2)|e>. Written out by hand, independent of
// the library's own state builders.
inline cavsync::CumulantState product_state(int n_classes, const std::vector<SpinTilt>& tilt,
                                            cplx alpha) {
    using cavsync::ClassMoment;
    using cavsync::PairMoment;
    cavsync::StateLayout L(n_classes);
    cavsync::CumulantState s(L);
    std::vector<cplx> sm(n_classes), z(n_classes);
    for (int k = 0; k < n_classes; ++k) {
        const auto& t = tilt[static_cast<std::size_t>(k)];
        sm[k] = 0.5 * std::sin(t.theta) * std::polar(1.0, t.phi);
        z[k] = -std::cos(t.theta);
    }
    s[L.a()] = alpha;
    s[L.a2()] = alpha * alpha;
    s[L.adag_a()] = std::norm(alpha);
    for (int k = 0; k < n_classes; ++k) {
        s[L.cls(k, ClassMoment::Sm)] = sm[k];
        s[L.cls(k, ClassMoment::Sz)] = z[k];
        s[L.cls(k, ClassMoment::ASz)] = alpha * z[k];
        s[L.cls(k, ClassMoment::ASm)] = alpha * sm[k];
        s[L.cls(k, ClassMoment::ASp)] = alpha * std::conj(sm[k]);
        s[L.cls(k, ClassMoment::SmSz)] = sm[k] * z[k];
        s[L.cls(k, ClassMoment::SmSp)] = sm[k] * std::conj(sm[k]);
        s[L.cls(k, ClassMoment::SmSm)] = sm[k] * sm[k];
        s[L.cls(k, ClassMoment::SzSz)] = z[k] * z[k];
        for (int kp = k + 1; kp < n_classes; ++kp) {
            s[L.pair(PairMoment::SmSm, k, kp)] = sm[k] * sm[kp];
            s[L.pair(PairMoment::SzSz, k, kp)] = z[k] * z[kp];
            s[L.pair(PairMoment::SzSm, k, kp)] = z[k] * sm[kp];
            s[L.pair(PairMoment::SzSmRev, k, kp)] = z[kp] * sm[k];
            s[L.pair(PairMoment::SpSm, k, kp)] = std::conj(sm[k]) * sm[kp];
        }
    }
    return s;
}

inline cavsync::CumulantState random_state(int n_classes, std::mt19937_64& rng, double scale = 0.3) {
    std::uniform_real_distribution<double> u(-scale, scale);
    cavsync::CumulantState s{cavsync::StateLayout(n_classes)};
    for (auto& v : s.vec()) v = {u(rng), u(rng)};
    return s;
}

inline std::vector<cavsync::FrequencyClass> random_classes(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-5e7, 5e7);
    std::uniform_real_distribution<double> gg(5e3, 2e4);
    std::uniform_int_distribution<int> nn(1, 10'000);
    std::vector<cavsync::FrequencyClass> out;
    for (int k = 0; k < n; ++k) out.push_back({d(rng), nn(rng), gg(rng)});
    return out;
}

inline double max_abs(std::span<const cplx> v) {
    double m = 0.0;
    for (const auto& x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace testutil
