#include "cavsync/model.hpp"

#include <cmath>
#include <fmt/format.h>

namespace cavsync {

namespace {

void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) {
        throw ValidationError(std::string(name) + " must be finite");
    }
}

void require_non_negative(double v, const char* name) {
    require_finite(v, name);
    if (v < 0.0) {
        throw ValidationError(std::string(name) + " must be >= 0");
    }
}

}  // namespace

void PhysicalParams::validate() const {
    require_non_negative(kappa, "kappa");
    require_non_negative(gamma, "gamma");
    require_non_negative(gamma_phi, "gamma_phi");
    require_non_negative(eta, "eta");
    require_finite(delta_c, "delta_c");
}

void FrequencyClass::validate() const {
    require_finite(delta, "class detuning");
    require_non_negative(g, "g");
    if (n_emitters < 1) {
        throw ValidationError("class emitter count must be >= 1");
    }
}

void DrivePulse::validate() const {
    require_non_negative(amplitude, "drive amplitude");
    require_finite(t_on, "t_on");
    require_finite(t_off, "t_off");
    if (t_on > t_off) {
        throw ValidationError("drive t_on must not exceed t_off");
    }
}

std::string MomentId::to_string() const {
    static constexpr const char* class_names[] = {
        "s-", "sz", "a sz", "a s-", "a s+", "s- sz (same)", "s- s+ (same)", "s- s- (same)",
        "sz sz (same)"};
    switch (kind) {
        case Kind::A: return "a";
        case Kind::A2: return "a^2";
        case Kind::AdagA: return "a+a";
        case Kind::Class:
            return fmt::format("{}[{}]", class_names[static_cast<int>(class_moment)], k);
        case Kind::CrossSmSm: return fmt::format("s-[{}] s-[{}]", k, kp);
        case Kind::CrossSzSz: return fmt::format("sz[{}] sz[{}]", k, kp);
        case Kind::CrossSzSm: return fmt::format("sz[{}] s-[{}]", k, kp);
        case Kind::CrossSpSm: return fmt::format("s+[{}] s-[{}]", k, kp);
    }
    return "?";
}

StateLayout::StateLayout(int n_classes) : n_classes_(n_classes), n_pairs_(0) {
    if (n_classes < 1) {
        throw ValidationError("layout needs at least one frequency class");
    }
    const auto k = static_cast<std::size_t>(n_classes);
    n_pairs_ = k * (k - 1) / 2;
}

StateLayout build_layout(int n_classes) { return StateLayout(n_classes); }

std::optional<std::size_t> StateLayout::index_of(const MomentId& id) const {
    using K = MomentId::Kind;
    const auto in_range = [&](int c) { return c >= 0 && c < n_classes_; };
    switch (id.kind) {
        case K::A: return a();
        case K::A2: return a2();
        case K::AdagA: return adag_a();
        case K::Class:
            if (!in_range(id.k)) return std::nullopt;
            return cls(id.k, id.class_moment);
        default: break;
    }
    if (!in_range(id.k) || !in_range(id.kp) || id.k == id.kp) return std::nullopt;
    const bool ordered = id.k < id.kp;
    const int lo = ordered ? id.k : id.kp;
    const int hi = ordered ? id.kp : id.k;
    switch (id.kind) {
        case K::CrossSmSm:
            return ordered ? std::optional(pair(PairMoment::SmSm, lo, hi)) : std::nullopt;
        case K::CrossSzSz:
            return ordered ? std::optional(pair(PairMoment::SzSz, lo, hi)) : std::nullopt;
        case K::CrossSpSm:
            return ordered ? std::optional(pair(PairMoment::SpSm, lo, hi)) : std::nullopt;
        case K::CrossSzSm:
            return pair(ordered ? PairMoment::SzSm : PairMoment::SzSmRev, lo, hi);
        default: return std::nullopt;
    }
}

MomentId StateLayout::id_at(std::size_t index) const {
    using K = MomentId::Kind;
    if (index >= size()) {
        throw ValidationError(fmt::format("moment index {} out of range", index));
    }
    if (index < kCavityMoments) {
        static constexpr K cavity[] = {K::A, K::A2, K::AdagA};
        return MomentId{cavity[index]};
    }
    std::size_t rel = index - kCavityMoments;
    const std::size_t class_span = kClassMoments * static_cast<std::size_t>(n_classes_);
    if (rel < class_span) {
        return MomentId{K::Class, static_cast<ClassMoment>(rel % kClassMoments),
                        static_cast<int>(rel / kClassMoments)};
    }
    rel -= class_span;
    const auto block = static_cast<PairMoment>(rel / n_pairs_);
    std::size_t p = rel % n_pairs_;
    // Invert pair_index by walking rows; rows are short enough for this.
    int k = 0;
    std::size_t row_len = static_cast<std::size_t>(n_classes_ - 1);
    while (p >= row_len) {
        p -= row_len;
        ++k;
        --row_len;
    }
    const int kp = k + 1 + static_cast<int>(p);
    switch (block) {
        case PairMoment::SmSm: return MomentId{K::CrossSmSm, ClassMoment::Sm, k, kp};
        case PairMoment::SzSz: return MomentId{K::CrossSzSz, ClassMoment::Sm, k, kp};
        case PairMoment::SzSm: return MomentId{K::CrossSzSm, ClassMoment::Sm, k, kp};
        case PairMoment::SzSmRev: return MomentId{K::CrossSzSm, ClassMoment::Sm, kp, k};
        case PairMoment::SpSm: return MomentId{K::CrossSpSm, ClassMoment::Sm, k, kp};
    }
    throw ValidationError("corrupt pair block");
}

CumulantState::CumulantState(StateLayout layout, std::vector<cplx> data)
    : layout_(layout), data_(std::move(data)) {
    if (data_.size() != layout_.size()) {
        throw ValidationError(fmt::format("state has {} entries, layout expects {}",
                                          data_.size(), layout_.size()));
    }
}

CumulantState ground_state(const StateLayout& layout) {
    CumulantState s(layout);
    const int K = layout.n_classes();
    for (int k = 0; k < K; ++k) {
        s[layout.cls(k, ClassMoment::Sz)] = -1.0;
        s[layout.cls(k, ClassMoment::SzSz)] = 1.0;
        for (int kp = k + 1; kp < K; ++kp) {
            s[layout.pair(PairMoment::SzSz, k, kp)] = 1.0;
        }
    }
    return s;
}

cplx expand_pair_moment(const CumulantState& state, const MomentId& id) {
    using K = MomentId::Kind;
    const auto& layout = state.layout();
    const bool cross = id.kind == K::CrossSmSm || id.kind == K::CrossSzSz ||
                       id.kind == K::CrossSzSm || id.kind == K::CrossSpSm;
    if (!cross || id.k == id.kp || id.k < 0 || id.kp < 0 || id.k >= layout.n_classes() ||
        id.kp >= layout.n_classes()) {
        throw ValidationError("not a cross-class moment: " + id.to_string());
    }
    if (auto idx = layout.index_of(id)) {
        return state[*idx];
    }
    // Reversed orderings of the symmetric kinds.
    const int lo = id.kp;
    const int hi = id.k;
    switch (id.kind) {
        case K::CrossSmSm: return state[layout.pair(PairMoment::SmSm, lo, hi)];
        case K::CrossSzSz: return state[layout.pair(PairMoment::SzSz, lo, hi)];
        case K::CrossSpSm: return std::conj(state[layout.pair(PairMoment::SpSm, lo, hi)]);
        default: break;
    }
    throw ValidationError("unreachable moment ordering: " + id.to_string());
}

cplx moment_value(const CumulantState& state, const MomentId& id) {
    if (auto idx = state.layout().index_of(id)) {
        return state[*idx];
    }
    return expand_pair_moment(state, id);
}

std::vector<std::string> check_invariants(const CumulantState& state, double tol) {
    std::vector<std::string> out;
    const auto& L = state.layout();
    const cplx n = state[StateLayout::adag_a()];
    if (std::abs(n.imag()) > tol) out.push_back(fmt::format("<a+a> imaginary part {}", n.imag()));
    if (n.real() < -tol) out.push_back(fmt::format("<a+a> negative: {}", n.real()));
    for (int k = 0; k < L.n_classes(); ++k) {
        const cplx z = state.cls(k, ClassMoment::Sz);
        if (std::abs(z.imag()) > tol) out.push_back(fmt::format("<sz[{}]> imaginary {}", k, z.imag()));
        if (z.real() < -1.0 - 1e-6 || z.real() > 1.0 + 1e-6) {
            out.push_back(fmt::format("<sz[{}]> out of range: {}", k, z.real()));
        }
        if (std::abs(state.cls(k, ClassMoment::SmSp).imag()) > tol) {
            out.push_back(fmt::format("same-class <s- s+>[{}] not real", k));
        }
        if (std::abs(state.cls(k, ClassMoment::SzSz).imag()) > tol) {
            out.push_back(fmt::format("same-class <sz sz>[{}] not real", k));
        }
    }
    return out;
}

}  // namespace cavsync
