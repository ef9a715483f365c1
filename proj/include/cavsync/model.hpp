// model.hpp: domain types and the flat layout of the cumulant state vector.
//
// All rates, couplings and detunings are angular frequencies (rad/s); all
// times are seconds. Conversion from ordinary frequencies happens once, when
// a configuration is parsed.

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cavsync {

using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Thrown for any bad input value or inconsistent combination of inputs.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct PhysicalParams {
    double kappa = 0.0;      // cavity energy decay
    double gamma = 0.0;      // emitter decay
    double gamma_phi = 0.0;  // dephasing; coherences decay at this rate
    double eta = 0.0;        // incoherent pump
    double delta_c = 0.0;    // cavity-pump detuning

    void validate() const;
};

struct FrequencyClass {
    double delta = 0.0;          // emitter-pump detuning
    std::int64_t n_emitters = 1;
    double g = 0.0;

    void validate() const;
};

// Square pulse: amplitude on [t_on, t_off), zero elsewhere.
struct DrivePulse {
    double amplitude = 0.0;
    double t_on = 0.0;
    double t_off = 0.0;

    [[nodiscard]] double at(double t) const noexcept {
        return (t >= t_on && t < t_off) ? amplitude : 0.0;
    }
    [[nodiscard]] double duration() const noexcept { return t_off - t_on; }
    void validate() const;
};

// Per-class moment slots. The last four are correlations between two
// distinct emitters of the same class.
enum class ClassMoment : std::uint8_t {
    Sm = 0,    // <s-_k>
    Sz,        // <sz_k>
    ASz,       // <a sz_k>
    ASm,       // <a s-_k>
    ASp,       // <a s+_k>
    SmSz,      // <s-_{k,i} sz_{k,i'}>
    SmSp,      // <s-_{k,i} s+_{k,i'}>
    SmSm,      // <s-_{k,i} s-_{k,i'}>
    SzSz,      // <sz_{k,i} sz_{k,i'}>
};

// Stored cross-class moments of an unordered pair k < k'. SzSm holds
// <sz_k s-_k'>, SzSmRev holds <sz_k' s-_k>; the other three follow from the
// k < k' value by exact operator identities.
enum class PairMoment : std::uint8_t {
    SmSm = 0,  // <s-_k s-_k'>
    SzSz,      // <sz_k sz_k'>
    SzSm,      // <sz_k s-_k'>
    SzSmRev,   // <sz_k' s-_k>
    SpSm,      // <s+_k s-_k'>
};

inline constexpr std::size_t kCavityMoments = 3;
inline constexpr std::size_t kClassMoments = 9;
inline constexpr std::size_t kPairMoments = 5;

// Identifies any first or second moment of the model, including the
// cross-class orderings that are reconstructed rather than stored.
struct MomentId {
    enum class Kind : std::uint8_t {
        A, A2, AdagA,
        Class,      // uses class_moment and k
        CrossSmSm,  // <s-_k s-_k'>, any order
        CrossSzSz,  // <sz_k sz_k'>, any order
        CrossSzSm,  // <sz_k s-_k'>, any order (both orders are stored)
        CrossSpSm,  // <s+_k s-_k'>, any order
    };
    Kind kind = Kind::A;
    ClassMoment class_moment = ClassMoment::Sm;
    int k = -1;
    int kp = -1;

    friend bool operator==(const MomentId&, const MomentId&) = default;
    [[nodiscard]] std::string to_string() const;
};

// Flat layout: cavity block (<a>, <a^2>, <a+a>), then one 9-slot block per
// class in ascending order, then five pair blocks (one per PairMoment), each
// holding k(k-1)/2 entries in lexicographic (k, k') order with k < k'.
class StateLayout {
public:
    explicit StateLayout(int n_classes);

    [[nodiscard]] int n_classes() const noexcept { return n_classes_; }
    [[nodiscard]] std::size_t n_pairs() const noexcept { return n_pairs_; }
    [[nodiscard]] std::size_t size() const noexcept {
        return kCavityMoments + kClassMoments * static_cast<std::size_t>(n_classes_) +
               kPairMoments * n_pairs_;
    }
    // Equation count when every ordered cross-class moment is kept separately.
    [[nodiscard]] std::size_t naive_equation_count() const noexcept {
        const auto k = static_cast<std::size_t>(n_classes_);
        return 3 + 9 * k + 4 * k * k;
    }

    static constexpr std::size_t a() noexcept { return 0; }
    static constexpr std::size_t a2() noexcept { return 1; }
    static constexpr std::size_t adag_a() noexcept { return 2; }

    [[nodiscard]] std::size_t class_base(int k) const noexcept {
        return kCavityMoments + kClassMoments * static_cast<std::size_t>(k);
    }
    [[nodiscard]] std::size_t cls(int k, ClassMoment m) const noexcept {
        return class_base(k) + static_cast<std::size_t>(m);
    }
    // Position of the unordered pair (k, k') with k < k' inside a pair block.
    [[nodiscard]] std::size_t pair_index(int k, int kp) const noexcept {
        const auto kk = static_cast<std::size_t>(k);
        const auto K = static_cast<std::size_t>(n_classes_);
        return kk * K - kk * (kk + 1) / 2 + static_cast<std::size_t>(kp - k - 1);
    }
    [[nodiscard]] std::size_t pair_block(PairMoment m) const noexcept {
        return kCavityMoments + kClassMoments * static_cast<std::size_t>(n_classes_) +
               static_cast<std::size_t>(m) * n_pairs_;
    }
    [[nodiscard]] std::size_t pair(PairMoment m, int k, int kp) const noexcept {
        return pair_block(m) + pair_index(k, kp);
    }

    // Index of a stored moment; nullopt for reconstructed orderings.
    [[nodiscard]] std::optional<std::size_t> index_of(const MomentId& id) const;
    // Inverse of index_of over the stored moments.
    [[nodiscard]] MomentId id_at(std::size_t index) const;

    friend bool operator==(const StateLayout&, const StateLayout&) = default;

private:
    int n_classes_;
    std::size_t n_pairs_;
};

StateLayout build_layout(int n_classes);

class CumulantState {
public:
    explicit CumulantState(StateLayout layout)
        : layout_(layout), data_(layout.size(), cplx{0.0, 0.0}) {}
    CumulantState(StateLayout layout, std::vector<cplx> data);

    [[nodiscard]] const StateLayout& layout() const noexcept { return layout_; }
    [[nodiscard]] std::span<const cplx> data() const noexcept { return data_; }
    [[nodiscard]] std::span<cplx> data() noexcept { return data_; }
    [[nodiscard]] std::vector<cplx>& vec() noexcept { return data_; }

    [[nodiscard]] cplx operator[](std::size_t i) const { return data_[i]; }
    cplx& operator[](std::size_t i) { return data_[i]; }

    [[nodiscard]] cplx a() const { return data_[StateLayout::a()]; }
    [[nodiscard]] double photons() const { return data_[StateLayout::adag_a()].real(); }
    [[nodiscard]] cplx cls(int k, ClassMoment m) const { return data_[layout_.cls(k, m)]; }
    [[nodiscard]] double sz(int k) const { return cls(k, ClassMoment::Sz).real(); }

private:
    StateLayout layout_;
    std::vector<cplx> data_;
};

CumulantState ground_state(const StateLayout& layout);

// Value of a cross-class moment in any ordering, reconstructed from the
// stored k < k' entries. Throws ValidationError for non-cross ids.
cplx expand_pair_moment(const CumulantState& state, const MomentId& id);

// Any value of a moment (stored or reconstructed).
cplx moment_value(const CumulantState& state, const MomentId& id);

// Reality and range checks on a state; returns human-readable violations.
std::vector<std::string> check_invariants(const CumulantState& state, double tol = 1e-9);

}  // namespace cavsync
