// eom.hpp: right-hand side of the second-order cumulant equations for a
// cavity mode coupled to k frequency classes of two-level emitters.
//
// Every third-order moment is closed with factorize_third_order. Products
// containing a a+ are normal ordered first (a a+ X = a+a X + X).
//
// Sign and index conventions follow the exact Heisenberg-Langevin
// derivation from the Lindblad master equation with dissipators
//   kappa D[a], gamma D[s-], (gamma_phi / 2) D[sz], eta D[s+],
// so that every coherence decays at (gamma + eta)/2 + gamma_phi. The exact
// small-system oracle uses the same dissipators.

#pragma once

#include "cavsync/model.hpp"

#include <span>
#include <vector>

namespace cavsync {

// The <a sz> equation contains <a a+ s->. NormalOrdered expands it exactly;
// DropCommutator replaces it by <a+a s-> (drops the commutator term). The
// second variant exists only for sensitivity studies.
enum class AzOrdering { NormalOrdered, DropCommutator };

enum class KernelChoice { Auto, Scalar, Avx2 };

struct EomOptions {
    AzOrdering az_ordering = AzOrdering::NormalOrdered;
    KernelChoice kernel = KernelChoice::Auto;
    int threads = 1;
};

// <ABC> ~ <AB><C> + <BC><A> + <AC><B> - 2<A><B><C>
inline cplx factorize_third_order(cplx ab, cplx bc, cplx ac, cplx a, cplx b, cplx c) {
    return ab * c + bc * a + ac * b - 2.0 * a * b * c;
}

class ModelSystem {
public:
    ModelSystem(PhysicalParams params, std::vector<FrequencyClass> classes, DrivePulse drive,
                EomOptions options = {});

    [[nodiscard]] const PhysicalParams& params() const noexcept { return params_; }
    [[nodiscard]] const std::vector<FrequencyClass>& classes() const noexcept { return classes_; }
    [[nodiscard]] const DrivePulse& drive() const noexcept { return drive_; }
    [[nodiscard]] const EomOptions& options() const noexcept { return options_; }
    [[nodiscard]] const StateLayout& layout() const noexcept { return layout_; }
    [[nodiscard]] int n_classes() const noexcept { return layout_.n_classes(); }

    // delta_c - i kappa/2
    [[nodiscard]] cplx omega_cavity() const noexcept { return omega_c_; }
    // delta_k - i[(gamma + eta)/2 + gamma_phi]
    [[nodiscard]] cplx omega_class(int k) const { return omega_[static_cast<std::size_t>(k)]; }
    // Cavity-emitter detuning delta_c - delta_k.
    [[nodiscard]] double cavity_detuning(int k) const {
        return params_.delta_c - classes_[static_cast<std::size_t>(k)].delta;
    }
    [[nodiscard]] std::int64_t total_emitters() const noexcept;

    // Times at which the drive is discontinuous.
    [[nodiscard]] std::vector<double> breakpoints() const;

    void rhs(double t, std::span<const cplx> y, std::span<cplx> dydt) const;
    [[nodiscard]] CumulantState rhs(double t, const CumulantState& state) const;

    // <a+a> + sum_k N_k (<sz_k> + 1)/2
    [[nodiscard]] double total_excitation(const CumulantState& state) const;
    [[nodiscard]] double total_excitation(std::span<const cplx> y) const;

    [[nodiscard]] ModelSystem with_drive(DrivePulse drive) const;
    [[nodiscard]] ModelSystem with_params(PhysicalParams params) const;
    [[nodiscard]] ModelSystem with_options(EomOptions options) const;

private:
    PhysicalParams params_;
    std::vector<FrequencyClass> classes_;
    DrivePulse drive_;
    EomOptions options_;
    StateLayout layout_;
    cplx omega_c_;
    std::vector<cplx> omega_;
    std::vector<double> g_;
    std::vector<double> gn_;  // g_k N_k
};

}  // namespace cavsync
