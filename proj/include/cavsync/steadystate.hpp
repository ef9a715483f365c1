// steadystate.hpp: steady states under incoherent pumping and (eta, Delta)
// sweeps of the two-ensemble model.

#pragma once

#include "cavsync/eom.hpp"
#include "cavsync/integrate.hpp"
#include "cavsync/model.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace cavsync {

enum class SteadyStatus { Converged, NotConverged, LimitCycle };

const char* to_string(SteadyStatus s);

struct SteadyStateOptions {
    double ss_tol = 1e-8;
    double t_max = 0.0;  // 0 selects 50 / min(kappa, gamma + eta)
    IntegratorConfig integrator{};
    // Extra rate included in the characteristic scale (e.g. the Purcell rate).
    double extra_rate = 0.0;
};

struct SteadyStateResult {
    CumulantState state;
    bool converged = false;
    SteadyStatus status = SteadyStatus::NotConverged;
    double residual = 0.0;   // weighted rhs norm at the returned state (rad/s)
    double tolerance = 0.0;  // ss_tol times the characteristic rate
    double elapsed_model_time = 0.0;
};

// RMS over components of |f_i| / (1 + |y_i|); a rate in rad/s.
double weighted_residual(const ModelSystem& system, double t, std::span<const cplx> y);

// Characteristic scale max(kappa, gamma, eta, extra).
double characteristic_rate(const PhysicalParams& p, double extra_rate);

double default_t_max(const PhysicalParams& p);

SteadyStateResult find_steady_state(const ModelSystem& system, const SteadyStateOptions& options,
                                    const std::optional<CumulantState>& initial = std::nullopt);

// Incoherent state with all <sz> = sz0 and no coherence anywhere.
CumulantState incoherent_state(const StateLayout& layout, double sz0);

enum class DetuningConvention {
    Symmetric,  // ensembles at delta_c -+ Delta/2
    OneSided,   // ensemble A at delta_c, B at delta_c - Delta
};

struct TwoEnsembleSpec {
    PhysicalParams params;  // eta is overridden per grid point
    std::int64_t n_a = 1;
    std::int64_t n_b = 1;
    double g = 0.0;
    DetuningConvention convention = DetuningConvention::Symmetric;
};

std::vector<FrequencyClass> two_ensemble_classes(const TwoEnsembleSpec& spec, double delta);

struct SweepPoint {
    double eta = 0.0;
    double delta = 0.0;
    double n_photons = 0.0;
    double coh_cross = 0.0;              // |<s+_A s-_B>|
    double coh_same = 0.0;               // |<s+_{A,i} s-_{A,i'}>|
    std::optional<double> sigma_ratio;   // empty when undefined
    SteadyStatus status = SteadyStatus::NotConverged;
    double residual = 0.0;
};

struct SweepGrid {
    std::vector<double> etas;
    std::vector<double> deltas;
    std::vector<SweepPoint> points;  // row-major: eta index outer, delta inner

    [[nodiscard]] const SweepPoint& at(std::size_t i_eta, std::size_t i_delta) const {
        return points[i_eta * deltas.size() + i_delta];
    }
};

// Each grid point is solved independently from the ground state. threads > 1
// distributes points; the result does not depend on the thread count.
SweepGrid sweep_grid(const TwoEnsembleSpec& spec, const std::vector<double>& etas,
                     const std::vector<double>& deltas, const SteadyStateOptions& options,
                     int threads = 1);

// Rates are written in Hz (divided by 2 pi).
void write_sweep_csv(std::ostream& out, const SweepGrid& grid);

}  // namespace cavsync
