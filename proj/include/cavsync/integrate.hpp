// integrate.hpp: explicit Runge-Kutta integration of complex ODE systems with
// breakpoints and dense output on a user grid, plus the transient driver for
// the cumulant model.

#pragma once

#include "cavsync/eom.hpp"
#include "cavsync/model.hpp"

#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cavsync {

enum class Method {
    Dopri5,  // adaptive 5(4) Dormand-Prince pair
    Rk4,     // classical fixed-step fourth order
};

enum class DenseOutput {
    Hermite,  // cubic Hermite through both step ends
    Dopri,    // the pair's own fourth-order continuous extension
};

struct IntegratorConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double max_step = std::numeric_limits<double>::infinity();
    // Adaptive: first trial step (0 picks one automatically). Rk4: the step.
    double initial_step = 0.0;
    Method method = Method::Dopri5;
    DenseOutput dense = DenseOutput::Hermite;
    std::size_t max_steps = 50'000'000;

    void validate() const;
};

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double time, double state_norm)
        : std::runtime_error(what), time_(time), state_norm_(state_norm) {}
    [[nodiscard]] double time() const noexcept { return time_; }
    [[nodiscard]] double state_norm() const noexcept { return state_norm_; }

private:
    double time_;
    double state_norm_;
};

struct IntegrationStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;
    double smallest_step = std::numeric_limits<double>::infinity();
    double largest_step = 0.0;
};

using OdeRhs = std::function<void(double, std::span<const cplx>, std::span<cplx>)>;
using Sampler = std::function<void(double, std::span<const cplx>)>;

// Integrates y from t0 to t1 in place. Steps never straddle a breakpoint, and
// right-hand-side evaluations inside [b_i, b_{i+1}] never see a time at or
// beyond b_{i+1}, so piecewise-constant forcing defined on half-open
// intervals is resolved exactly. on_sample is invoked once per grid point.
IntegrationStats solve_ode(const OdeRhs& rhs, std::vector<cplx>& y, double t0, double t1,
                           std::span<const double> grid, std::span<const double> breakpoints,
                           const IntegratorConfig& config, const Sampler& on_sample = {});

// Equally spaced grid t0, t0 + dt, ... up to and including t1 (within dt/1e6).
std::vector<double> uniform_grid(double t0, double t1, double dt);

class TimeSeries {
public:
    std::vector<double> times;

    std::size_t add_channel(std::string name);
    [[nodiscard]] std::size_t n_channels() const noexcept { return names_.size(); }
    [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }
    [[nodiscard]] bool has(const std::string& name) const;
    [[nodiscard]] std::span<const double> channel(const std::string& name) const;
    [[nodiscard]] std::span<const double> channel(std::size_t i) const { return data_[i]; }
    std::vector<double>& channel_mut(std::size_t i) { return data_[i]; }

    // Checks the structural invariants: increasing times, equal lengths.
    void validate() const;

private:
    std::vector<std::string> names_;
    std::vector<std::vector<double>> data_;
};

struct ChannelSelection {
    // Class pairs (k, k') whose <s+_k s-_k'> is recorded as re/im channels.
    // k == k' records the same-class coherence.
    std::vector<std::pair<int, int>> coherence_pairs;
};

std::string sz_channel(int k);
std::string coherence_channel(const char* part, int k, int kp);

// <s+_k s-_k'>; for k == k' the correlation of two distinct emitters of k.
cplx cross_coherence(const CumulantState& state, int k, int kp);

// Builds the channel list for a layout and appends one sample per call.
class ChannelRecorder {
public:
    ChannelRecorder(const StateLayout& layout, ChannelSelection selection);
    void record(double t, std::span<const cplx> y);
    [[nodiscard]] TimeSeries& series() noexcept { return series_; }
    [[nodiscard]] TimeSeries take() && { return std::move(series_); }

private:
    StateLayout layout_;
    ChannelSelection selection_;
    TimeSeries series_;
};

struct TransientResult {
    TimeSeries series;
    CumulantState final_state;
    IntegrationStats stats;
};

// Integrates the cumulant model from state0 over [t0, t1], sampling on grid.
// Drive switching times are breakpoints.
TransientResult integrate(const ModelSystem& system, const CumulantState& state0, double t0,
                          double t1, std::span<const double> grid,
                          const IntegratorConfig& config, const ChannelSelection& selection = {});

}  // namespace cavsync
