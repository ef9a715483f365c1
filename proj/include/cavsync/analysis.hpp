// analysis.hpp: derived quantities from simulation output.

#pragma once

#include "cavsync/integrate.hpp"
#include "cavsync/model.hpp"
#include "cavsync/steadystate.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cavsync {

class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// g^2 N / kappa; all rates in rad/s.
double purcell_rate(double g, double n_emitters, double kappa);

enum class RabiMethod { PeakSpacing, SpectralPeak };

const char* to_string(RabiMethod m);

struct RabiEstimate {
    double omega = 0.0;  // rad/s
    RabiMethod method = RabiMethod::PeakSpacing;
    // PeakSpacing: stdev / mean of the maxima spacings. SpectralPeak: the
    // frequency resolution of the window divided by the peak frequency.
    double confidence = 0.0;
    std::size_t n_extrema = 0;
};

struct RabiOptions {
    RabiMethod method = RabiMethod::PeakSpacing;
    // Maxima whose rise above the neighbouring minima is below this fraction
    // of the signal range inside the window are ignored.
    double min_prominence = 0.05;
};

// Local maxima of a sampled signal above a relative prominence, with
// parabolic refinement of their times. Returns the refined times.
std::vector<double> find_peak_times(std::span<const double> t, std::span<const double> x,
                                    double min_prominence);

// Throws AnalysisError on a flat signal, too few maxima, or an empty window.
RabiEstimate extract_rabi_frequency(std::span<const double> t, std::span<const double> x,
                                    double t_begin, double t_end, const RabiOptions& options = {});

std::optional<RabiEstimate> try_extract_rabi_frequency(std::span<const double> t,
                                                       std::span<const double> x, double t_begin,
                                                       double t_end,
                                                       const RabiOptions& options = {});

// |<s+_k s-_k'>| / |<s+_{k,i} s-_{k,i'}>|; empty when the same-class
// coherence magnitude is below 1e-15.
std::optional<double> sigma_ratio(const CumulantState& state, int k, int kp);

struct SidebandOptions {
    double exclusion = 0.0;         // |Delta| below this is never a sideband (rad/s)
    double threshold = 1e-9;        // minimum time-averaged excitation
    double prominence_ratio = 2.0;  // peak / higher of the two bounding minima
    double t_begin = 0.0;           // averaging window
    double t_end = 0.0;
};

// Time-averaged excitation (1 + <sz_k>)/2 of every class over a window.
std::vector<double> mean_excitation(const TimeSeries& series, int n_classes, double t_begin,
                                    double t_end);

// Deltas are cavity detunings delta_c - delta_k per class; excitation is the
// per-class value to scan. Returns the detunings of the accepted maxima in
// ascending order.
std::vector<double> detect_sidebands(std::span<const double> deltas,
                                     std::span<const double> excitation,
                                     const SidebandOptions& options);

std::vector<double> detect_sidebands(const TimeSeries& series, std::span<const double> deltas,
                                     const SidebandOptions& options);

enum class BoundaryFlag {
    Found,
    BelowAtStart,  // first scanned Delta already has Sigma < 0.5
    Absent,        // Sigma never drops below 0.5 in the scanned range
    Undefined,     // Sigma undefined before any crossing
};

const char* to_string(BoundaryFlag f);

struct BoundaryRow {
    double eta = 0.0;
    std::optional<double> delta_star;
    BoundaryFlag flag = BoundaryFlag::Undefined;
    std::vector<std::optional<double>> sigma;  // one per scanned Delta
};

struct SyncReport {
    std::vector<BoundaryRow> rows;
    double gamma = 0.0;
    double kappa = 0.0;
    double gamma_c = 0.0;
    double threshold = 0.5;
};

// Per pump value, the first Delta (ascending) at which Sigma < threshold,
// linearly interpolated between the bracketing grid points.
SyncReport sync_boundary(const SweepGrid& grid, double gamma, double kappa, double gamma_c,
                         double threshold = 0.5);

}  // namespace cavsync
