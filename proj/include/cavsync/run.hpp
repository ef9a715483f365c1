// run.hpp: experiment orchestration for every run mode.

#pragma once

#include "cavsync/analysis.hpp"
#include "cavsync/config.hpp"
#include "cavsync/eom.hpp"
#include "cavsync/integrate.hpp"
#include "cavsync/oracle.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cavsync {

std::string version_string();

ModelSystem build_transient_system(const RunConfig& config);

// Class with the smallest |delta_c - delta_k|; ties go to positive Delta.
int resonant_class(const ModelSystem& system);

ChannelSelection coherence_selection(const RunConfig& config, const ModelSystem& system);

struct TransientAnalysis {
    int rabi_class = 0;
    double rabi_class_delta = 0.0;  // cavity detuning of that class (rad/s)
    double window_start = 0.0;
    double window_end = 0.0;
    std::optional<RabiEstimate> sz_rabi;
    std::optional<RabiEstimate> photon_rabi;
    std::string sz_rabi_error;
    std::string photon_rabi_error;
    double sideband_window_start = 0.0;
    double sideband_window_end = 0.0;
    std::vector<double> deltas;      // cavity detuning per class (rad/s)
    std::vector<double> excitation;  // time-averaged (1 + sz)/2 per class
    std::vector<double> sidebands;   // rad/s, ascending
    // |Delta| of the detected sideband with the largest excitation (rad/s).
    std::optional<double> dominant_sideband;
};

TransientAnalysis analyze_transient(const TimeSeries& series,
                                    const std::vector<FrequencyClass>& classes,
                                    const PhysicalParams& params, const DrivePulse& drive,
                                    const AnalysisConfig& options);

void write_analysis_json(std::ostream& out, const TransientAnalysis& a);
void write_classes_csv(std::ostream& out, const ModelSystem& system);

// Runs the configured mode and writes its files into config.output_dir.
// Progress and a short summary go to `log`.
void run(const RunConfig& config, std::ostream& log);

}  // namespace cavsync
