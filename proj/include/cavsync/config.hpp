// config.hpp: TOML-subset run configuration.
//
// Accepted syntax: `key = value` lines, `[section]` headers, `#` comments.
// Values are strings in double quotes, integers, floats, booleans, and
// single-line arrays of those. Frequencies are given as ordinary frequencies
// in Hz (value / 2 pi) and converted to rad/s on load; times are seconds.

#pragma once

#include "cavsync/analysis.hpp"
#include "cavsync/eom.hpp"
#include "cavsync/integrate.hpp"
#include "cavsync/model.hpp"
#include "cavsync/spectra.hpp"
#include "cavsync/steadystate.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace cavsync {

class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

struct ConfigValue;
using ConfigArray = std::vector<ConfigValue>;

struct ConfigValue {
    std::variant<std::string, std::int64_t, double, bool, ConfigArray> v;

    [[nodiscard]] std::string type_name() const;
    [[nodiscard]] std::string to_toml() const;
};

struct ConfigEntry {
    ConfigValue value;
    int line = 0;  // 0 for values that came from overrides or defaults
};

// Section "" holds keys before the first header.
struct ConfigDocument {
    std::map<std::string, std::map<std::string, ConfigEntry>> sections;

    [[nodiscard]] const ConfigEntry* find(const std::string& section, const std::string& key) const;
    void set(const std::string& section, const std::string& key, ConfigEntry entry);
    [[nodiscard]] std::string to_toml() const;
};

ConfigValue parse_config_value(const std::string& text, int line);
ConfigDocument parse_config_text(const std::string& text);

// Applies `section.key=value`; last wins.
void apply_override(ConfigDocument& doc, const std::string& assignment);

enum class RunMode { Transient, Steady, Sweep, OracleCompare, Analyze };

const char* to_string(RunMode m);
RunMode parse_run_mode(const std::string& s);

struct CoherenceRow {
    enum class Kind { None, Auto, Index } kind = Kind::Auto;
    int index = 0;
};

struct SteadyConfig {
    double ss_tol = 1e-8;
    double t_max = 0.0;
    std::int64_t n_a = 1;
    std::int64_t n_b = 1;
    DetuningConvention convention = DetuningConvention::Symmetric;
    double delta = 0.0;  // splitting for the single-point steady mode
    bool weak_initial = false;
    double initial_sz = -0.8;
};

struct SweepConfig {
    std::vector<double> etas;
    std::vector<double> deltas;
};

struct OracleConfig {
    int fock_cutoff = 2;
    std::vector<double> emitter_deltas;
    bool adaptive = true;
    double change_tol = 1e-6;
};

struct AnalysisConfig {
    std::string input_dir;
    int rabi_class = -1;        // -1: class closest to the cavity
    double window_start = -1;   // < 0: drive end
    double window_end = -1;     // < 0: series end
    RabiMethod rabi_method = RabiMethod::PeakSpacing;
    double min_prominence = 0.05;
    double sideband_exclusion_kappa = 5.0;
    double sideband_threshold = 1e-9;
    double sideband_prominence = 2.0;
    double sideband_window_start = -1;  // < 0: middle of the post-drive interval
    double sideband_window_end = -1;
};

struct RunConfig {
    RunMode mode = RunMode::Transient;
    std::string output_dir = "out";
    int threads = 1;

    PhysicalParams params;
    double g = 0.0;
    SpectrumSpec spectrum;
    DrivePulse drive;
    double t_start = 0.0;
    double t_end = 0.0;
    double dt_output = 0.0;
    IntegratorConfig integrator;
    EomOptions eom;
    CoherenceRow coherence_row;
    SteadyConfig steady;
    SweepConfig sweep;
    OracleConfig oracle;
    AnalysisConfig analysis;

    ConfigDocument resolved;             // every key, including defaults
    std::vector<std::string> overrides;  // as given on the command line
};

// Validates the document against the schema for its mode and converts units.
RunConfig load_run_config(const ConfigDocument& doc);
RunConfig parse_config(const std::filesystem::path& path,
                       const std::vector<std::string>& overrides = {});
RunConfig parse_config_string(const std::string& text,
                              const std::vector<std::string>& overrides = {});

}  // namespace cavsync
