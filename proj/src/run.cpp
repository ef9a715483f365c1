#include "cavsync/run.hpp"

#include "cavsync/csv.hpp"
#include "cavsync/kernels/pair_kernel.hpp"
#include "cavsync/spectra.hpp"
#include "cavsync/steadystate.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#ifndef CAVSYNC_VERSION
#define CAVSYNC_VERSION "0.1.0"
#endif

namespace cavsync {

using json = nlohmann::ordered_json;

std::string version_string() { return CAVSYNC_VERSION; }

ModelSystem build_transient_system(const RunConfig& c) {
    auto classes = discretize(c.spectrum, c.g);
    return ModelSystem(c.params, std::move(classes), c.drive, c.eom);
}

int resonant_class(const ModelSystem& system) {
    int best = 0;
    for (int k = 1; k < system.n_classes(); ++k) {
        const double a = std::abs(system.cavity_detuning(k));
        const double b = std::abs(system.cavity_detuning(best));
        if (a < b || (a == b && system.cavity_detuning(k) > system.cavity_detuning(best))) best = k;
    }
    return best;
}

ChannelSelection coherence_selection(const RunConfig& config, const ModelSystem& system) {
    ChannelSelection sel;
    int row = -1;
    switch (config.coherence_row.kind) {
        case CoherenceRow::Kind::None: return sel;
        case CoherenceRow::Kind::Auto: row = resonant_class(system); break;
        case CoherenceRow::Kind::Index: row = config.coherence_row.index; break;
    }
    if (row < 0 || row >= system.n_classes()) {
        throw ValidationError(fmt::format("output.coherence_row {} is out of range", row));
    }
    for (int kp = 0; kp < system.n_classes(); ++kp) sel.coherence_pairs.emplace_back(row, kp);
    return sel;
}

TransientAnalysis analyze_transient(const TimeSeries& series,
                                    const std::vector<FrequencyClass>& classes,
                                    const PhysicalParams& params, const DrivePulse& drive,
                                    const AnalysisConfig& o) {
    if (series.times.size() < 2) throw AnalysisError("time series too short");
    TransientAnalysis a;
    const int kc = static_cast<int>(classes.size());
    for (const auto& c : classes) a.deltas.push_back(params.delta_c - c.delta);

    int rc = o.rabi_class;
    if (rc < 0) {
        rc = 0;
        for (int k = 1; k < kc; ++k) {
            const double x = std::abs(a.deltas[static_cast<std::size_t>(k)]);
            const double y = std::abs(a.deltas[static_cast<std::size_t>(rc)]);
            if (x < y || (x == y && a.deltas[static_cast<std::size_t>(k)] > a.deltas[static_cast<std::size_t>(rc)])) rc = k;
        }
    }
    if (rc >= kc) throw ValidationError(fmt::format("analysis.rabi_class {} is out of range", rc));
    a.rabi_class = rc;
    a.rabi_class_delta = a.deltas[static_cast<std::size_t>(rc)];

    const double t_first = series.times.front();
    const double t_last = series.times.back();
    const double post = std::max(drive.t_off, t_first);
    a.window_start = o.window_start >= 0.0 ? o.window_start : post;
    a.window_end = o.window_end >= 0.0 ? o.window_end : t_last;

    const RabiOptions ro{o.rabi_method, o.min_prominence};
    const auto sz = series.channel(sz_channel(rc));
    try {
        a.sz_rabi = extract_rabi_frequency(series.times, sz, a.window_start, a.window_end, ro);
    } catch (const AnalysisError& e) {
        a.sz_rabi_error = e.what();
    }
    try {
        a.photon_rabi = extract_rabi_frequency(series.times, series.channel("n_photons"),
                                               a.window_start, a.window_end, ro);
    } catch (const AnalysisError& e) {
        a.photon_rabi_error = e.what();
    }

    a.sideband_window_start =
        o.sideband_window_start >= 0.0 ? o.sideband_window_start : 0.5 * (post + t_last);
    a.sideband_window_end = o.sideband_window_end >= 0.0 ? o.sideband_window_end : t_last;
    SidebandOptions so;
    so.exclusion = o.sideband_exclusion_kappa * params.kappa;
    so.threshold = o.sideband_threshold;
    so.prominence_ratio = o.sideband_prominence;
    so.t_begin = a.sideband_window_start;
    so.t_end = a.sideband_window_end;
    a.excitation = mean_excitation(series, kc, so.t_begin, so.t_end);
    a.sidebands = detect_sidebands(a.deltas, a.excitation, so);
    double best = -1.0;
    for (double sb : a.sidebands) {
        const auto it = std::find(a.deltas.begin(), a.deltas.end(), sb);
        const double e = a.excitation[static_cast<std::size_t>(it - a.deltas.begin())];
        if (e > best) {
            best = e;
            a.dominant_sideband = std::abs(sb);
        }
    }
    return a;
}

namespace {

json rabi_json(const std::optional<RabiEstimate>& r, const std::string& err) {
    if (!r) return json{{"found", false}, {"reason", err}};
    return json{{"found", true},
                {"omega_hz", r->omega / two_pi},
                {"method", to_string(r->method)},
                {"confidence", r->confidence},
                {"n_extrema", r->n_extrema}};
}

json resolved_json(const ConfigDocument& doc) {
    // Values as JSON scalars; the TOML text itself is in resolved.toml.
    json j = json::object();
    for (const auto& [s, keys] : doc.sections) {
        json sec = json::object();
        for (const auto& [k, e] : keys) {
            const auto& v = e.value.v;
            switch (v.index()) {
                case 0: sec[k] = std::get<std::string>(v); break;
                case 1: sec[k] = std::get<std::int64_t>(v); break;
                case 2: {
                    const double d = std::get<double>(v);
                    if (std::isfinite(d)) {
                        sec[k] = d;
                    } else {
                        sec[k] = d > 0 ? "inf" : "-inf";
                    }
                    break;
                }
                case 3: sec[k] = std::get<bool>(v); break;
                default: sec[k] = e.value.to_toml(); break;
            }
        }
        j[s.empty() ? "top" : s] = sec;
    }
    return j;
}

std::string kernel_label(const EomOptions& eom) {
    const bool prefer = eom.kernel != KernelChoice::Scalar;
    const bool require = eom.kernel == KernelChoice::Avx2;
    return std::string(kernels::kernel_name(kernels::select_pair_kernel(prefer, require)));
}

void write_text(const std::filesystem::path& p, const std::string& s) {
    AtomicFile f(p);
    f.stream() << s;
    f.commit();
}

void write_meta(const std::filesystem::path& dir, const RunConfig& c, double wall, json extra) {
    json j;
    j["version"] = version_string();
    j["mode"] = to_string(c.mode);
    j["threads"] = c.threads;
    j["kernel"] = kernel_label(c.eom);
    j["wall_time_s"] = wall;
    j["overrides"] = c.overrides;
    j["units"] = "hz_over_2pi";
    j["resolved"] = resolved_json(c.resolved);
    for (auto& [k, v] : extra.items()) j[k] = v;
    write_text(dir / "meta.json", j.dump(2) + "\n");
    write_text(dir / "resolved.toml", c.resolved.to_toml());
}

json stats_json(const IntegrationStats& s) {
    return json{{"accepted_steps", s.accepted},
                {"rejected_steps", s.rejected},
                {"rhs_evaluations", s.rhs_evals},
                {"smallest_step_s", std::isfinite(s.smallest_step) ? s.smallest_step : 0.0},
                {"largest_step_s", s.largest_step}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void run_transient(const RunConfig& c, const std::filesystem::path& dir, std::ostream& log) {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelSystem sys = build_transient_system(c);
    log << fmt::format("transient: {} classes, {} stored moments, kernel {}\n", sys.n_classes(),
                       sys.layout().size(), kernel_label(c.eom));
    const auto grid = uniform_grid(c.t_start, c.t_end, c.dt_output);
    const auto sel = coherence_selection(c, sys);
    const auto res = integrate(sys, ground_state(sys.layout()), c.t_start, c.t_end, grid,
                               c.integrator, sel);
    {
        AtomicFile f(dir / "timeseries.csv");
        write_timeseries_csv(f.stream(), res.series);
        f.commit();
    }
    {
        AtomicFile f(dir / "classes.csv");
        write_classes_csv(f.stream(), sys);
        f.commit();
    }
    json extra;
    extra["stats"] = stats_json(res.stats);
    extra["n_classes"] = sys.n_classes();
    extra["stored_moments"] = sys.layout().size();
    extra["naive_equation_count"] = sys.layout().naive_equation_count();
    const auto inv = check_invariants(res.final_state, 1e-6);
    extra["final_state_violations"] = inv;
    write_meta(dir, c, seconds_since(t0), extra);
    log << fmt::format("transient: {} accepted / {} rejected steps, final <a+a> = {:.6g}\n",
                       res.stats.accepted, res.stats.rejected, res.final_state.photons());
}

void run_steady(const RunConfig& c, const std::filesystem::path& dir, std::ostream& log) {
    const auto t0 = std::chrono::steady_clock::now();
    TwoEnsembleSpec spec{c.params, c.steady.n_a, c.steady.n_b, c.g, c.steady.convention};
    const ModelSystem sys(c.params, two_ensemble_classes(spec, c.steady.delta), DrivePulse{}, c.eom);
    SteadyStateOptions o;
    o.ss_tol = c.steady.ss_tol;
    o.t_max = c.steady.t_max;
    o.integrator = c.integrator;
    o.extra_rate = c.params.kappa > 0.0
                       ? purcell_rate(c.g, static_cast<double>(c.steady.n_a), c.params.kappa)
                       : 0.0;
    std::optional<CumulantState> init;
    if (c.steady.weak_initial) init = incoherent_state(sys.layout(), c.steady.initial_sz);
    const auto r = find_steady_state(sys, o, init);
    SweepGrid g{{c.params.eta}, {c.steady.delta}, {}};
    SweepPoint p;
    p.eta = c.params.eta;
    p.delta = c.steady.delta;
    p.n_photons = r.state.photons();
    p.coh_cross = std::abs(cross_coherence(r.state, 0, 1));
    p.coh_same = std::abs(cross_coherence(r.state, 0, 0));
    p.sigma_ratio = sigma_ratio(r.state, 0, 1);
    p.status = r.status;
    p.residual = r.residual;
    g.points.push_back(p);
    {
        AtomicFile f(dir / "steady.csv");
        write_sweep_csv(f.stream(), g);
        f.commit();
    }
    json extra;
    extra["status"] = to_string(r.status);
    extra["residual"] = r.residual;
    extra["tolerance"] = r.tolerance;
    extra["elapsed_model_time_s"] = r.elapsed_model_time;
    extra["sz"] = {r.state.sz(0), r.state.sz(1)};
    write_meta(dir, c, seconds_since(t0), extra);
    log << fmt::format("steady: {} after {:.3e} s model time, <a+a> = {:.6g}\n",
                       to_string(r.status), r.elapsed_model_time, p.n_photons);
}

void run_sweep(const RunConfig& c, const std::filesystem::path& dir, std::ostream& log) {
    const auto t0 = std::chrono::steady_clock::now();
    TwoEnsembleSpec spec{c.params, c.steady.n_a, c.steady.n_b, c.g, c.steady.convention};
    SteadyStateOptions o;
    o.ss_tol = c.steady.ss_tol;
    o.t_max = c.steady.t_max;
    o.integrator = c.integrator;
    const double gc = purcell_rate(c.g, static_cast<double>(c.steady.n_a), c.params.kappa);
    o.extra_rate = gc;
    const auto grid = sweep_grid(spec, c.sweep.etas, c.sweep.deltas, o, c.threads);
    {
        AtomicFile f(dir / "sweep.csv");
        write_sweep_csv(f.stream(), grid);
        f.commit();
    }
    const auto rep = sync_boundary(grid, c.params.gamma, c.params.kappa, gc);
    json rows = json::array();
    for (const auto& r : rep.rows) {
        json row{{"eta_hz", r.eta / two_pi}, {"flag", to_string(r.flag)}};
        row["delta_star_hz"] = r.delta_star ? json(*r.delta_star / two_pi) : json(nullptr);
        rows.push_back(row);
    }
    json sync{{"gamma_hz", rep.gamma / two_pi},
              {"kappa_hz", rep.kappa / two_pi},
              {"gamma_c_hz", rep.gamma_c / two_pi},
              {"threshold", rep.threshold},
              {"rows", rows}};
    write_text(dir / "sync.json", sync.dump(2) + "\n");
    std::size_t bad = 0;
    for (const auto& p : grid.points) bad += p.status != SteadyStatus::Converged;
    json extra;
    extra["points"] = grid.points.size();
    extra["not_converged"] = bad;
    write_meta(dir, c, seconds_since(t0), extra);
    log << fmt::format("sweep: {} points, {} not converged\n", grid.points.size(), bad);
}

void run_oracle(const RunConfig& c, const std::filesystem::path& dir, std::ostream& log) {
    const auto t0 = std::chrono::steady_clock::now();
    SmallSystemSpec spec;
    spec.fock_cutoff = c.oracle.fock_cutoff;
    for (double d : c.oracle.emitter_deltas) spec.emitters.push_back({d, c.g});
    spec.params = c.params;
    spec.drive = c.drive;
    spec.validate();
    const auto grid = uniform_grid(c.t_start, c.t_end, c.dt_output);
    const auto grouping = group_emitters(spec);
    const ChannelSelection sel{};
    const OracleResult exact =
        c.oracle.adaptive
            ? evolve_adaptive(spec, OracleInitial{}, c.t_start, c.t_end, grid, c.integrator, sel,
                              c.oracle.change_tol)
            : evolve_exact(spec, initial_density(spec, OracleInitial{}), c.t_start, c.t_end, grid,
                           c.integrator, sel);
    const ModelSystem sys(c.params, grouping.classes, c.drive, c.eom);
    const auto cum = integrate(sys, ground_state(sys.layout()), c.t_start, c.t_end, grid,
                               c.integrator, sel);
    auto rep = compare_series(cum.series, exact.series);
    rep.fock_cutoff = exact.fock_cutoff;
    rep.max_cutoff_population = exact.max_cutoff_population;
    {
        AtomicFile f(dir / "oracle_report.json");
        write_comparison_json(f.stream(), rep);
        f.commit();
    }
    {
        AtomicFile f(dir / "cumulant_timeseries.csv");
        write_timeseries_csv(f.stream(), cum.series);
        f.commit();
    }
    {
        AtomicFile f(dir / "oracle_timeseries.csv");
        write_timeseries_csv(f.stream(), exact.series);
        f.commit();
    }
    json extra;
    extra["fock_cutoff"] = exact.fock_cutoff;
    extra["max_cutoff_population"] = exact.max_cutoff_population;
    extra["max_trace_drift"] = exact.max_trace_drift;
    write_meta(dir, c, seconds_since(t0), extra);
    log << fmt::format("oracle-compare: n_max = {}, <a+a> max rel dev = {:.4g}\n", exact.fock_cutoff,
                       rep.channel("n_photons").max_rel_deviation);
}

void run_analyze(const RunConfig& c, const std::filesystem::path& dir, std::ostream& log) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::filesystem::path in = c.analysis.input_dir;
    const RunConfig src = parse_config(in / "resolved.toml");
    const auto table = read_csv_file(in / "classes.csv");
    std::vector<FrequencyClass> classes;
    const auto deltas = table.values("delta");
    const auto ns = table.values("n_emitters");
    const auto gs = table.values("g");
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        classes.push_back({two_pi * deltas[i], static_cast<std::int64_t>(ns[i]), two_pi * gs[i]});
    }
    const auto series = timeseries_from_csv(read_csv_file(in / "timeseries.csv"));
    const auto a = analyze_transient(series, classes, src.params, src.drive, c.analysis);
    {
        AtomicFile f(dir / "analysis.json");
        write_analysis_json(f.stream(), a);
        f.commit();
    }
    write_meta(dir, c, seconds_since(t0), json::object());
    log << fmt::format("analyze: Rabi {} , {} sidebands\n",
                       a.sz_rabi ? fmt::format("{:.4g} Hz", a.sz_rabi->omega / two_pi) : "not found",
                       a.sidebands.size());
}

}  // namespace

void write_analysis_json(std::ostream& out, const TransientAnalysis& a) {
    json j;
    j["rabi_class"] = a.rabi_class;
    j["rabi_class_delta_hz"] = a.rabi_class_delta / two_pi;
    j["window"] = {a.window_start, a.window_end};
    j["sz_rabi"] = rabi_json(a.sz_rabi, a.sz_rabi_error);
    j["photon_rabi"] = rabi_json(a.photon_rabi, a.photon_rabi_error);
    if (a.sz_rabi && a.photon_rabi) j["photon_to_sz_ratio"] = a.photon_rabi->omega / a.sz_rabi->omega;
    j["sideband_window"] = {a.sideband_window_start, a.sideband_window_end};
    json sb = json::array();
    for (double d : a.sidebands) sb.push_back(d / two_pi);
    j["sidebands_hz"] = sb;
    j["dominant_sideband_hz"] =
        a.dominant_sideband ? json(*a.dominant_sideband / two_pi) : json(nullptr);
    json prof = json::array();
    for (std::size_t i = 0; i < a.deltas.size(); ++i) {
        prof.push_back({a.deltas[i] / two_pi, a.excitation[i]});
    }
    j["excitation_profile"] = prof;
    out << j.dump(2) << '\n';
}

void write_classes_csv(std::ostream& out, const ModelSystem& system) {
    CsvWriter w(out);
    w.header({"k", "delta", "cavity_detuning", "n_emitters", "g"});
    for (int k = 0; k < system.n_classes(); ++k) {
        const auto& c = system.classes()[static_cast<std::size_t>(k)];
        w.row_begin();
        w.field_text(std::to_string(k));
        w.field(c.delta / two_pi);
        w.field(system.cavity_detuning(k) / two_pi);
        w.field_text(std::to_string(c.n_emitters));
        w.field(c.g / two_pi);
        w.row_end();
    }
}

void run(const RunConfig& config, std::ostream& log) {
    const std::filesystem::path dir = config.output_dir;
    std::filesystem::create_directories(dir);
    switch (config.mode) {
        case RunMode::Transient: run_transient(config, dir, log); break;
        case RunMode::Steady: run_steady(config, dir, log); break;
        case RunMode::Sweep: run_sweep(config, dir, log); break;
        case RunMode::OracleCompare: run_oracle(config, dir, log); break;
        case RunMode::Analyze: run_analyze(config, dir, log); break;
    }
}

}  // namespace cavsync
