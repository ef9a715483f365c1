#include "cavsync/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

namespace cavsync {

double purcell_rate(double g, double n_emitters, double kappa) {
    if (!(kappa > 0.0)) throw ValidationError("purcell_rate needs kappa > 0");
    if (!(n_emitters >= 0.0)) throw ValidationError("purcell_rate needs N >= 0");
    return g * g * n_emitters / kappa;
}

const char* to_string(RabiMethod m) {
    return m == RabiMethod::PeakSpacing ? "peak-spacing" : "spectral-peak";
}

const char* to_string(BoundaryFlag f) {
    switch (f) {
        case BoundaryFlag::Found: return "found";
        case BoundaryFlag::BelowAtStart: return "below_at_start";
        case BoundaryFlag::Absent: return "absent";
        case BoundaryFlag::Undefined: return "undefined";
    }
    return "unknown";
}

namespace {

struct Window {
    std::vector<double> t;
    std::vector<double> x;
};

Window cut(std::span<const double> t, std::span<const double> x, double t0, double t1) {
    if (t.size() != x.size()) throw ValidationError("time and value lengths differ");
    Window w;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] >= t0 && t[i] <= t1) {
            w.t.push_back(t[i]);
            w.x.push_back(x[i]);
        }
    }
    if (w.t.size() < 5) throw AnalysisError("analysis window holds fewer than 5 samples");
    return w;
}

double signal_range(const std::vector<double>& x) {
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    return *hi - *lo;
}

void require_not_flat(const std::vector<double>& x) {
    double scale = 0.0;
    for (double v : x) scale = std::max(scale, std::abs(v));
    if (!(signal_range(x) > 1e-12 * scale) || scale == 0.0) throw AnalysisError("flat signal");
}

double mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stdev(std::span<const double> v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
}

RabiEstimate peak_spacing(const Window& w, double min_prominence) {
    const auto peaks = find_peak_times(w.t, w.x, min_prominence);
    if (peaks.size() < 3) {
        throw AnalysisError(fmt::format("only {} prominent maxima in the window", peaks.size()));
    }
    std::vector<double> dt(peaks.size() - 1);
    for (std::size_t i = 0; i + 1 < peaks.size(); ++i) dt[i] = peaks[i + 1] - peaks[i];
    const double m = mean(dt);
    return RabiEstimate{two_pi / m, RabiMethod::PeakSpacing, stdev(dt) / m, peaks.size()};
}

RabiEstimate spectral_peak(const Window& w) {
    // Resample onto a uniform grid, remove the linear trend, apply a Hann
    // window and scan a zero-padded DFT.
    const std::size_t n = w.t.size();
    const double t0 = w.t.front();
    const double span = w.t.back() - t0;
    if (!(span > 0.0)) throw AnalysisError("empty analysis window");
    const double dt = span / static_cast<double>(n - 1);
    std::vector<double> u(n);
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ti = t0 + static_cast<double>(i) * dt;
        while (j + 2 < n && w.t[j + 1] < ti) ++j;
        const double f = std::clamp((ti - w.t[j]) / (w.t[j + 1] - w.t[j]), 0.0, 1.0);
        u[i] = w.x[j] + f * (w.x[j + 1] - w.x[j]);
    }
    double st = 0, sx = 0, stt = 0, stx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ti = static_cast<double>(i);
        st += ti;
        sx += u[i];
        stt += ti * ti;
        stx += ti * u[i];
    }
    const double dn = static_cast<double>(n);
    const double slope = (dn * stx - st * sx) / (dn * stt - st * st);
    const double icpt = (sx - slope * st) / dn;
    for (std::size_t i = 0; i < n; ++i) {
        const double hann = 0.5 - 0.5 * std::cos(two_pi * static_cast<double>(i) / (dn - 1.0));
        u[i] = (u[i] - icpt - slope * static_cast<double>(i)) * hann;
    }
    const double fs = 1.0 / dt;
    const double df = 1.0 / (8.0 * span);
    const double f_lo = 2.0 / span;  // the Hann main lobe of DC ends here
    const double f_hi = 0.5 * fs;
    const auto nf = static_cast<std::size_t>((f_hi - f_lo) / df) + 1;
    if (nf < 3) throw AnalysisError("window too short for a spectral estimate");
    std::vector<double> power(nf);
    for (std::size_t q = 0; q < nf; ++q) {
        const double f = f_lo + static_cast<double>(q) * df;
        const double wstep = two_pi * f * dt;
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ph = wstep * static_cast<double>(i);
            re += u[i] * std::cos(ph);
            im -= u[i] * std::sin(ph);
        }
        power[q] = re * re + im * im;
    }
    const auto best = static_cast<std::size_t>(
        std::max_element(power.begin(), power.end()) - power.begin());
    if (!(power[best] > 0.0)) throw AnalysisError("flat signal");
    double shift = 0.0;
    if (best > 0 && best + 1 < nf) {
        const double a = power[best - 1], b = power[best], c = power[best + 1];
        const double den = a - 2.0 * b + c;
        if (den != 0.0) shift = std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
    }
    const double f = f_lo + (static_cast<double>(best) + shift) * df;
    return RabiEstimate{two_pi * f, RabiMethod::SpectralPeak, (1.0 / span) / f, 0};
}

}  // namespace

std::vector<double> find_peak_times(std::span<const double> t, std::span<const double> x,
                                    double min_prominence) {
    if (t.size() != x.size()) throw ValidationError("time and value lengths differ");
    const std::size_t n = x.size();
    std::vector<double> out;
    if (n < 3) return out;
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    const double need = min_prominence * (*hi - *lo);

    // Prominence: walk out from each maximum on both sides until a higher
    // sample or the edge; the larger of the two minima passed is the base.
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(x[i] > x[i - 1] && x[i] >= x[i + 1])) continue;
        double left_min = x[i];
        for (std::size_t j = i; j-- > 0;) {
            if (x[j] > x[i]) break;
            left_min = std::min(left_min, x[j]);
        }
        double right_min = x[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            if (x[j] > x[i]) break;
            right_min = std::min(right_min, x[j]);
        }
        if (x[i] - std::max(left_min, right_min) < need) continue;
        double ti = t[i];
        const double a = x[i - 1], b = x[i], c = x[i + 1];
        const double den = a - 2.0 * b + c;
        const double h0 = t[i] - t[i - 1], h1 = t[i + 1] - t[i];
        if (den != 0.0 && std::abs(h0 - h1) <= 1e-9 * (h0 + h1)) {
            ti += std::clamp(0.5 * (a - c) / den, -0.5, 0.5) * h0;
        }
        out.push_back(ti);
    }
    return out;
}

RabiEstimate extract_rabi_frequency(std::span<const double> t, std::span<const double> x,
                                    double t_begin, double t_end, const RabiOptions& options) {
    if (!(t_end > t_begin)) throw ValidationError("analysis window must have t_end > t_begin");
    const Window w = cut(t, x, t_begin, t_end);
    require_not_flat(w.x);
    if (options.method == RabiMethod::SpectralPeak) return spectral_peak(w);
    return peak_spacing(w, options.min_prominence);
}

std::optional<RabiEstimate> try_extract_rabi_frequency(std::span<const double> t,
                                                       std::span<const double> x, double t_begin,
                                                       double t_end, const RabiOptions& options) {
    try {
        return extract_rabi_frequency(t, x, t_begin, t_end, options);
    } catch (const AnalysisError&) {
        return std::nullopt;
    }
}

std::optional<double> sigma_ratio(const CumulantState& state, int k, int kp) {
    const double same = std::abs(cross_coherence(state, k, k));
    if (!(same >= 1e-15)) return std::nullopt;
    return std::abs(cross_coherence(state, k, kp)) / same;
}

std::vector<double> mean_excitation(const TimeSeries& series, int n_classes, double t_begin,
                                    double t_end) {
    std::vector<double> out(static_cast<std::size_t>(n_classes), 0.0);
    const auto& t = series.times;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] >= t_begin && t[i] <= t_end) idx.push_back(i);
    }
    if (idx.empty()) throw AnalysisError("no samples in the excitation window");
    for (int k = 0; k < n_classes; ++k) {
        const auto ch = series.channel(sz_channel(k));
        double s = 0.0;
        for (auto i : idx) s += 0.5 * (1.0 + ch[i]);
        out[static_cast<std::size_t>(k)] = s / static_cast<double>(idx.size());
    }
    return out;
}

std::vector<double> detect_sidebands(std::span<const double> deltas,
                                     std::span<const double> excitation,
                                     const SidebandOptions& options) {
    if (deltas.size() != excitation.size()) {
        throw ValidationError("detunings and excitation lengths differ");
    }
    if (!(options.prominence_ratio >= 1.0)) throw ValidationError("prominence_ratio must be >= 1");
    const std::size_t n = deltas.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return deltas[a] < deltas[b]; });
    std::vector<double> d(n), e(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = deltas[order[i]];
        e[i] = excitation[order[i]];
    }
    // Each wing (Delta < -exclusion, Delta > exclusion) is scanned on its own,
    // so the synchronized core never acts as a bounding peak.
    std::vector<double> found;
    auto scan = [&](std::size_t b, std::size_t end) {
        for (std::size_t i = b; i < end; ++i) {
            const bool left_ok = i == b || e[i] > e[i - 1];
            const bool right_ok = i + 1 == end || e[i] > e[i + 1];
            if (!(left_ok && right_ok) || i == b || i + 1 == end) continue;
            if (!(e[i] > options.threshold)) continue;
            double lmin = e[i];
            for (std::size_t j = i; j-- > b;) {
                if (e[j] > e[i]) break;
                lmin = std::min(lmin, e[j]);
            }
            double rmin = e[i];
            for (std::size_t j = i + 1; j < end; ++j) {
                if (e[j] > e[i]) break;
                rmin = std::min(rmin, e[j]);
            }
            const double base = std::max(lmin, rmin);
            if (e[i] >= options.prominence_ratio * base) found.push_back(d[i]);
        }
    };
    std::size_t i0 = 0;
    while (i0 < n && d[i0] < -options.exclusion) ++i0;
    scan(0, i0);
    std::size_t i1 = i0;
    while (i1 < n && d[i1] <= options.exclusion) ++i1;
    scan(i1, n);
    return found;
}

std::vector<double> detect_sidebands(const TimeSeries& series, std::span<const double> deltas,
                                     const SidebandOptions& options) {
    const auto exc = mean_excitation(series, static_cast<int>(deltas.size()), options.t_begin,
                                     options.t_end);
    return detect_sidebands(deltas, exc, options);
}

SyncReport sync_boundary(const SweepGrid& grid, double gamma, double kappa, double gamma_c,
                         double threshold) {
    SyncReport rep;
    rep.gamma = gamma;
    rep.kappa = kappa;
    rep.gamma_c = gamma_c;
    rep.threshold = threshold;
    std::vector<std::size_t> order(grid.deltas.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return grid.deltas[a] < grid.deltas[b]; });
    for (std::size_t ie = 0; ie < grid.etas.size(); ++ie) {
        BoundaryRow row;
        row.eta = grid.etas[ie];
        for (auto id : order) row.sigma.push_back(grid.at(ie, id).sigma_ratio);
        row.flag = BoundaryFlag::Absent;
        for (std::size_t j = 0; j < order.size(); ++j) {
            const auto& s = row.sigma[j];
            if (!s) {
                row.flag = BoundaryFlag::Undefined;
                break;
            }
            if (*s < threshold) {
                if (j == 0) {
                    row.flag = BoundaryFlag::BelowAtStart;
                    row.delta_star = grid.deltas[order[0]];
                } else {
                    const double d0 = grid.deltas[order[j - 1]], d1 = grid.deltas[order[j]];
                    const double s0 = *row.sigma[j - 1], s1 = *s;
                    row.flag = BoundaryFlag::Found;
                    row.delta_star = d0 + (s0 - threshold) / (s0 - s1) * (d1 - d0);
                }
                break;
            }
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

}  // namespace cavsync
