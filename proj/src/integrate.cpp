#include "cavsync/integrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fmt/format.h>

namespace cavsync {

void IntegratorConfig::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
        throw ValidationError("integrator tolerances must be > 0");
    }
    if (!(max_step > 0.0)) throw ValidationError("max_step must be > 0");
    if (!(initial_step >= 0.0)) throw ValidationError("initial_step must be >= 0");
    if (method == Method::Rk4) {
        const double h = initial_step > 0.0 ? initial_step : max_step;
        if (!std::isfinite(h)) {
            throw ValidationError("fixed-step RK4 needs a finite initial_step or max_step");
        }
    }
}

std::vector<double> uniform_grid(double t0, double t1, double dt) {
    if (!(dt > 0.0) || !(t1 >= t0)) throw ValidationError("invalid output grid");
    const auto n = static_cast<std::size_t>(std::floor((t1 - t0) / dt * (1.0 + 1e-12) + 1e-6));
    std::vector<double> g(n + 1);
    for (std::size_t i = 0; i <= n; ++i) g[i] = t0 + static_cast<double>(i) * dt;
    g.back() = std::min(g.back(), t1);
    return g;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

double rms_norm(std::span<const cplx> y) {
    double s = 0.0;
    for (const auto& v : y) s += std::norm(v);
    return y.empty() ? 0.0 : std::sqrt(s / static_cast<double>(y.size()));
}

// Weighted RMS over real and imaginary parts as separate components.
double weighted_norm(std::span<const cplx> e, std::span<const cplx> y0,
                     std::span<const cplx> y1, double atol, double rtol) {
    double s = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double sr = atol + rtol * std::max(std::abs(y0[i].real()), std::abs(y1[i].real()));
        const double si = atol + rtol * std::max(std::abs(y0[i].imag()), std::abs(y1[i].imag()));
        const double er = e[i].real() / sr;
        const double ei = e[i].imag() / si;
        s += er * er + ei * ei;
    }
    return e.empty() ? 0.0 : std::sqrt(s / (2.0 * static_cast<double>(e.size())));
}

class Driver {
public:
    Driver(const OdeRhs& rhs, std::vector<cplx>& y, std::span<const double> grid,
           const IntegratorConfig& cfg, const Sampler& sampler)
        : rhs_(rhs), y_(y), grid_(grid), cfg_(cfg), sampler_(sampler), n_(y.size()) {
        for (auto& k : k_) k.assign(n_, cplx{});
        ytmp_.assign(n_, cplx{});
        ynew_.assign(n_, cplx{});
        err_.assign(n_, cplx{});
    }

    void emit_initial(double t0) {
        while (gi_ < grid_.size() && grid_[gi_] <= t0) {
            if (sampler_) sampler_(grid_[gi_], y_);
            ++gi_;
        }
    }

    void segment(double s0, double s1) {
        t_ = s0;
        t_limit_ = std::nextafter(s1, s0);
        eval(t_, y_, k_[0]);
        if (cfg_.method == Method::Rk4) {
            fixed_segment(s0, s1);
        } else {
            adaptive_segment(s0, s1);
        }
    }

    [[nodiscard]] std::size_t emitted() const { return gi_; }

    IntegrationStats stats;

private:
    void eval(double t, std::span<const cplx> y, std::vector<cplx>& out) {
        rhs_(std::min(t, t_limit_), y, out);
        ++stats.rhs_evals;
    }

    [[noreturn]] void fail(const std::string& why) const {
        throw IntegrationError(
            fmt::format("{} at t = {:.6e} s (state rms norm {:.6e})", why, t_, rms_norm(y_)), t_,
            rms_norm(y_));
    }

    double initial_step(double span) {
        if (cfg_.initial_step > 0.0) return std::min(cfg_.initial_step, cfg_.max_step);
        const auto& f0 = k_[0];
        double d0 = 0.0, d1 = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double sr = cfg_.abs_tol + cfg_.rel_tol * std::abs(y_[i].real());
            const double si = cfg_.abs_tol + cfg_.rel_tol * std::abs(y_[i].imag());
            d0 += (y_[i].real() / sr) * (y_[i].real() / sr) + (y_[i].imag() / si) * (y_[i].imag() / si);
            d1 += (f0[i].real() / sr) * (f0[i].real() / sr) + (f0[i].imag() / si) * (f0[i].imag() / si);
        }
        d0 = std::sqrt(d0 / (2.0 * n_));
        d1 = std::sqrt(d1 / (2.0 * n_));
        double h0 = (d0 < 1e-10 || d1 < 1e-10) ? 1e-6 * span : 0.01 * d0 / d1;
        h0 = std::min({h0, cfg_.max_step, span});
        for (std::size_t i = 0; i < n_; ++i) ytmp_[i] = y_[i] + h0 * f0[i];
        eval(t_ + h0, ytmp_, k_[1]);
        double d2 = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double sr = cfg_.abs_tol + cfg_.rel_tol * std::abs(y_[i].real());
            const double si = cfg_.abs_tol + cfg_.rel_tol * std::abs(y_[i].imag());
            const cplx df = k_[1][i] - f0[i];
            d2 += (df.real() / sr) * (df.real() / sr) + (df.imag() / si) * (df.imag() / si);
        }
        d2 = std::sqrt(d2 / (2.0 * n_)) / h0;
        const double dm = std::max(d1, d2);
        const double h1 = dm <= 1e-15 ? std::max(1e-6 * span, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
        return std::min({100.0 * h0, h1, cfg_.max_step, span});
    }

    void check_budget() {
        if (stats.accepted + stats.rejected >= cfg_.max_steps) fail("step budget exhausted");
    }

    // Emits grid points in (t_old, t_new]; the interpolant is set up lazily.
    void emit_step(double t_old, double t_new, double h, std::span<const cplx> y_old,
                   std::span<const cplx> f_old, std::span<const cplx> y_new,
                   std::span<const cplx> f_new, bool use_dopri) {
        while (gi_ < grid_.size() && grid_[gi_] <= t_new) {
            const double tg = grid_[gi_];
            if (tg > t_old) {
                if (tg == t_new) {
                    if (sampler_) sampler_(tg, y_new);
                } else {
                    const double th = (tg - t_old) / h;
                    interpolate(th, h, y_old, f_old, y_new, f_new, use_dopri);
                    if (sampler_) sampler_(tg, ytmp_);
                }
            }
            ++gi_;
        }
    }

    void interpolate(double th, double h, std::span<const cplx> y0, std::span<const cplx> f0,
                     std::span<const cplx> y1, std::span<const cplx> f1, bool use_dopri) {
        if (use_dopri) {
            // Continuous extension of the 5(4) pair (Hairer, Norsett, Wanner).
            const double th1 = 1.0 - th;
            for (std::size_t i = 0; i < n_; ++i) {
                const cplx ydiff = y1[i] - y0[i];
                const cplx bspl = h * f0[i] - ydiff;
                const cplx r4 = ydiff - h * f1[i] - bspl;
                const cplx r5 = h * (d1 * k_[0][i] + d3 * k_[2][i] + d4 * k_[3][i] +
                                     d5 * k_[4][i] + d6 * k_[5][i] + d7 * f1[i]);
                ytmp_[i] = y0[i] + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5)));
            }
            return;
        }
        const double t2 = th * th, t3 = t2 * th;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + th;
        const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        for (std::size_t i = 0; i < n_; ++i) {
            ytmp_[i] = h00 * y0[i] + (h10 * h) * f0[i] + h01 * y1[i] + (h11 * h) * f1[i];
        }
    }

    void adaptive_segment(double s0, double s1) {
        const double span = s1 - s0;
        if (span <= 0.0) return;
        if (h_ <= 0.0) h_ = initial_step(span);
        constexpr double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
        constexpr double fac_grow = 10.0, fac_shrink = 5.0;
        bool last_rejected = false;
        auto& k1 = k_[0];
        auto& k2 = k_[1];
        auto& k3 = k_[2];
        auto& k4 = k_[3];
        auto& k5 = k_[4];
        auto& k6 = k_[5];
        auto& k7 = k_[6];
        while (t_ < s1) {
            check_budget();
            double h = std::min(h_, cfg_.max_step);
            bool last = false;
            if (t_ + 1.01 * h >= s1) {
                h = s1 - t_;
                last = true;
            }
            if (h < 10.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t_), span)) {
                fail("step size underflow");
            }
            const double t = t_;
            for (std::size_t i = 0; i < n_; ++i) ytmp_[i] = y_[i] + h * (a21 * k1[i]);
            eval(t + c2 * h, ytmp_, k2);
            for (std::size_t i = 0; i < n_; ++i)
                ytmp_[i] = y_[i] + h * (a31 * k1[i] + a32 * k2[i]);
            eval(t + c3 * h, ytmp_, k3);
            for (std::size_t i = 0; i < n_; ++i)
                ytmp_[i] = y_[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
            eval(t + c4 * h, ytmp_, k4);
            for (std::size_t i = 0; i < n_; ++i)
                ytmp_[i] = y_[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            eval(t + c5 * h, ytmp_, k5);
            for (std::size_t i = 0; i < n_; ++i)
                ytmp_[i] = y_[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                        a65 * k5[i]);
            eval(t + h, ytmp_, k6);
            for (std::size_t i = 0; i < n_; ++i)
                ynew_[i] = y_[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] +
                                        a76 * k6[i]);
            eval(t + h, ynew_, k7);
            for (std::size_t i = 0; i < n_; ++i)
                err_[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                               e7 * k7[i]);
            const double err = weighted_norm(err_, y_, ynew_, cfg_.abs_tol, cfg_.rel_tol);
            if (!std::isfinite(err)) fail("non-finite value in the state");

            const double fac11 = std::pow(err, expo1);
            if (err <= 1.0) {
                ++stats.accepted;
                stats.smallest_step = std::min(stats.smallest_step, h);
                stats.largest_step = std::max(stats.largest_step, h);
                double fac = fac11 / std::pow(err_old_, beta);
                fac = std::clamp(fac / safe, 1.0 / fac_grow, fac_shrink);
                double hnew = h / fac;
                if (last_rejected) hnew = std::min(hnew, h);
                err_old_ = std::max(err, 1e-4);
                const double t_new = last ? s1 : t + h;
                emit_step(t, t_new, h, y_, k1, ynew_, k7, cfg_.dense == DenseOutput::Dopri);
                std::swap(y_, ynew_);
                std::swap(k1, k7);
                t_ = t_new;
                h_ = hnew;
                last_rejected = false;
            } else {
                ++stats.rejected;
                h_ = h / std::min(fac_shrink, fac11 / safe);
                last_rejected = true;
            }
        }
    }

    void fixed_segment(double s0, double s1) {
        const double span = s1 - s0;
        if (span <= 0.0) return;
        const double step = cfg_.initial_step > 0.0 ? cfg_.initial_step : cfg_.max_step;
        const auto nsteps = static_cast<std::size_t>(std::max(1.0, std::ceil(span / step - 1e-9)));
        const double h = span / static_cast<double>(nsteps);
        auto& k1 = k_[0];
        auto& k2 = k_[1];
        auto& k3 = k_[2];
        auto& k4 = k_[3];
        auto& knext = k_[4];
        double t = s0;
        for (std::size_t s = 0; s < nsteps; ++s) {
            check_budget();
            t_ = t;
            for (std::size_t i = 0; i < n_; ++i) ytmp_[i] = y_[i] + (0.5 * h) * k1[i];
            eval(t + 0.5 * h, ytmp_, k2);
            for (std::size_t i = 0; i < n_; ++i) ytmp_[i] = y_[i] + (0.5 * h) * k2[i];
            eval(t + 0.5 * h, ytmp_, k3);
            for (std::size_t i = 0; i < n_; ++i) ytmp_[i] = y_[i] + h * k3[i];
            eval(t + h, ytmp_, k4);
            for (std::size_t i = 0; i < n_; ++i)
                ynew_[i] = y_[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            const double t_new = (s + 1 == nsteps) ? s1 : s0 + static_cast<double>(s + 1) * h;
            eval(t_new, ynew_, knext);
            for (std::size_t i = 0; i < n_; ++i) {
                if (!std::isfinite(ynew_[i].real()) || !std::isfinite(ynew_[i].imag())) {
                    fail("non-finite value in the state");
                }
            }
            ++stats.accepted;
            stats.smallest_step = std::min(stats.smallest_step, h);
            stats.largest_step = std::max(stats.largest_step, h);
            emit_step(t, t_new, t_new - t, y_, k1, ynew_, knext, false);
            std::swap(y_, ynew_);
            std::swap(k1, knext);
            t_ = t_new;
            t = t_new;
        }
    }

    const OdeRhs& rhs_;
    std::vector<cplx>& y_;
    std::span<const double> grid_;
    const IntegratorConfig& cfg_;
    const Sampler& sampler_;
    std::size_t n_;
    std::array<std::vector<cplx>, 7> k_;
    std::vector<cplx> ytmp_, ynew_, err_;
    std::size_t gi_ = 0;
    double t_ = 0.0;
    double t_limit_ = 0.0;
    double h_ = 0.0;
    double err_old_ = 1e-4;
};

}  // namespace

IntegrationStats solve_ode(const OdeRhs& rhs, std::vector<cplx>& y, double t0, double t1,
                           std::span<const double> grid, std::span<const double> breakpoints,
                           const IntegratorConfig& config, const Sampler& on_sample) {
    config.validate();
    if (!(t1 >= t0)) throw ValidationError("integration span must satisfy t1 >= t0");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < t0 || grid[i] > t1) {
            throw ValidationError(fmt::format("grid point {} lies outside the span", grid[i]));
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw ValidationError("grid must be strictly increasing");
        }
    }
    std::vector<double> cuts{t0};
    for (double b : breakpoints) {
        if (b > t0 && b < t1) cuts.push_back(b);
    }
    std::sort(cuts.begin() + 1, cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    cuts.push_back(t1);

    Driver driver(rhs, y, grid, config, on_sample);
    driver.emit_initial(t0);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) driver.segment(cuts[i], cuts[i + 1]);
    if (driver.emitted() != grid.size()) {
        throw IntegrationError(fmt::format("emitted {} of {} grid points", driver.emitted(),
                                           grid.size()),
                               t1, rms_norm(y));
    }
    return driver.stats;
}

// ---------------------------------------------------------------------------

std::size_t TimeSeries::add_channel(std::string name) {
    names_.push_back(std::move(name));
    data_.emplace_back();
    return names_.size() - 1;
}

bool TimeSeries::has(const std::string& name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::span<const double> TimeSeries::channel(const std::string& name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw ValidationError("no channel named '" + name + "'");
    return data_[static_cast<std::size_t>(it - names_.begin())];
}

void TimeSeries::validate() const {
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) throw ValidationError("time series not increasing");
    }
    for (const auto& d : data_) {
        if (d.size() != times.size()) throw ValidationError("channel length mismatch");
    }
}

std::string sz_channel(int k) { return fmt::format("sz_{}", k); }
std::string coherence_channel(const char* part, int k, int kp) {
    return fmt::format("{}_pm_{}_{}", part, k, kp);
}

cplx cross_coherence(const CumulantState& state, int k, int kp) {
    if (k == kp) {
        // <s+_{k,i} s-_{k,i'}> is the conjugate of the stored <s-_{k,i} s+_{k,i'}>.
        return std::conj(state.cls(k, ClassMoment::SmSp));
    }
    return moment_value(state, MomentId{MomentId::Kind::CrossSpSm, ClassMoment::Sm, k, kp});
}

ChannelRecorder::ChannelRecorder(const StateLayout& layout, ChannelSelection selection)
    : layout_(layout), selection_(std::move(selection)) {
    series_.add_channel("n_photons");
    series_.add_channel("re_a");
    series_.add_channel("im_a");
    for (int k = 0; k < layout_.n_classes(); ++k) series_.add_channel(sz_channel(k));
    for (auto [k, kp] : selection_.coherence_pairs) {
        if (k < 0 || kp < 0 || k >= layout_.n_classes() || kp >= layout_.n_classes()) {
            throw ValidationError(fmt::format("coherence pair ({}, {}) out of range", k, kp));
        }
        series_.add_channel(coherence_channel("re", k, kp));
        series_.add_channel(coherence_channel("im", k, kp));
    }
}

void ChannelRecorder::record(double t, std::span<const cplx> y) {
    series_.times.push_back(t);
    std::size_t c = 0;
    series_.channel_mut(c++).push_back(y[StateLayout::adag_a()].real());
    series_.channel_mut(c++).push_back(y[StateLayout::a()].real());
    series_.channel_mut(c++).push_back(y[StateLayout::a()].imag());
    for (int k = 0; k < layout_.n_classes(); ++k) {
        series_.channel_mut(c++).push_back(y[layout_.cls(k, ClassMoment::Sz)].real());
    }
    for (auto [k, kp] : selection_.coherence_pairs) {
        cplx v;
        if (k == kp) {
            v = std::conj(y[layout_.cls(k, ClassMoment::SmSp)]);
        } else if (k < kp) {
            v = y[layout_.pair(PairMoment::SpSm, k, kp)];
        } else {
            v = std::conj(y[layout_.pair(PairMoment::SpSm, kp, k)]);
        }
        series_.channel_mut(c++).push_back(v.real());
        series_.channel_mut(c++).push_back(v.imag());
    }
}

TransientResult integrate(const ModelSystem& system, const CumulantState& state0, double t0,
                          double t1, std::span<const double> grid,
                          const IntegratorConfig& config, const ChannelSelection& selection) {
    if (!(state0.layout() == system.layout())) {
        throw ValidationError("initial state layout does not match the model");
    }
    if (!(t1 > t0)) throw ValidationError("integration span must be positive");
    ChannelRecorder recorder(system.layout(), selection);
    std::vector<cplx> y(state0.data().begin(), state0.data().end());
    const OdeRhs f = [&system](double t, std::span<const cplx> x, std::span<cplx> dx) {
        system.rhs(t, x, dx);
    };
    const Sampler s = [&recorder](double t, std::span<const cplx> x) { recorder.record(t, x); };
    const auto bps = system.breakpoints();
    auto stats = solve_ode(f, y, t0, t1, grid, bps, config, s);
    return TransientResult{std::move(recorder).take(), CumulantState(system.layout(), std::move(y)),
                           stats};
}

}  // namespace cavsync
