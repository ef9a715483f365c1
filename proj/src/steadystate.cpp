#include "cavsync/steadystate.hpp"

#include "cavsync/analysis.hpp"
#include "cavsync/csv.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#if defined(CAVSYNC_HAVE_OPENMP)
#include <omp.h>
#endif

namespace cavsync {

const char* to_string(SteadyStatus s) {
    switch (s) {
        case SteadyStatus::Converged: return "converged";
        case SteadyStatus::NotConverged: return "not_converged";
        case SteadyStatus::LimitCycle: return "limit_cycle";
    }
    return "unknown";
}

double weighted_residual(const ModelSystem& system, double t, std::span<const cplx> y) {
    std::vector<cplx> f(y.size());
    system.rhs(t, y, f);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double w = std::abs(f[i]) / (1.0 + std::abs(y[i]));
        s += w * w;
    }
    return std::sqrt(s / static_cast<double>(y.size()));
}

double characteristic_rate(const PhysicalParams& p, double extra_rate) {
    return std::max({p.kappa, p.gamma, p.eta, extra_rate});
}

double default_t_max(const PhysicalParams& p) {
    const double slow = std::min(p.kappa, p.gamma + p.eta);
    if (!(slow > 0.0)) throw ValidationError("t_max default needs kappa > 0 and gamma + eta > 0");
    return 50.0 / slow;
}

CumulantState incoherent_state(const StateLayout& layout, double sz0) {
    if (!(sz0 >= -1.0 && sz0 <= 1.0)) throw ValidationError("sz0 must lie in [-1, 1]");
    CumulantState s(layout);
    const cplx z{sz0, 0.0};
    for (int k = 0; k < layout.n_classes(); ++k) {
        s[layout.cls(k, ClassMoment::Sz)] = z;
        s[layout.cls(k, ClassMoment::SzSz)] = z * z;
        for (int kp = k + 1; kp < layout.n_classes(); ++kp) {
            s[layout.pair(PairMoment::SzSz, k, kp)] = z * z;
        }
    }
    return s;
}

namespace {

constexpr std::size_t kNewtonMaxSize = 400;

// Newton iterations on the real form of the rhs with a forward-difference
// Jacobian. A step is kept only when it lowers the residual.
void newton_polish(const ModelSystem& system, std::vector<cplx>& y, double& res) {
    const std::size_t n = y.size();
    const Eigen::Index m = static_cast<Eigen::Index>(2 * n);
    std::vector<cplx> f0(n), f1(n), trial(n);
    Eigen::MatrixXd jac(m, m);
    Eigen::VectorXd rhs(m);
    for (int iter = 0; iter < 8; ++iter) {
        system.rhs(0.0, y, f0);
        for (std::size_t i = 0; i < n; ++i) {
            rhs(2 * i) = -f0[i].real();
            rhs(2 * i + 1) = -f0[i].imag();
        }
        trial = y;
        for (Eigen::Index c = 0; c < m; ++c) {
            const std::size_t i = static_cast<std::size_t>(c / 2);
            const bool im = (c % 2) == 1;
            const double x = im ? y[i].imag() : y[i].real();
            const double h = 1e-7 * std::max(1.0, std::abs(x));
            trial[i] = y[i] + (im ? cplx{0.0, h} : cplx{h, 0.0});
            system.rhs(0.0, trial, f1);
            trial[i] = y[i];
            for (std::size_t j = 0; j < n; ++j) {
                jac(static_cast<Eigen::Index>(2 * j), c) = (f1[j].real() - f0[j].real()) / h;
                jac(static_cast<Eigen::Index>(2 * j + 1), c) = (f1[j].imag() - f0[j].imag()) / h;
            }
        }
        const Eigen::VectorXd dx = jac.colPivHouseholderQr().solve(rhs);
        if (!dx.allFinite()) return;
        for (std::size_t i = 0; i < n; ++i) trial[i] = y[i] + cplx{dx(2 * i), dx(2 * i + 1)};
        const double r1 = weighted_residual(system, 0.0, trial);
        if (!(r1 < res)) return;
        y = trial;
        res = r1;
    }
}

}  // namespace

SteadyStateResult find_steady_state(const ModelSystem& system, const SteadyStateOptions& options,
                                    const std::optional<CumulantState>& initial) {
    if (system.drive().amplitude != 0.0) {
        throw ValidationError("steady state requires a zero coherent drive");
    }
    if (!(options.ss_tol > 0.0)) throw ValidationError("ss_tol must be > 0");
    const auto& p = system.params();
    const double t_max = options.t_max > 0.0 ? options.t_max : default_t_max(p);
    const double scale = characteristic_rate(p, options.extra_rate);
    if (!(scale > 0.0)) throw ValidationError("steady state needs a positive rate scale");
    const double tol = options.ss_tol * scale;

    CumulantState s0 = initial ? *initial : ground_state(system.layout());
    if (!(s0.layout() == system.layout())) throw ValidationError("initial state layout mismatch");
    std::vector<cplx> y(s0.data().begin(), s0.data().end());

    const OdeRhs f = [&system](double t, std::span<const cplx> x, std::span<cplx> dx) {
        system.rhs(t, x, dx);
    };
    const double slow = std::min(p.kappa > 0.0 ? p.kappa : scale,
                                 p.gamma + p.eta > 0.0 ? p.gamma + p.eta : scale);
    const double chunk = std::min(t_max, 2.0 / slow);
    const std::vector<double> no_grid;
    const std::vector<double> no_bp;

    SteadyStateResult r{CumulantState(system.layout()), false, SteadyStatus::NotConverged, 0.0,
                        tol, 0.0};
    std::vector<double> history;
    std::vector<double> photons;
    double t = 0.0;
    std::size_t n_chunks = 0;
    double res = weighted_residual(system, t, y);
    while (true) {
        if (res <= tol) {
            r.converged = true;
            r.status = SteadyStatus::Converged;
            break;
        }
        if (t >= t_max) break;
        ++n_chunks;
        double t1 = static_cast<double>(n_chunks) * chunk;
        if (t1 > t_max || t_max - t1 < 1e-6 * chunk) t1 = t_max;
        solve_ode(f, y, t, t1, no_grid, no_bp, options.integrator);
        t = t1;
        res = weighted_residual(system, t, y);
        history.push_back(res);
        photons.push_back(y[StateLayout::adag_a()].real());
    }
    if (r.converged && y.size() <= kNewtonMaxSize) newton_polish(system, y, res);
    if (!r.converged && history.size() >= 8) {
        // A residual that stopped shrinking while the photon number keeps
        // moving between checkpoints points at a sustained oscillation.
        const std::size_t m = history.size();
        const auto tail = std::span<const double>(history).subspan(m - 4);
        const double lo = *std::min_element(tail.begin(), tail.end());
        const double hi = *std::max_element(tail.begin(), tail.end());
        const auto pt = std::span<const double>(photons).subspan(m - 4);
        const double plo = *std::min_element(pt.begin(), pt.end());
        const double phi = *std::max_element(pt.begin(), pt.end());
        const bool plateau = hi < 2.0 * lo;
        const bool moving = (phi - plo) > 1e-3 * std::max(std::abs(phi), 1e-12);
        if (plateau && moving) r.status = SteadyStatus::LimitCycle;
    }
    r.residual = res;
    r.elapsed_model_time = t;
    r.state = CumulantState(system.layout(), std::move(y));
    return r;
}

std::vector<FrequencyClass> two_ensemble_classes(const TwoEnsembleSpec& spec, double delta) {
    const double dc = spec.params.delta_c;
    double da = dc, db = dc;
    if (spec.convention == DetuningConvention::Symmetric) {
        da = dc - 0.5 * delta;
        db = dc + 0.5 * delta;
    } else {
        db = dc - delta;
    }
    return {FrequencyClass{da, spec.n_a, spec.g}, FrequencyClass{db, spec.n_b, spec.g}};
}

namespace {

SweepPoint solve_point(const TwoEnsembleSpec& spec, double eta, double delta,
                       const SteadyStateOptions& options) {
    PhysicalParams p = spec.params;
    p.eta = eta;
    const ModelSystem sys(p, two_ensemble_classes(spec, delta), DrivePulse{}, EomOptions{});
    SteadyStateOptions o = options;
    if (o.extra_rate <= 0.0 && p.kappa > 0.0) {
        o.extra_rate = purcell_rate(spec.g, static_cast<double>(spec.n_a), p.kappa);
    }
    const auto r = find_steady_state(sys, o);
    SweepPoint pt;
    pt.eta = eta;
    pt.delta = delta;
    pt.n_photons = r.state.photons();
    pt.coh_cross = std::abs(cross_coherence(r.state, 0, 1));
    pt.coh_same = std::abs(cross_coherence(r.state, 0, 0));
    pt.sigma_ratio = sigma_ratio(r.state, 0, 1);
    pt.status = r.status;
    pt.residual = r.residual;
    return pt;
}

}  // namespace

SweepGrid sweep_grid(const TwoEnsembleSpec& spec, const std::vector<double>& etas,
                     const std::vector<double>& deltas, const SteadyStateOptions& options,
                     int threads) {
    if (etas.empty() || deltas.empty()) throw ValidationError("sweep grids must be non-empty");
    if (threads < 1) throw ValidationError("threads must be >= 1");
    spec.params.validate();
    for (double e : etas) {
        if (!(e >= 0.0) || !std::isfinite(e)) throw ValidationError("pump values must be >= 0");
    }
    for (double d : deltas) {
        if (!std::isfinite(d)) throw ValidationError("detuning values must be finite");
    }
    if (spec.n_a < 1 || spec.n_b < 1 || !(spec.g >= 0.0)) {
        throw ValidationError("invalid two-ensemble setup");
    }
    SweepGrid grid{etas, deltas, std::vector<SweepPoint>(etas.size() * deltas.size())};
    const auto n = static_cast<std::ptrdiff_t>(grid.points.size());
    const std::size_t nd = deltas.size();
#if defined(CAVSYNC_HAVE_OPENMP)
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
#endif
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        try {
            grid.points[u] = solve_point(spec, etas[u / nd], deltas[u % nd], options);
        } catch (const IntegrationError&) {
            // Recorded as a failed point; the rest of the sweep continues.
            SweepPoint& pt = grid.points[u];
            pt.eta = etas[u / nd];
            pt.delta = deltas[u % nd];
            pt.status = SteadyStatus::NotConverged;
            pt.residual = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return grid;
}

void write_sweep_csv(std::ostream& out, const SweepGrid& grid) {
    CsvWriter w(out);
    w.header({"eta", "delta", "n_photons", "coh_cross", "coh_same", "sigma_ratio", "converged"});
    for (const auto& p : grid.points) {
        w.row_begin();
        w.field(p.eta / two_pi);
        w.field(p.delta / two_pi);
        w.field(p.n_photons);
        w.field(p.coh_cross);
        w.field(p.coh_same);
        if (p.sigma_ratio) {
            w.field(*p.sigma_ratio);
        } else {
            w.field_text("nan");
        }
        w.field_text(p.status == SteadyStatus::Converged ? "1" : "0");
        w.row_end();
    }
}

}  // namespace cavsync
