#include "cavsync/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace cavsync {

std::size_t SmallSystemSpec::dimension() const {
    if (fock_cutoff < 0 || emitters.size() > 16) return std::numeric_limits<std::size_t>::max();
    return static_cast<std::size_t>(fock_cutoff + 1) << emitters.size();
}

void SmallSystemSpec::validate() const {
    params.validate();
    drive.validate();
    if (fock_cutoff < 1) throw ValidationError("fock_cutoff must be >= 1");
    if (dimension() > kOracleMaxDimension) {
        throw ValidationError(fmt::format("oracle dimension (n_max+1)*2^N = {} exceeds {}",
                                          dimension(), kOracleMaxDimension));
    }
    for (const auto& e : emitters) {
        if (!std::isfinite(e.delta) || !(e.g >= 0.0) || !std::isfinite(e.g)) {
            throw ValidationError("oracle emitter needs finite delta and g >= 0");
        }
    }
}

OperatorBasis::OperatorBasis(const SmallSystemSpec& spec)
    : n_(static_cast<int>(spec.emitters.size())), n_max_(spec.fock_cutoff) {
    spec.validate();
    dim_ = spec.dimension();
    const auto d = static_cast<Eigen::Index>(dim_);
    const unsigned n_spin_states = 1u << n_;
    a_ = Eigen::MatrixXcd::Zero(d, d);
    for (int n = 1; n <= n_max_; ++n) {
        for (unsigned s = 0; s < n_spin_states; ++s) {
            a_(static_cast<Eigen::Index>(index(n - 1, s)), static_cast<Eigen::Index>(index(n, s))) =
                std::sqrt(static_cast<double>(n));
        }
    }
    for (int i = 0; i < n_; ++i) {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
        Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(d, d);
        const unsigned bit = 1u << i;
        for (int n = 0; n <= n_max_; ++n) {
            for (unsigned s = 0; s < n_spin_states; ++s) {
                const auto r = static_cast<Eigen::Index>(index(n, s));
                z(r, r) = (s & bit) ? 1.0 : -1.0;
                if (s & bit) m(static_cast<Eigen::Index>(index(n, s & ~bit)), r) = 1.0;
            }
        }
        sm_.push_back(std::move(m));
        sz_.push_back(std::move(z));
    }
}

std::size_t OperatorBasis::index(int photons, unsigned bits) const {
    return (static_cast<std::size_t>(photons) << n_) + bits;
}

Liouvillian::Liouvillian(const SmallSystemSpec& spec) : spec_(spec), basis_(spec) {
    const auto d = static_cast<Eigen::Index>(basis_.dimension());
    const auto& p = spec.params;
    const Eigen::MatrixXcd& a = basis_.a();
    h0_ = p.delta_c * (a.adjoint() * a);
    hd_ = a + a.adjoint();
    for (int i = 0; i < basis_.n_emitters(); ++i) {
        const auto& e = spec.emitters[static_cast<std::size_t>(i)];
        const Eigen::MatrixXcd& sm = basis_.sm(i);
        h0_ += 0.5 * e.delta * basis_.sz(i);
        h0_ += e.g * (a * sm.adjoint() + a.adjoint() * sm);
    }
    auto add = [&](double rate, const Eigen::MatrixXcd& op) {
        if (rate > 0.0) {
            c_.push_back(std::sqrt(rate) * op);
            cd_.push_back(c_.back().adjoint());
        }
    };
    add(p.kappa, a);
    for (int i = 0; i < basis_.n_emitters(); ++i) {
        add(p.gamma, basis_.sm(i));
        add(0.5 * p.gamma_phi, basis_.sz(i));
        add(p.eta, basis_.sm(i).adjoint());
    }
    k_ = Eigen::MatrixXcd::Zero(d, d);
    for (std::size_t j = 0; j < c_.size(); ++j) k_ += cd_[j] * c_[j];
}

Eigen::MatrixXcd Liouvillian::hamiltonian(double t) const { return h0_ + spec_.drive.at(t) * hd_; }

void Liouvillian::apply(double t, const Eigen::Ref<const Eigen::MatrixXcd>& rho,
                        Eigen::Ref<Eigen::MatrixXcd> out) const {
    const cplx mi{0.0, -1.0};
    // Effective non-Hermitian part: -i H_eff rho + h.c. with H_eff = H - i K/2.
    Eigen::MatrixXcd heff = h0_;
    const double f = spec_.drive.at(t);
    if (f != 0.0) heff += f * hd_;
    heff -= cplx{0.0, 0.5} * k_;
    Eigen::MatrixXcd left = mi * (heff * rho);
    out = left + left.adjoint();
    for (std::size_t j = 0; j < c_.size(); ++j) out.noalias() += c_[j] * rho * cd_[j];
}

Liouvillian build_liouvillian(const SmallSystemSpec& spec) { return Liouvillian(spec); }

OracleGrouping group_emitters(const SmallSystemSpec& spec) {
    OracleGrouping g;
    for (int i = 0; i < static_cast<int>(spec.emitters.size()); ++i) {
        const auto& e = spec.emitters[static_cast<std::size_t>(i)];
        bool placed = false;
        for (std::size_t c = 0; c < g.classes.size(); ++c) {
            if (g.classes[c].delta == e.delta && g.classes[c].g == e.g) {
                ++g.classes[c].n_emitters;
                g.members[c].push_back(i);
                placed = true;
                break;
            }
        }
        if (!placed) {
            g.classes.push_back(FrequencyClass{e.delta, 1, e.g});
            g.members.push_back({i});
        }
    }
    if (g.classes.empty()) throw ValidationError("oracle needs at least one emitter");
    return g;
}

DensityOperator initial_density(const SmallSystemSpec& spec, const OracleInitial& init) {
    const OperatorBasis b(spec);
    if (init.photons < 0 || init.photons > spec.fock_cutoff) {
        throw ValidationError("initial photon number outside the Fock cutoff");
    }
    unsigned bits = 0;
    for (int i : init.excited) {
        if (i < 0 || i >= b.n_emitters()) throw ValidationError("excited emitter index out of range");
        bits |= 1u << i;
    }
    const auto d = static_cast<Eigen::Index>(b.dimension());
    DensityOperator rho = DensityOperator::Zero(d, d);
    const auto idx = static_cast<Eigen::Index>(b.index(init.photons, bits));
    rho(idx, idx) = 1.0;
    return rho;
}

std::vector<std::string> check_density(const DensityOperator& rho, double herm_tol,
                                       double trace_tol, double eig_tol) {
    std::vector<std::string> v;
    const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (herm > herm_tol) v.push_back(fmt::format("non-Hermitian by {:.3e}", herm));
    const cplx tr = rho.trace();
    if (std::abs(tr - 1.0) > trace_tol) {
        v.push_back(fmt::format("trace {:.12f}{:+.3e}i", tr.real(), tr.imag()));
    }
    const Eigen::MatrixXcd hs = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hs, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    if (lo < -eig_tol) v.push_back(fmt::format("negative eigenvalue {:.3e}", lo));
    return v;
}

namespace {

cplx expect(const Eigen::MatrixXcd& op, const DensityOperator& rho) {
    // Tr(O rho) = sum_ij O_ij rho_ji
    return (op.cwiseProduct(rho.transpose())).sum();
}

}  // namespace

CumulantState moments_from_density(const OperatorBasis& basis, const OracleGrouping& grouping,
                                   const DensityOperator& rho) {
    const int kc = static_cast<int>(grouping.classes.size());
    const StateLayout layout(kc);
    CumulantState s(layout);
    const Eigen::MatrixXcd& a = basis.a();
    s[StateLayout::a()] = expect(a, rho);
    s[StateLayout::a2()] = expect(a * a, rho);
    s[StateLayout::adag_a()] = expect(a.adjoint() * a, rho);

    // Tr(A B rho) without forming A B for every pair.
    auto pair_expect = [&](const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
        return expect(A, B * rho);
    };
    for (int k = 0; k < kc; ++k) {
        const auto& mem = grouping.members[static_cast<std::size_t>(k)];
        const double inv = 1.0 / static_cast<double>(mem.size());
        cplx sm{}, sz{}, asz{}, asm_{}, asp{};
        for (int i : mem) {
            sm += expect(basis.sm(i), rho);
            sz += expect(basis.sz(i), rho);
            asz += pair_expect(a, basis.sz(i));
            asm_ += pair_expect(a, basis.sm(i));
            asp += pair_expect(a, basis.sm(i).adjoint());
        }
        s[layout.cls(k, ClassMoment::Sm)] = sm * inv;
        s[layout.cls(k, ClassMoment::Sz)] = sz * inv;
        s[layout.cls(k, ClassMoment::ASz)] = asz * inv;
        s[layout.cls(k, ClassMoment::ASm)] = asm_ * inv;
        s[layout.cls(k, ClassMoment::ASp)] = asp * inv;
        if (mem.size() >= 2) {
            cplx mz{}, mp{}, mm{}, zz{};
            std::size_t cnt = 0;
            for (int i : mem) {
                for (int j : mem) {
                    if (i == j) continue;
                    mz += pair_expect(basis.sm(i), basis.sz(j));
                    mp += pair_expect(basis.sm(i), basis.sm(j).adjoint());
                    mm += pair_expect(basis.sm(i), basis.sm(j));
                    zz += pair_expect(basis.sz(i), basis.sz(j));
                    ++cnt;
                }
            }
            const double ic = 1.0 / static_cast<double>(cnt);
            s[layout.cls(k, ClassMoment::SmSz)] = mz * ic;
            s[layout.cls(k, ClassMoment::SmSp)] = mp * ic;
            s[layout.cls(k, ClassMoment::SmSm)] = mm * ic;
            s[layout.cls(k, ClassMoment::SzSz)] = zz * ic;
        }
    }
    for (int k = 0; k < kc; ++k) {
        for (int kp = k + 1; kp < kc; ++kp) {
            const auto& m1 = grouping.members[static_cast<std::size_t>(k)];
            const auto& m2 = grouping.members[static_cast<std::size_t>(kp)];
            cplx mm{}, zz{}, zm{}, zmr{}, pm{};
            for (int i : m1) {
                for (int j : m2) {
                    mm += pair_expect(basis.sm(i), basis.sm(j));
                    zz += pair_expect(basis.sz(i), basis.sz(j));
                    zm += pair_expect(basis.sz(i), basis.sm(j));
                    zmr += pair_expect(basis.sz(j), basis.sm(i));
                    pm += pair_expect(basis.sm(i).adjoint(), basis.sm(j));
                }
            }
            const double ic = 1.0 / static_cast<double>(m1.size() * m2.size());
            s[layout.pair(PairMoment::SmSm, k, kp)] = mm * ic;
            s[layout.pair(PairMoment::SzSz, k, kp)] = zz * ic;
            s[layout.pair(PairMoment::SzSm, k, kp)] = zm * ic;
            s[layout.pair(PairMoment::SzSmRev, k, kp)] = zmr * ic;
            s[layout.pair(PairMoment::SpSm, k, kp)] = pm * ic;
        }
    }
    return s;
}

OracleResult evolve_exact(const SmallSystemSpec& spec, const DensityOperator& rho0, double t0,
                          double t1, std::span<const double> grid, const IntegratorConfig& config,
                          const ChannelSelection& selection) {
    const Liouvillian L(spec);
    const auto& basis = L.basis();
    const auto d = static_cast<Eigen::Index>(basis.dimension());
    if (rho0.rows() != d || rho0.cols() != d) throw ValidationError("rho0 has the wrong dimension");
    if (const auto bad = check_density(rho0); !bad.empty()) {
        throw ValidationError("invalid initial density operator: " + bad.front());
    }

    OracleResult res;
    res.grouping = group_emitters(spec);
    res.fock_cutoff = spec.fock_cutoff;
    const StateLayout layout(static_cast<int>(res.grouping.classes.size()));
    ChannelRecorder recorder(layout, selection);

    std::vector<cplx> y(static_cast<std::size_t>(d * d));
    Eigen::Map<Eigen::MatrixXcd>(y.data(), d, d) = rho0;

    const OdeRhs f = [&L, d](double t, std::span<const cplx> x, std::span<cplx> dx) {
        const Eigen::Map<const Eigen::MatrixXcd> r(x.data(), d, d);
        Eigen::Map<Eigen::MatrixXcd> o(dx.data(), d, d);
        L.apply(t, r, o);
    };
    const unsigned n_spin = 1u << basis.n_emitters();
    const Sampler sample = [&](double t, std::span<const cplx> x) {
        const DensityOperator rho = Eigen::Map<const Eigen::MatrixXcd>(x.data(), d, d);
        const double drift = std::abs(rho.trace() - 1.0);
        res.max_trace_drift = std::max(res.max_trace_drift, drift);
        if (drift > 1e-8) {
            throw OracleError(fmt::format(
                "trace drift {:.3e} at t = {:.6e} s (cutoff too small or tolerance too loose)",
                drift, t));
        }
        if (const auto bad = check_density(rho, 1e-10, 1e-8, 1e-9); !bad.empty()) {
            throw OracleError(fmt::format("density operator at t = {:.6e} s: {}", t, bad.front()));
        }
        for (int i = 0; i < basis.n_emitters(); ++i) {
            const cplx pp = expect(basis.sm(i).adjoint() * basis.sm(i), rho);
            const cplx z = expect(basis.sz(i), rho);
            if (std::abs(pp - 0.5 * (1.0 + z)) > 1e-9) {
                throw OracleError(fmt::format("s+s- != (1+sz)/2 for emitter {} at t = {:.6e}", i, t));
            }
        }
        double top = 0.0;
        for (unsigned s = 0; s < n_spin; ++s) {
            const auto ii = static_cast<Eigen::Index>(basis.index(basis.fock_cutoff(), s));
            top += rho(ii, ii).real();
        }
        res.max_cutoff_population = std::max(res.max_cutoff_population, top);
        auto m = moments_from_density(basis, res.grouping, rho);
        recorder.record(t, m.data());
        res.moments.push_back(std::move(m));
    };
    std::vector<double> bps{spec.drive.t_on, spec.drive.t_off};
    res.stats = solve_ode(f, y, t0, t1, grid, bps, config, sample);
    res.final_rho = Eigen::Map<const Eigen::MatrixXcd>(y.data(), d, d);
    res.series = std::move(recorder).take();
    return res;
}

namespace {

double max_channel_change(const TimeSeries& a, const TimeSeries& b) {
    double m = 0.0;
    for (std::size_t c = 0; c < a.n_channels(); ++c) {
        const auto x = a.channel(c);
        const auto y = b.channel(a.names()[c]);
        for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
    }
    return m;
}

}  // namespace

OracleResult evolve_adaptive(SmallSystemSpec spec, const OracleInitial& init, double t0,
                             double t1, std::span<const double> grid,
                             const IntegratorConfig& config, const ChannelSelection& selection,
                             double change_tol) {
    spec.validate();
    OracleResult prev = evolve_exact(spec, initial_density(spec, init), t0, t1, grid, config,
                                     selection);
    while (true) {
        SmallSystemSpec next = spec;
        next.fock_cutoff += 2;
        if (next.dimension() > kOracleMaxDimension) {
            throw OracleError(fmt::format(
                "Fock cutoff not converged at n_max = {} within the dimension limit",
                spec.fock_cutoff));
        }
        OracleResult cur = evolve_exact(next, initial_density(next, init), t0, t1, grid, config,
                                        selection);
        if (max_channel_change(prev.series, cur.series) < change_tol) return cur;
        spec = next;
        prev = std::move(cur);
    }
}

const ChannelDeviation& ComparisonReport::channel(const std::string& name) const {
    for (const auto& c : channels) {
        if (c.name == name) return c;
    }
    throw ValidationError("no compared channel named '" + name + "'");
}

ComparisonReport compare_series(const TimeSeries& model, const TimeSeries& reference) {
    if (model.times.size() != reference.times.size()) {
        throw ValidationError("series to compare have different lengths");
    }
    for (std::size_t i = 0; i < model.times.size(); ++i) {
        const double tol = 1e-12 * std::max(1.0, std::abs(reference.times[i]));
        if (std::abs(model.times[i] - reference.times[i]) > tol) {
            throw ValidationError("series to compare are sampled at different times");
        }
    }
    ComparisonReport rep;
    const std::size_t n = reference.times.size();
    for (const auto& name : reference.names()) {
        if (!model.has(name)) continue;
        const auto ref = reference.channel(name);
        const auto mod = model.channel(name);
        std::vector<double> r(ref.begin(), ref.end()), m(mod.begin(), mod.end());
        double peak = 0.0;
        if (name.rfind("sz_", 0) == 0) {
            for (std::size_t i = 0; i < n; ++i) {
                r[i] = 0.5 * (1.0 + r[i]);
                m[i] = 0.5 * (1.0 + m[i]);
            }
        }
        const bool is_re = name.rfind("re_", 0) == 0;
        const bool is_im = name.rfind("im_", 0) == 0;
        if (is_re || is_im) {
            const std::string other = (is_re ? "im_" : "re_") + name.substr(3);
            const auto o = reference.has(other) ? reference.channel(other) : std::span<const double>{};
            for (std::size_t i = 0; i < n; ++i) {
                const double oi = o.empty() ? 0.0 : o[i];
                peak = std::max(peak, std::hypot(r[i], oi));
            }
        } else {
            for (double v : r) peak = std::max(peak, std::abs(v));
        }
        ChannelDeviation dev{name, 0.0, reference.times.empty() ? 0.0 : reference.times[0], peak};
        for (std::size_t i = 0; i < n; ++i) {
            const double diff = std::abs(m[i] - r[i]);
            const double rel = peak > 0.0 ? diff / peak : (diff > 0.0 ? INFINITY : 0.0);
            if (rel > dev.max_rel_deviation) {
                dev.max_rel_deviation = rel;
                dev.time_of_max = reference.times[i];
            }
        }
        rep.channels.push_back(dev);
    }
    return rep;
}

void write_comparison_json(std::ostream& out, const ComparisonReport& report) {
    nlohmann::ordered_json j;
    j["fock_cutoff"] = report.fock_cutoff;
    j["max_cutoff_population"] = report.max_cutoff_population;
    auto& ch = j["channels"];
    ch = nlohmann::ordered_json::object();
    for (const auto& c : report.channels) {
        ch[c.name] = {{"max_rel_deviation", c.max_rel_deviation},
                      {"time_of_max", c.time_of_max},
                      {"reference_peak", c.reference_peak}};
    }
    out << j.dump(2) << '\n';
}

}  // namespace cavsync
