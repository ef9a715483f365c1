#include "cavsync/analysis.hpp"
#include "cavsync/steadystate.hpp"

#include <doctest.h>

#include <cmath>

using namespace cavsync;

namespace {

struct Signal {
    std::vector<double> t, x;
};

Signal damped(double omega, double amp, double tau, double offset = 0.0, double dt = 1e-9) {
    Signal s;
    for (int i = 0; i <= 1000; ++i) {
        const double t = i * dt;
        s.t.push_back(t);
        s.x.push_back(offset + amp * std::cos(omega * t) * std::exp(-t / tau));
    }
    return s;
}

}  // namespace

TEST_CASE("purcell rate") {
    // (1.6 kHz)^2 * 1e5 / 160 kHz = 1.6 MHz, in either unit system.
    CHECK(purcell_rate(1.6e3, 1e5, 1.6e5) == doctest::Approx(1.6e6));
    CHECK(purcell_rate(two_pi * 1.6e3, 1e5, two_pi * 1.6e5) / two_pi == doctest::Approx(1.6e6));
    CHECK_THROWS_AS(purcell_rate(1.0, 1.0, 0.0), ValidationError);
}

TEST_CASE("rabi frequency from a damped cosine") {
    const double w = two_pi * 1.5e7;
    for (auto m : {RabiMethod::PeakSpacing, RabiMethod::SpectralPeak}) {
        const auto s = damped(w, 0.3, 0.5e-6, -0.6);
        const auto r = extract_rabi_frequency(s.t, s.x, 0.0, 1e-6, {m, 0.05});
        CHECK(r.omega == doctest::Approx(w).epsilon(0.02));
        CHECK(r.confidence < 0.1);
        // Amplitude does not shift the estimate.
        const auto s2 = damped(w, 0.003, 0.5e-6, -0.6);
        const auto r2 = extract_rabi_frequency(s2.t, s2.x, 0.0, 1e-6, {m, 0.05});
        CHECK(r2.omega == doctest::Approx(r.omega).epsilon(1e-6));
    }
}

TEST_CASE("rabi extraction refuses flat or monotone signals") {
    Signal s;
    for (int i = 0; i <= 200; ++i) {
        s.t.push_back(i * 1e-9);
        s.x.push_back(std::exp(-i * 1e-2));
    }
    CHECK_THROWS_AS(extract_rabi_frequency(s.t, s.x, 0.0, 2e-7), AnalysisError);
    CHECK_FALSE(try_extract_rabi_frequency(s.t, s.x, 0.0, 2e-7).has_value());
    std::vector<double> flat(s.t.size(), 1.0);
    CHECK_THROWS_AS(extract_rabi_frequency(s.t, flat, 0.0, 2e-7), AnalysisError);
    CHECK_THROWS_AS(extract_rabi_frequency(s.t, s.x, 0.0, 2e-9), AnalysisError);
}

TEST_CASE("peak times are refined") {
    const double w = 2.0;
    std::vector<double> t, x;
    for (int i = 0; i <= 2000; ++i) {
        t.push_back(i * 0.01);
        x.push_back(std::sin(w * t.back()));
    }
    const auto p = find_peak_times(t, x, 0.1);
    REQUIRE(p.size() >= 3);
    CHECK(p[0] == doctest::Approx(std::numbers::pi / 4).epsilon(1e-5));
}

TEST_CASE("sigma ratio") {
    TwoEnsembleSpec spec;
    spec.params.kappa = 1.0;
    CumulantState s(StateLayout(2));
    const auto& L = s.layout();
    s[L.cls(0, ClassMoment::SmSp)] = 0.04;
    s[L.cls(1, ClassMoment::SmSp)] = 0.04;
    s[L.pair(PairMoment::SpSm, 0, 1)] = cplx(0.0, 0.02);
    CHECK(*sigma_ratio(s, 0, 1) == doctest::Approx(0.5));
    CHECK(*sigma_ratio(s, 0, 0) == doctest::Approx(1.0));
    s[L.cls(0, ClassMoment::SmSp)] = 0.0;
    CHECK_FALSE(sigma_ratio(s, 0, 1).has_value());
}

TEST_CASE("sideband detection on a synthetic profile") {
    std::vector<double> d, e;
    for (int i = -50; i <= 50; ++i) {
        const double x = i * 1.0;
        d.push_back(x);
        const double core = std::exp(-x * x / 8.0);
        const double side = 0.01 * (std::exp(-(x - 30) * (x - 30) / 2.0) + std::exp(-(x + 30) * (x + 30) / 2.0));
        e.push_back(core + side + 1e-6);
    }
    SidebandOptions o;
    o.exclusion = 10.0;
    const auto sb = detect_sidebands(d, e, o);
    REQUIRE(sb.size() == 2);
    CHECK(sb[0] == doctest::Approx(-30.0));
    CHECK(sb[1] == doctest::Approx(30.0));
    o.threshold = 0.1;
    CHECK(detect_sidebands(d, e, o).empty());
}

TEST_CASE("sideband detection ignores monotone wings") {
    std::vector<double> d, e;
    for (int i = -50; i <= 50; ++i) {
        d.push_back(i);
        e.push_back(1.0 / (1.0 + i * i));
    }
    SidebandOptions o;
    o.exclusion = 5.0;
    CHECK(detect_sidebands(d, e, o).empty());
}

TEST_CASE("sync boundary interpolation") {
    SweepGrid g;
    g.etas = {1.0};
    g.deltas = {0.0, 1.0, 2.0, 3.0};
    for (double s : {1.0, 0.9, 0.3, 0.1}) {
        SweepPoint p;
        p.sigma_ratio = s;
        p.status = SteadyStatus::Converged;
        g.points.push_back(p);
    }
    const auto rep = sync_boundary(g, 1.0, 1.0, 1.0);
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.rows[0].flag == BoundaryFlag::Found);
    CHECK(*rep.rows[0].delta_star == doctest::Approx(1.0 + 0.4 / 0.6));
    g.points[1].sigma_ratio = 1.0;
    g.points[2].sigma_ratio = 1.0;
    g.points[3].sigma_ratio = 1.0;
    CHECK(sync_boundary(g, 1.0, 1.0, 1.0).rows[0].flag == BoundaryFlag::Absent);
}
