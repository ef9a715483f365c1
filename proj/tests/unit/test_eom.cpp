#include "helpers.hpp"

#include "cavsync/eom.hpp"
#include "cavsync/integrate.hpp"
#include "cavsync/kernels/pair_kernel.hpp"

#include <doctest.h>

#include <numeric>

using namespace cavsync;
using testutil::max_abs;

namespace {

PhysicalParams random_params(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> r(1e4, 1e7);
    std::uniform_real_distribution<double> d(-1e7, 1e7);
    PhysicalParams p;
    p.kappa = r(rng);
    p.gamma = r(rng);
    p.gamma_phi = r(rng);
    p.delta_c = d(rng);
    return p;
}

// Random state whose real-constrained entries are real.
CumulantState physical_random_state(int k, std::mt19937_64& rng) {
    auto s = testutil::random_state(k, rng);
    const auto& L = s.layout();
    s[L.adag_a()] = std::abs(s[L.adag_a()]);
    for (int c = 0; c < k; ++c) {
        for (ClassMoment m : {ClassMoment::Sz, ClassMoment::SmSp, ClassMoment::SzSz}) {
            s[L.cls(c, m)] = s[L.cls(c, m)].real();
        }
        for (int cp = c + 1; cp < k; ++cp) {
            s[L.pair(PairMoment::SzSz, c, cp)] = s[L.pair(PairMoment::SzSz, c, cp)].real();
        }
    }
    return s;
}

}  // namespace

TEST_CASE("third order factorization") {
    CHECK(factorize_third_order(0.5, 0, 0, 0, 0, {0.3, 0.2}) == cplx(0.15, 0.1));
    CHECK(factorize_third_order(1, 1, 1, 1, 1, 1) == cplx(1.0));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    for (int i = 0; i < 20; ++i) {
        cplx v[6];
        for (auto& x : v) x = {n(rng), n(rng)};
        const cplx direct = v[0] * v[5] + v[1] * v[3] + v[2] * v[4] - 2.0 * v[3] * v[4] * v[5];
        CHECK(std::abs(factorize_third_order(v[0], v[1], v[2], v[3], v[4], v[5]) - direct) < 1e-14);
    }
}

TEST_CASE("dark fixed point for random parameters") {
    std::mt19937_64 rng(11);
    for (int k : {1, 3, 10}) {
        for (int trial = 0; trial < 5; ++trial) {
            const ModelSystem sys(random_params(rng), testutil::random_classes(k, rng), DrivePulse{});
            const auto d = sys.rhs(0.0, ground_state(sys.layout()));
            CHECK(max_abs(d.data()) < 1e-14);
        }
    }
}

TEST_CASE("pump moves the ground state") {
    PhysicalParams p;
    p.kappa = 1e5;
    p.eta = 1e6;
    const ModelSystem sys(p, {{0.0, 10, 1e3}}, DrivePulse{});
    const auto d = sys.rhs(0.0, ground_state(sys.layout()));
    CHECK(d.cls(0, ClassMoment::Sz).real() == doctest::Approx(2e6));
}

TEST_CASE("driven empty cavity follows the damped oscillator") {
    PhysicalParams p;
    p.kappa = 2e6;
    p.delta_c = 3e6;
    const double F = 5e6;
    const ModelSystem sys(p, {{1e6, 100, 0.0}}, DrivePulse{F, 0.0, 1.0});
    const cplx wc(p.delta_c, -0.5 * p.kappa);
    const auto exact = [&](double t) {
        return -cplx(0, 1) * F * (1.0 - std::exp(-cplx(0, 1) * wc * t)) / (cplx(0, 1) * wc);
    };

    // Derivative at an arbitrary point matches d/dt of the closed form.
    auto s = ground_state(sys.layout());
    const double t = 0.37e-6;
    s[StateLayout::a()] = exact(t);
    const auto d = sys.rhs(t, s);
    const cplx analytic = -cplx(0, 1) * F * std::exp(-cplx(0, 1) * wc * t);
    CHECK(std::abs(d[StateLayout::a()] - analytic) < 1e-9 * std::abs(analytic));

    IntegratorConfig cfg;
    cfg.rel_tol = 1e-11;
    cfg.abs_tol = 1e-13;
    const auto grid = uniform_grid(0.0, 2e-6, 1e-7);
    const auto r = integrate(sys, ground_state(sys.layout()), 0.0, 2e-6, grid, cfg);
    const auto re = r.series.channel("re_a");
    const auto im = r.series.channel("im_a");
    const auto n = r.series.channel("n_photons");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const cplx a = exact(grid[i]);
        CHECK(std::abs(cplx(re[i], im[i]) - a) < 1e-8 * (1.0 + std::abs(a)));
        // Coherent state: <a+a> = |<a>|^2 fixes the sign of the drive term.
        CHECK(n[i] == doctest::Approx(std::norm(a)).epsilon(1e-7));
    }
    const cplx a_end = r.final_state.a();
    CHECK(std::abs(r.final_state[StateLayout::a2()] - a_end * a_end) < 1e-7 * std::norm(a_end));
}

TEST_CASE("linear collective oscillation at g sqrt N") {
    const double N = 1e8;
    const double g = two_pi * 1.6e3;
    const double w = g * std::sqrt(N);
    const ModelSystem sys(PhysicalParams{}, {{0.0, static_cast<std::int64_t>(N), g}}, DrivePulse{});
    const double theta = 2e-6;
    const auto s0 = testutil::product_state(1, {{theta, 0.0}}, 0.0);
    const double s_amp = 0.5 * std::sin(theta);
    const double quarter = 0.25 * two_pi / w;
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-14;
    const std::vector<double> grid{quarter, 2 * quarter};
    const auto r = integrate(sys, s0, 0.0, 2 * quarter, grid, cfg);
    const double expect = std::sqrt(N) * s_amp;  // |<a>| at a quarter period
    const auto im = r.series.channel("im_a");
    CHECK(-im[0] == doctest::Approx(expect).epsilon(1e-3));
    CHECK(std::abs(im[1]) < 1e-2 * expect);
}

TEST_CASE("total excitation") {
    const ModelSystem sys(PhysicalParams{}, {{0.0, 5, 1.0}, {1.0, 7, 1.0}}, DrivePulse{});
    auto s = ground_state(sys.layout());
    CHECK(sys.total_excitation(s) == 0.0);
    s[StateLayout::adag_a()] = 1.0;
    CHECK(sys.total_excitation(s) == 1.0);
    s[sys.layout().cls(1, ClassMoment::Sz)] = 1.0;
    CHECK(sys.total_excitation(s) == 8.0);
}

TEST_CASE("reality of constrained derivatives") {
    std::mt19937_64 rng(5);
    auto p = random_params(rng);
    p.eta = 3e6;
    const ModelSystem sys(p, testutil::random_classes(6, rng), DrivePulse{1e6, 0.0, 1.0});
    for (int trial = 0; trial < 5; ++trial) {
        const auto s = physical_random_state(6, rng);
        const auto d = sys.rhs(0.5, s);
        const double scale = max_abs(d.data());
        const auto& L = sys.layout();
        CHECK(std::abs(d[L.adag_a()].imag()) <= 1e-12 * scale);
        for (int c = 0; c < 6; ++c) {
            CHECK(std::abs(d.cls(c, ClassMoment::Sz).imag()) <= 1e-12 * scale);
            CHECK(std::abs(d.cls(c, ClassMoment::SmSp).imag()) <= 1e-12 * scale);
            CHECK(std::abs(d.cls(c, ClassMoment::SzSz).imag()) <= 1e-12 * scale);
            for (int cp = c + 1; cp < 6; ++cp) {
                CHECK(std::abs(d[L.pair(PairMoment::SzSz, c, cp)].imag()) <= 1e-12 * scale);
            }
        }
    }
}

TEST_CASE("permutation equivariance") {
    std::mt19937_64 rng(17);
    const int K = 5;
    auto p = random_params(rng);
    p.eta = 1e6;
    const auto classes = testutil::random_classes(K, rng);
    const std::vector<int> perm{3, 0, 4, 1, 2};  // new class j is old class perm[j]
    std::vector<FrequencyClass> permuted;
    for (int j : perm) permuted.push_back(classes[static_cast<std::size_t>(j)]);
    const ModelSystem a(p, classes, DrivePulse{2e6, 0.0, 1.0});
    const ModelSystem b(p, permuted, DrivePulse{2e6, 0.0, 1.0});
    const auto s = physical_random_state(K, rng);
    const auto map_id = [&](MomentId id) {
        if (id.k >= 0) id.k = perm[static_cast<std::size_t>(id.k)];
        if (id.kp >= 0) id.kp = perm[static_cast<std::size_t>(id.kp)];
        return id;
    };
    CumulantState sp(b.layout());
    for (std::size_t i = 0; i < sp.data().size(); ++i) {
        sp[i] = moment_value(s, map_id(b.layout().id_at(i)));
    }
    const auto da = a.rhs(0.2, s);
    const auto db = b.rhs(0.2, sp);
    const double scale = max_abs(da.data());
    for (std::size_t i = 0; i < db.data().size(); ++i) {
        const cplx expect = moment_value(da, map_id(b.layout().id_at(i)));
        CHECK(std::abs(db[i] - expect) <= 1e-12 * scale);
    }
}

TEST_CASE("single emitter has no same-class correlations") {
    PhysicalParams p;
    p.kappa = 1e5;
    p.gamma = 2e5;
    const ModelSystem sys(p, {{0.0, 1, 1e4}}, DrivePulse{1e5, 0.0, 1.0});
    const auto s = testutil::product_state(1, {{0.7, 0.3}}, {0.2, -0.1});
    auto t = s;
    const auto& L = sys.layout();
    for (ClassMoment m : {ClassMoment::SmSz, ClassMoment::SmSp, ClassMoment::SmSm, ClassMoment::SzSz}) {
        t[L.cls(0, m)] += 0.123;
    }
    const auto d1 = sys.rhs(0.0, s);
    const auto d2 = sys.rhs(0.0, t);
    for (ClassMoment m : {ClassMoment::Sm, ClassMoment::Sz, ClassMoment::ASz, ClassMoment::ASm,
                          ClassMoment::ASp}) {
        CHECK(d1.cls(0, m) == d2.cls(0, m));
    }
    for (std::size_t i = 0; i < 3; ++i) CHECK(d1[i] == d2[i]);
}

TEST_CASE("ordering flag changes only the commutator term") {
    std::mt19937_64 rng(2);
    const auto classes = testutil::random_classes(3, rng);
    PhysicalParams p;
    p.kappa = 1e5;
    const ModelSystem a(p, classes, DrivePulse{});
    const ModelSystem b = a.with_options({AzOrdering::DropCommutator, KernelChoice::Auto, 1});
    const auto s = physical_random_state(3, rng);
    const auto da = a.rhs(0.0, s);
    const auto db = b.rhs(0.0, s);
    for (std::size_t i = 0; i < da.data().size(); ++i) {
        const bool asz = a.layout().id_at(i).kind == MomentId::Kind::Class &&
                         a.layout().id_at(i).class_moment == ClassMoment::ASz;
        if (!asz) CHECK(da[i] == db[i]);
    }
    CHECK(da.cls(0, ClassMoment::ASz) != db.cls(0, ClassMoment::ASz));
}

TEST_CASE("scalar and avx2 kernels agree") {
    if (!kernels::cpu_has_avx2()) {
        MESSAGE("AVX2 not available on this CPU; skipping");
        return;
    }
    std::mt19937_64 rng(23);
    for (int K : {2, 3, 8, 37}) {
        auto p = random_params(rng);
        p.eta = 2e6;
        const auto classes = testutil::random_classes(K, rng);
        const ModelSystem sc(p, classes, DrivePulse{1e6, 0.0, 1.0}, {AzOrdering::NormalOrdered, KernelChoice::Scalar, 1});
        const ModelSystem vx = sc.with_options({AzOrdering::NormalOrdered, KernelChoice::Avx2, 1});
        const auto s = physical_random_state(K, rng);
        const auto d1 = sc.rhs(0.0, s);
        const auto d2 = vx.rhs(0.0, s);
        const double scale = max_abs(d1.data());
        double worst = 0.0;
        for (std::size_t i = 0; i < d1.data().size(); ++i) worst = std::max(worst, std::abs(d1[i] - d2[i]));
        CHECK(worst <= 1e-13 * scale);
    }
    CHECK(kernels::kernel_name(kernels::select_pair_kernel(false)) == "scalar");
    CHECK(kernels::kernel_name(kernels::select_pair_kernel(true, true)) == "avx2");
}

TEST_CASE("threaded rhs matches serial within rounding") {
    std::mt19937_64 rng(29);
    const int K = 40;
    auto p = random_params(rng);
    const auto classes = testutil::random_classes(K, rng);
    const ModelSystem one(p, classes, DrivePulse{}, {AzOrdering::NormalOrdered, KernelChoice::Auto, 1});
    const ModelSystem four = one.with_options({AzOrdering::NormalOrdered, KernelChoice::Auto, 4});
    const auto s = physical_random_state(K, rng);
    const auto d1 = one.rhs(0.0, s);
    const auto d4 = four.rhs(0.0, s);
    const auto d4b = four.rhs(0.0, s);
    const double scale = max_abs(d1.data());
    for (std::size_t i = 0; i < d1.data().size(); ++i) {
        CHECK(std::abs(d1[i] - d4[i]) <= 1e-13 * scale);
        CHECK(d4[i] == d4b[i]);  // repeatable at a fixed thread count
    }
}

TEST_CASE("rhs rejects a mismatched state") {
    const ModelSystem sys(PhysicalParams{}, {{0.0, 1, 1.0}, {0.0, 1, 1.0}}, DrivePulse{});
    CHECK_THROWS_AS((void)sys.rhs(0.0, ground_state(StateLayout(3))), ValidationError);
    std::vector<cplx> y(sys.layout().size()), dy(5);
    CHECK_THROWS_AS(sys.rhs(0.0, y, dy), ValidationError);
}

TEST_CASE("breakpoints are the drive edges") {
    const ModelSystem sys(PhysicalParams{}, {{0.0, 1, 1.0}}, DrivePulse{1.0, 0.1, 0.2});
    const auto bp = sys.breakpoints();
    CHECK(bp == std::vector<double>{0.1, 0.2});
}
