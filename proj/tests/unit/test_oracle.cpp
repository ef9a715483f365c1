#include "cavsync/oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace cavsync;

namespace {

IntegratorConfig tight() {
    IntegratorConfig c;
    c.rel_tol = 1e-10;
    c.abs_tol = 1e-12;
    return c;
}

}  // namespace

TEST_CASE("basis operators") {
    SmallSystemSpec s;
    s.fock_cutoff = 2;
    s.emitters = {{0.0, 1.0}, {0.0, 1.0}};
    const OperatorBasis b(s);
    CHECK(b.dimension() == 12);
    // [a, a+] = 1 away from the truncation edge.
    const Eigen::MatrixXcd c = b.a() * b.a().adjoint() - b.a().adjoint() * b.a();
    const auto i = b.index(1, 0b01);
    CHECK(std::abs(c(i, i) - 1.0) < 1e-15);
    // s- s+ + s+ s- = 1.
    const Eigen::MatrixXcd anti = b.sm(1) * b.sm(1).adjoint() + b.sm(1).adjoint() * b.sm(1);
    CHECK((anti - Eigen::MatrixXcd::Identity(12, 12)).norm() < 1e-14);
    CHECK((b.sz(0) - (b.sm(0).adjoint() * b.sm(0) - b.sm(0) * b.sm(0).adjoint())).norm() < 1e-14);
}

TEST_CASE("dimension guard") {
    SmallSystemSpec s;
    s.fock_cutoff = 40;
    s.emitters = {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}};
    CHECK(s.dimension() == 41 * 8);
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s.fock_cutoff = 0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("cavity loss") {
    SmallSystemSpec s;
    s.fock_cutoff = 4;
    s.emitters = {{0.0, 0.0}};
    s.params.kappa = 1e6;
    const auto rho0 = initial_density(s, {2, {}});
    const std::vector<double> grid{0.5e-6, 1e-6};
    const auto r = evolve_exact(s, rho0, 0.0, 1e-6, grid, tight());
    const auto n = r.series.channel("n_photons");
    CHECK(n[0] == doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-8));
    CHECK(n[1] == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-8));
}

TEST_CASE("spin decay and pump") {
    SmallSystemSpec s;
    s.fock_cutoff = 1;
    s.emitters = {{0.0, 0.0}};
    s.params.gamma = 2e6;
    const std::vector<double> grid{0.3e-6};
    auto r = evolve_exact(s, initial_density(s, {0, {0}}), 0.0, 0.3e-6, grid, tight());
    CHECK(r.series.channel("sz_0")[0] == doctest::Approx(-1.0 + 2.0 * std::exp(-0.6)).epsilon(1e-8));

    s.params.eta = 6e6;
    r = evolve_exact(s, initial_density(s, {}), 0.0, 20e-6, std::vector<double>{20e-6}, tight());
    CHECK(r.series.channel("sz_0")[0] == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("vacuum rabi oscillation at 2g") {
    SmallSystemSpec s;
    s.fock_cutoff = 2;
    const double g = 1e6;
    s.emitters = {{0.0, g}};
    std::vector<double> grid;
    for (int i = 1; i <= 20; ++i) grid.push_back(i * 0.1e-6);
    const auto r = evolve_exact(s, initial_density(s, {0, {0}}), 0.0, 2e-6, grid, tight());
    const auto z = r.series.channel("sz_0");
    const auto n = r.series.channel("n_photons");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(z[i] == doctest::Approx(std::cos(2 * g * grid[i])).epsilon(1e-7));
        CHECK(n[i] + 0.5 * (1 + z[i]) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("closed system energy") {
    SmallSystemSpec s;
    s.fock_cutoff = 3;
    s.emitters = {{1e6, 2e6}, {-5e5, 1.5e6}};
    s.params.delta_c = 2e5;
    const auto rho0 = initial_density(s, {1, {0}});
    const Liouvillian L(s);
    const Eigen::MatrixXcd H = L.hamiltonian(0.0);
    const double e0 = (rho0 * H).trace().real();
    const auto r = evolve_exact(s, rho0, 0.0, 3e-6, std::vector<double>{3e-6}, tight());
    const double e1 = (r.final_rho * H).trace().real();
    CHECK(std::abs(e1 - e0) <= 1e-9 * std::abs(e0));
    CHECK(check_density(r.final_rho).empty());
}

TEST_CASE("ground state is stationary") {
    SmallSystemSpec s;
    s.fock_cutoff = 2;
    s.emitters = {{0.0, 1e6}, {3e5, 1e6}};
    s.params.kappa = 1e6;
    s.params.gamma = 1e6;
    s.params.gamma_phi = 1e6;
    const auto rho = initial_density(s, {});
    Eigen::MatrixXcd out(rho.rows(), rho.cols());
    Liouvillian(s).apply(0.0, rho, out);
    CHECK(out.norm() < 1e-12);
}

TEST_CASE("liouvillian matches the commutator form") {
    SmallSystemSpec s;
    s.fock_cutoff = 2;
    s.emitters = {{2e5, 1e6}, {-1e5, 8e5}};
    s.params = {1e6, 2e5, 3e5, 4e5, 1e5};
    s.drive = {5e5, 0.0, 1.0};
    const Liouvillian L(s);
    const auto& b = L.basis();
    const auto n = static_cast<Eigen::Index>(b.dimension());
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Random(n, n);
    rho = (rho * rho.adjoint()).eval();
    rho /= rho.trace();
    const auto D = [&](const Eigen::MatrixXcd& c, double rate) {
        const Eigen::MatrixXcd cd = c.adjoint();
        return Eigen::MatrixXcd(rate * (c * rho * cd - 0.5 * (cd * c * rho + rho * cd * c)));
    };
    const Eigen::MatrixXcd H = L.hamiltonian(0.5);
    Eigen::MatrixXcd ref = cplx(0, -1) * (H * rho - rho * H);
    ref += D(b.a(), s.params.kappa);
    for (int i = 0; i < 2; ++i) {
        ref += D(b.sm(i), s.params.gamma);
        ref += D(b.sz(i), 0.5 * s.params.gamma_phi);
        ref += D(b.sm(i).adjoint(), s.params.eta);
    }
    Eigen::MatrixXcd out(n, n);
    L.apply(0.5, rho, out);
    CHECK((out - ref).norm() < 1e-9 * ref.norm());
}

TEST_CASE("grouping identical emitters") {
    SmallSystemSpec s;
    s.emitters = {{0.0, 1.0}, {1.0, 1.0}, {0.0, 1.0}};
    const auto g = group_emitters(s);
    REQUIRE(g.classes.size() == 2);
    CHECK(g.classes[0].n_emitters == 2);
    CHECK(g.members[0] == std::vector<int>{0, 2});
    s.emitters.clear();
    CHECK_THROWS_AS(group_emitters(s), ValidationError);
}

TEST_CASE("density checks") {
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(2, 2);
    rho(0, 0) = 1.2;
    rho(1, 1) = -0.2;
    rho(0, 1) = 0.1;
    CHECK(check_density(rho).size() >= 2);
}

TEST_CASE("adaptive cutoff grows until converged") {
    SmallSystemSpec s;
    s.fock_cutoff = 1;
    s.emitters = {{0.0, 1e5}};
    s.params.kappa = 1e6;
    s.drive = {2e5, 0.0, 1e-6};
    const auto grid = std::vector<double>{0.5e-6, 1e-6};
    const auto r = evolve_adaptive(s, {}, 0.0, 1e-6, grid, tight(), {}, 1e-6);
    CHECK(r.fock_cutoff >= 3);
    CHECK(r.max_cutoff_population < 1e-6);
}

TEST_CASE("comparison report") {
    TimeSeries a, b;
    a.times = b.times = {0.0, 1.0, 2.0};
    a.add_channel("n_photons");
    b.add_channel("n_photons");
    a.channel_mut(0) = {0.0, 1.0, 2.0};
    b.channel_mut(0) = {0.0, 1.1, 2.0};
    const auto rep = compare_series(a, b);
    CHECK(rep.channel("n_photons").max_rel_deviation == doctest::Approx(0.05));
    CHECK(rep.channel("n_photons").time_of_max == 1.0);
}
