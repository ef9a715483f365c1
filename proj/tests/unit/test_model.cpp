#include "helpers.hpp"

#include "cavsync/model.hpp"

#include <doctest.h>

#include <set>

using namespace cavsync;

TEST_CASE("layout sizes") {
    CHECK(StateLayout(1).size() == 12);
    CHECK(StateLayout(3).size() == 45);
    CHECK(StateLayout(220).size() == 122433);
    // Unreduced count stores every ordered pair separately.
    CHECK(StateLayout(3).naive_equation_count() == 3 + 27 + 36);
    CHECK(StateLayout(220).naive_equation_count() > 190000);
    CHECK_THROWS_AS(StateLayout(0), ValidationError);
}

TEST_CASE("layout index round trip") {
    for (int k : {1, 2, 5, 11}) {
        StateLayout L(k);
        std::set<std::size_t> seen;
        for (std::size_t i = 0; i < L.size(); ++i) {
            const MomentId id = L.id_at(i);
            const auto back = L.index_of(id);
            REQUIRE(back.has_value());
            CHECK(*back == i);
            seen.insert(i);
        }
        CHECK(seen.size() == L.size());
        CHECK_THROWS_AS((void)L.id_at(L.size()), ValidationError);
    }
}

TEST_CASE("pair indices are dense and ordered") {
    StateLayout L(6);
    std::size_t expect = 0;
    for (int k = 0; k < 6; ++k) {
        for (int kp = k + 1; kp < 6; ++kp) CHECK(L.pair_index(k, kp) == expect++);
    }
    CHECK(expect == L.n_pairs());
}

TEST_CASE("reversed orderings resolve to stored moments") {
    std::mt19937_64 rng(7);
    auto s = testutil::random_state(4, rng);
    using K = MomentId::Kind;
    const MomentId pm{K::CrossSpSm, ClassMoment::Sm, 1, 3};
    const MomentId pm_rev{K::CrossSpSm, ClassMoment::Sm, 3, 1};
    CHECK(moment_value(s, pm_rev) == std::conj(moment_value(s, pm)));
    const MomentId mm{K::CrossSmSm, ClassMoment::Sm, 0, 2};
    const MomentId mm_rev{K::CrossSmSm, ClassMoment::Sm, 2, 0};
    CHECK(moment_value(s, mm_rev) == moment_value(s, mm));
    const MomentId zm{K::CrossSzSm, ClassMoment::Sm, 2, 0};
    CHECK(moment_value(s, zm) == s[s.layout().pair(PairMoment::SzSmRev, 0, 2)]);
    CHECK_THROWS_AS((void)expand_pair_moment(s, MomentId{K::CrossSpSm, ClassMoment::Sm, 1, 1}),
                    ValidationError);
}

TEST_CASE("ground state moments") {
    const auto g = ground_state(StateLayout(3));
    const auto p = testutil::product_state(3, {{}, {}, {}}, 0.0);
    for (std::size_t i = 0; i < g.data().size(); ++i) CHECK(g[i] == p[i]);
    CHECK(check_invariants(g).empty());
}

TEST_CASE("invariant checks flag bad states") {
    auto s = ground_state(StateLayout(2));
    s[StateLayout::adag_a()] = {-0.5, 0.1};
    s[s.layout().cls(1, ClassMoment::Sz)] = 1.5;
    CHECK(check_invariants(s).size() == 3);
}

TEST_CASE("parameter validation") {
    PhysicalParams p;
    p.kappa = -1.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    FrequencyClass c{0.0, 0, 1.0};
    CHECK_THROWS_AS(c.validate(), ValidationError);
    DrivePulse d{1.0, 2.0, 1.0};
    CHECK_THROWS_AS(d.validate(), ValidationError);
    CHECK_THROWS_AS(CumulantState(StateLayout(2), std::vector<cplx>(3)), ValidationError);
}

TEST_CASE("drive pulse is half open") {
    DrivePulse d{2.0, 1.0, 3.0};
    CHECK(d.at(0.999) == 0.0);
    CHECK(d.at(1.0) == 2.0);
    CHECK(d.at(2.999) == 2.0);
    CHECK(d.at(3.0) == 0.0);
}
