#include <catch2/catch_amalgamated.hpp>

#include "rmfc/generate.hpp"
#include "rmfc/metric.hpp"
#include "rmfc/nukc_compress.hpp"

using namespace rmfc;

namespace {

// M1: three points on a line at 0, 10, 20, one level with radius 5
SnukcInstance fixture_m1() {
    SnukcInstance inst;
    inst.space.n = 3;
    inst.space.dist = {{0, 10, 20}, {10, 0, 10}, {20, 10, 0}};
    inst.budgets = {1};
    inst.radii = {5};
    inst.validate();
    return inst;
}

}  // namespace

TEST_CASE("metric validation") {
    auto m1 = fixture_m1();
    CHECK_NOTHROW(m1.validate());
    auto bad = m1;
    bad.space.dist[0][2] = 21;  // breaks both symmetry and the triangle
    CHECK_THROWS_AS(bad.space.validate(), MalformedInput);
    bad.space.dist[2][0] = 21;
    CHECK_THROWS_AS(bad.space.validate(), MalformedInput);
}

TEST_CASE("is_feasible on M1") {
    auto m1 = fixture_m1();
    CHECK(is_feasible(m1, {{1, 1}}, 1, 2, true));
    CHECK_FALSE(is_feasible(m1, {{1, 1}}, 1, Rat(19, 10), true));
    CHECK_FALSE(is_feasible(m1, {}, 1, 100, true));
    CHECK(measured_dilation(m1, {{1, 1}}) == Rat(2));
}

TEST_CASE("flatten_budgets") {
    SnukcInstance inst;
    inst.space.n = 2;
    inst.space.dist = {{0, 4}, {4, 0}};
    inst.budgets = {1, 1};
    inst.radii = {3, 1};
    inst.validate();

    // already per-level feasible
    PairSet ok{{0, 1}, {1, 2}};
    CHECK(flatten_budgets(inst, ok, 1) == ok);

    // both centers crowd level 2: one is promoted to level 1
    PairSet crowded{{0, 2}, {1, 2}};
    auto flat = flatten_budgets(inst, crowded, 1);
    std::vector<long> cnt(3, 0);
    for (auto& [v, l] : flat) cnt[l]++;
    CHECK(cnt[1] <= 1);
    CHECK(cnt[2] <= 1);
    // promotion enlarges radii, so coverage can only improve
    auto before = measured_dilation(inst, crowded);
    auto after = measured_dilation(inst, flat);
    REQUIRE(before);
    REQUIRE(after);
    CHECK(*after <= *before);

    PairSet over{{0, 1}, {1, 1}};
    CHECK_THROWS_AS(flatten_budgets(inst, over, 1), PreconditionViolated);

    // classical feasibility counts per level, not prefixes
    CHECK(is_feasible(inst, flat, 1, 4, false));
    CHECK_FALSE(is_feasible(inst, crowded, 1, 100, false));
}

TEST_CASE("beta_candidates") {
    auto m1 = fixture_m1();
    auto cand = beta_candidates(m1);
    CHECK(cand == std::vector<Rat>{2, 4});

    auto zero = m1;
    zero.radii = {0};
    CHECK(beta_candidates(zero).empty());
}

TEST_CASE("exhaustive_nukc") {
    auto m1 = fixture_m1();
    auto res = exhaustive_nukc(m1);
    REQUIRE(res.feasible);
    CHECK(res.beta == 2);
    CHECK(res.witness == PairSet{{1, 1}});
    // the optimal dilation is always a candidate ratio
    auto cand = beta_candidates(m1);
    CHECK(std::find(cand.begin(), cand.end(), res.beta) != cand.end());

    // every point its own center
    SnukcInstance all = m1;
    all.budgets = {3};
    all.radii = {20};
    auto res2 = exhaustive_nukc(all);
    REQUIRE(res2.feasible);
    CHECK(res2.beta <= 1);

    // zero budgets: no center set exists
    SnukcInstance none = m1;
    none.budgets = {Rat(1, 2)};
    auto res3 = exhaustive_nukc(none);
    CHECK_FALSE(res3.feasible);
}

TEST_CASE("exhaustive beta is a candidate on random metrics") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto inst = generate_metric(5 + seed % 3, MetricKind{static_cast<int>(seed % 3)}, 2, 20000 + seed);
        auto res = exhaustive_nukc(inst);
        if (!res.feasible || res.beta == 0) continue;
        auto cand = beta_candidates(inst);
        CHECK(std::find(cand.begin(), cand.end(), res.beta) != cand.end());
    }
}

TEST_CASE("compress_nukc example") {
    // radii round up to powers of two at eps = 1; equal rounded radii merge
    SnukcInstance inst;
    inst.space.n = 3;
    inst.space.dist = {{0, 10, 20}, {10, 0, 10}, {20, 10, 0}};
    inst.budgets = {1, 1, 1};
    inst.radii = {5, 5, 3};
    inst.validate();
    auto comp = compress_nukc(inst, 1);
    // rounded radii (8, 8, 4); levels with radius 8 merge
    REQUIRE(comp.inst.levels() >= 2);
    CHECK(comp.inst.radii[0] == 8);
    CHECK(comp.inst.radii[1] == 4);
    // prefix budgets are powers of two
    Rat pref(0);
    for (int l = 1; l <= comp.inst.levels(); ++l) {
        pref += comp.inst.budgets[l - 1];
        CHECK(rat_pow(Rat(2), ceil_log(Rat(2), pref)) == pref);
    }
    CHECK(comp.inst.budgets[0] >= 2);  // the two merged unit budgets
}

TEST_CASE("compress_nukc is identity-shaped on compressed instances") {
    SnukcInstance inst;
    inst.space.n = 2;
    inst.space.dist = {{0, 3}, {3, 0}};
    inst.budgets = {1, Rat(1), Rat(2)};  // prefixes 1, 2, 4
    inst.radii = {4, 2, 1};
    inst.validate();
    auto comp = compress_nukc(inst, 1);
    CHECK(comp.inst.budgets == inst.budgets);
    CHECK(comp.inst.radii == inst.radii);
    REQUIRE(comp.provenance.size() == 3);
    CHECK(comp.provenance[0] == std::vector<int>{1});
    CHECK(comp.provenance[1] == std::vector<int>{2});
    CHECK(comp.provenance[2] == std::vector<int>{3});
}

TEST_CASE("compress_nukc preserves feasibility and lifts with bounded loss") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        auto inst = generate_metric(4 + seed % 3, MetricKind{static_cast<int>(seed % 3)}, 2, 21000 + seed);
        const Rat eps = seed % 2 == 0 ? Rat(1, 2) : Rat(1);
        auto ex = exhaustive_nukc(inst);
        if (!ex.feasible) continue;
        // fold the optimal dilation into the radii: the scaled instance is
        // (1,1)-feasible
        SnukcInstance scaled = inst;
        for (auto& r : scaled.radii) r *= ex.beta;
        auto comp = compress_nukc(scaled, eps);
        // forward: the witness stays feasible in the compressed instance
        // (its levels map onto compressed levels with no smaller radius)
        auto ex_comp = exhaustive_nukc(comp.inst, 10);
        REQUIRE(ex_comp.feasible);
        CHECK(ex_comp.beta <= 1);
        // lift: a compressed solution loses at most (1+eps) on both axes
        auto lifted = comp.lift(ex_comp.witness);
        CHECK(measured_budget_stretch(scaled, lifted) <= Rat(1) + eps);
        auto dil = measured_dilation(scaled, lifted);
        REQUIRE(dil);
        CHECK(*dil <= (Rat(1) + eps) * ex_comp.beta);
    }
}
