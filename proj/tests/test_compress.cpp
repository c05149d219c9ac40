#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "rmfc/compress.hpp"
#include "rmfc/dp.hpp"
#include "rmfc/generate.hpp"

using namespace rmfc;
using namespace rmfc::test;

TEST_CASE("down_push") {
    auto inst = with_budgets(fixture_p3(), {1, 2, 1});
    auto pushed = down_push(inst, 2);
    CHECK(pushed.budgets == std::vector<Rat>{3, 0, 1});

    auto two = with_budgets(build_tree({{0, 1}, {1, 2}}, 0), {1, 0});
    CHECK(down_push(two, 2).budgets == std::vector<Rat>{1, 0});

    CHECK_THROWS_AS(down_push(inst, 1), LevelOutOfRange);
}

TEST_CASE("down_push never decreases feasibility") {
    Rng rng(61);
    for (int iter = 0; iter < 100; ++iter) {
        auto inst = rand_tree(static_cast<int>(rng.range(4, 10)), 2 + static_cast<int>(rng.below(3)),
                              3, 8000 + iter);
        int level = 2 + static_cast<int>(rng.below(inst.tree.height - 1));
        auto pushed = down_push(inst, level);
        VertexSet r;
        for (int leaf : inst.tree.leaves) {
            auto path = inst.tree.path_of(leaf);
            r.insert(path[rng.below(path.size())]);
        }
        auto before = stretch_of(inst, r);
        auto after = stretch_of(pushed, r);
        if (!before.infinite) {
            CHECK_FALSE(after.infinite);
            CHECK(after.value <= before.value);
        }
    }
}

TEST_CASE("contract_zero_level on a path") {
    auto inst = with_budgets(fixture_p3(), {1, 0, 1});
    auto c = contract_zero_level(inst, 2);
    CHECK(c.inst.tree.n == 3);
    CHECK(c.inst.budgets == std::vector<Rat>{1, 1});
    CHECK(c.step.old_of_new == std::vector<int>{0, 1, 3});

    CHECK_THROWS_AS(contract_zero_level(with_budgets(fixture_p3(), {1, Rat(1, 2), 1}), 2),
                    NonzeroBudget);
}

TEST_CASE("contract_zero_level with a leaf on the struck level") {
    // root -> a -> {x, y}; a also has leaf z at level 2; striking level 2
    // with z a leaf makes a a leaf and deletes x, y's branches
    auto t = build_tree({{0, 1}, {1, 2}, {2, 3}, {1, 4}}, 0);
    // ids: 0=r,1=a,2,4 level2 (2 has child 3), 4 is leaf z
    auto inst = with_budgets(t, {1, 0, 1});
    auto c = contract_zero_level(inst, 2);
    CHECK(c.inst.tree.n == 2);  // root + a
    CHECK(c.inst.tree.leaves == std::vector<int>{1});
    // equivalence at every stretch: brute-force optimal stretch matches
    auto before = exhaustive_exact(inst);
    auto after = exhaustive_exact(c.inst);
    REQUIRE(before.finite == after.finite);
    if (before.finite) CHECK(before.alpha == after.alpha);
}

TEST_CASE("split_level") {
    auto path2 = with_budgets(build_tree({{0, 1}, {1, 2}}, 0), {3, 1});
    auto s = split_level(path2, 1, 1);
    CHECK(s.inst.budgets == std::vector<Rat>{1, 2, 1});
    CHECK(s.inst.tree.n == 4);  // v1 duplicated
    CHECK(s.inst.tree.height == 3);
    // both halves of the split vertex map back to it
    int dup = 0;
    for (size_t nv = 0; nv < s.step.old_of_new.size(); ++nv)
        if (s.step.old_of_new[nv] == 1) ++dup;
    CHECK(dup == 2);

    auto b = split_level(path2, 2, 1);  // b' = B_l: new level carries zero
    CHECK(b.inst.budgets == std::vector<Rat>{3, 1, 0});

    CHECK_THROWS_AS(split_level(path2, 2, 2), BudgetOutOfRange);
}

TEST_CASE("split and contract preserve the optimal stretch") {
    Rng rng(62);
    for (int iter = 0; iter < 60; ++iter) {
        auto inst = rand_tree(static_cast<int>(rng.range(4, 9)), 2 + static_cast<int>(rng.below(3)),
                              3, 9000 + iter, TreeGenOptions{2, 2, false});
        auto before = exhaustive_exact(inst);
        int level = 1 + static_cast<int>(rng.below(inst.tree.height));
        Rat keep = inst.budgets[level - 1] / Rat(2);
        auto split = split_level(inst, level, keep);
        auto after = exhaustive_exact(split.inst);
        REQUIRE(before.finite == after.finite);
        if (before.finite) CHECK(before.alpha == after.alpha);

        // contraction round-trip on a level pushed to zero
        if (level >= 2) {
            auto pushed = down_push(inst, level);
            auto contracted = contract_zero_level(pushed, level);
            auto ex_push = exhaustive_exact(pushed);
            auto ex_con = exhaustive_exact(contracted.inst);
            REQUIRE(ex_push.finite == ex_con.finite);
            if (ex_push.finite) CHECK(ex_push.alpha == ex_con.alpha);
        }
    }
}

TEST_CASE("compress on P3 with eps = 1") {
    auto inst = with_budgets(fixture_p3(), {1, 1, 1});
    auto comp = compress(inst, 1);
    CHECK(comp.inst.tree.height == 3);
    CHECK(comp.inst.budgets == std::vector<Rat>{1, 1, 2});
    CHECK(comp.inst.tree.n == inst.tree.n);
}

TEST_CASE("compress is a fixed point on compressed instances") {
    // build a 1/2-compressed instance by hand: prefixes 1, 3/2, 9/4
    auto t = rand_tree(8, 3, 2, 123).tree;
    auto inst = with_budgets(t, {1, Rat(1, 2), Rat(3, 4)});
    auto comp = compress(inst, Rat(1, 2));
    CHECK(comp.log.empty());
    CHECK(comp.inst.budgets == inst.budgets);
    CHECK(comp.inst.tree.n == t.n);
}

TEST_CASE("compress requires B1 >= 1") {
    auto inst = with_budgets(fixture_p3(), {Rat(1, 2), 1, 1});
    CHECK_THROWS_AS(compress(inst, 1), PreconditionViolated);
}

TEST_CASE("alpha_candidates") {
    auto p3 = with_budgets(fixture_p3(), {1, 1, 1});
    auto cand = alpha_candidates(p3);
    auto has = [&](const Rat& q) { return std::find(cand.begin(), cand.end(), q) != cand.end(); };
    CHECK(has(Rat(1, 3)));
    CHECK(has(Rat(1, 2)));
    CHECK(has(Rat(2, 3)));
    CHECK(has(1));
    CHECK(std::is_sorted(cand.begin(), cand.end()));

    auto star = with_budgets(fixture_t2(), {3});
    auto cand2 = alpha_candidates(star);
    CHECK(cand2 == std::vector<Rat>{Rat(1, 3), Rat(2, 3), 1, Rat(4, 3)});

    // the optimal stretch is always among the candidates (checked against
    // the brute-force oracle)
    Rng rng(63);
    for (int iter = 0; iter < 60; ++iter) {
        auto inst = rand_tree(static_cast<int>(rng.range(4, 9)), 2 + static_cast<int>(rng.below(3)),
                              3, 10000 + iter);
        auto ex = exhaustive_exact(inst);
        if (!ex.finite) continue;
        auto cs = alpha_candidates(inst);
        if (ex.alpha == 0) continue;
        CHECK(std::find(cs.begin(), cs.end(), ex.alpha) != cs.end());
    }
}

TEST_CASE("compression soundness and lift guarantee") {
    Rng rng(64);
    const std::vector<Rat> epses{Rat(1, 4), Rat(1, 2), Rat(1)};
    int checked = 0;
    for (int iter = 0; iter < 400 && checked < 60; ++iter) {
        auto inst = rand_tree(static_cast<int>(rng.range(4, 9)), 2 + static_cast<int>(rng.below(3)),
                              2, 11000 + iter, TreeGenOptions{2, 2, false});
        if (inst.budgets[0] < 1) inst.budgets[0] = 1;
        const Rat eps = epses[iter % epses.size()];
        auto comp = compress(inst, eps);
        if (comp.inst.tree.n - 1 > 16) continue;
        auto ex_orig = exhaustive_exact(inst);
        auto ex_comp = exhaustive_exact(comp.inst, 16);
        REQUIRE(ex_orig.finite);
        REQUIRE(ex_comp.finite);
        // forward soundness
        CHECK(ex_comp.alpha <= ex_orig.alpha);
        // lifting the compressed optimum costs at most a (1+eps) factor
        auto lifted = comp.lift(ex_comp.witness);
        auto st = stretch_of(inst, lifted);
        CHECK(st.protecting);
        REQUIRE_FALSE(st.infinite);
        CHECK(st.value <= (Rat(1) + eps) * ex_comp.alpha);
        ++checked;
    }
    CHECK(checked >= 60);
}

TEST_CASE("reduce_to_compressed") {
    auto p3 = with_budgets(fixture_p3(), {1, 1, 1});
    auto list = reduce_to_compressed(p3, Rat(1, 2));
    REQUIRE_FALSE(list.empty());
    // every produced candidate is compressed with a unit first-level budget
    bool found = false;
    for (auto& rc : list)
        if (rc.alpha == Rat(1, 3)) {
            found = true;
            CHECK(rc.comp.inst.budgets[0] == 1);
        }
    CHECK(found);

    // at least one candidate yields a 1-feasible compressed instance
    bool feasible = false;
    for (auto& rc : list)
        if (rc.comp.inst.tree.n - 1 <= 16 && exhaustive_one_feasible(rc.comp.inst, 16)) feasible = true;
    CHECK(feasible);

    // forced pre-loop: first level budget below one unit
    auto half = with_budgets(build_tree({{0, 1}, {1, 2}}, 0), {Rat(1, 2), Rat(1, 2)});
    auto rc = compress_candidate(half, 1, Rat(1, 2));
    REQUIRE(rc);
    CHECK(rc->comp.inst.budgets[0] >= 1);
}
