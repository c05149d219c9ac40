#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "rmfc/analysis.hpp"
#include "rmfc/dp.hpp"
#include "rmfc/generate.hpp"
#include "rmfc/pipeline.hpp"

using namespace rmfc;
using namespace rmfc::test;

namespace {

std::optional<AnalysisContext> make_ctx(SrmfcInstance inst, const Rat& eps) {
    auto ex = exhaustive_exact(inst);
    if (!ex.finite || ex.alpha > 1) return std::nullopt;
    AnalysisContext ctx{std::move(inst), ex.witness, {}};
    ctx.th = thresholds(eps, ctx.inst);
    ctx.validate();
    return ctx;
}

}  // namespace

TEST_CASE("core_vertices on T1") {
    auto inst = with_budgets(fixture_t1(), {2, 2});
    AnalysisContext ctx{inst, {1, 5}, thresholds(Rat(1, 2), inst)};
    ctx.validate();
    CHECK(core_vertices(ctx, 2) == VertexSet{2});  // P_a\{a} empty, P_b1\{b1} = {b}
    AnalysisContext none{inst, {3, 4, 5}, ctx.th};
    // with opt on level 2 only, h = 1 sees no opt vertices
    CHECK(core_vertices(none, 1).empty());
}

TEST_CASE("core size bound holds on random instances") {
    Rng rng(91);
    int done = 0;
    for (int iter = 0; iter < 200 && done < 60; ++iter) {
        auto inst = rand_tree(static_cast<int>(rng.range(4, 12)),
                              2 + static_cast<int>(rng.below(4)), 3, 14000 + iter,
                              TreeGenOptions{2, 2, false});
        auto ctx = make_ctx(inst, Rat(1, 2));
        if (!ctx) continue;
        ++done;
        for (int h = 1; h <= inst.tree.height; ++h)
            CHECK_NOTHROW(core_vertices(*ctx, h));  // the bound is asserted inside
    }
    CHECK(done >= 60);
}

TEST_CASE("thinned_core matches a definition replay") {
    Rng rng(92);
    int done = 0;
    for (int iter = 0; iter < 200 && done < 50; ++iter) {
        auto inst = rand_tree(static_cast<int>(rng.range(5, 12)),
                              3 + static_cast<int>(rng.below(3)), 3, 15000 + iter,
                              TreeGenOptions{2, 2, false});
        auto ctx = make_ctx(inst, Rat(1, 2));
        if (!ctx) continue;
        ++done;
        auto thin = thinned_core(*ctx);
        // independent replay of the definition
        const auto& t = inst.tree;
        auto core = core_vertices(*ctx, ctx->th.h_hat);
        VertexSet branchy;
        for (int u : core) {
            int deg = 0;
            if (core.count(t.parent[u])) ++deg;
            for (int c : t.children[u])
                if (core.count(c)) ++deg;
            if (deg >= 3) branchy.insert(u);
        }
        VertexSet expect = core_vertices(*ctx, ctx->th.h_check);
        for (int v = 1; v < t.n; ++v) {
            if (t.level[v] <= ctx->th.h_check) continue;
            for (int u : t.subtree_within(v, ctx->th.kappa)) {
                bool opt_low = ctx->opt.count(u) && t.level[u] <= ctx->th.h_hat;
                if (opt_low || branchy.count(u)) {
                    expect.insert(v);
                    break;
                }
            }
        }
        for (int v : ctx->opt) expect.erase(v);
        CHECK(thin == expect);
        for (int v : thin) CHECK_FALSE(ctx->opt.count(v));
        for (int v : thin) CHECK(core.count(v));
    }
    CHECK(done >= 50);
}

TEST_CASE("path-shaped core has an empty upper thinned part when opt sits high") {
    // spine instance: opt = one deep vertex, the core is a bare path, no
    // branching vertices, so nothing above h_check survives thinning unless
    // the optimum itself sits within kappa levels
    const Rat eps(1, 2);
    std::vector<std::pair<long long, long long>> edges;
    for (int v = 1; v <= 14; ++v) edges.push_back({v - 1, v});
    auto tree = build_tree(edges, 0);
    SrmfcInstance inst{tree, {}};
    inst.budgets.push_back(1);
    for (int l = 2; l <= tree.height; ++l)
        inst.budgets.push_back(eps * rat_pow(Rat(1) + eps, l - 2));
    inst.validate();
    auto th = thresholds(eps, inst);
    REQUIRE(th.h_hat < tree.height);
    AnalysisContext ctx{inst, {14}, th};  // protect the single leaf at the top
    ctx.validate();
    auto thin = thinned_core(ctx);
    // opt lives above h_hat: only the depth-h_check core remains
    CHECK(thin == core_vertices(ctx, th.h_check));
}

TEST_CASE("core-free sparse points yield a partition with 1-feasible bottom") {
    // the partition-generation guarantee, validated with the exhaustive
    // optimum and the exact DP as joint oracles
    Rng rng(93);
    int done = 0;
    for (int iter = 0; iter < 300 && done < 40; ++iter) {
        auto inst = rand_tree(static_cast<int>(rng.range(5, 11)),
                              3 + static_cast<int>(rng.below(3)), 3, 16000 + iter,
                              TreeGenOptions{2, 2, false});
        auto ctx = make_ctx(inst, Rat(1, 2));
        if (!ctx) continue;
        int h = std::min(ctx->th.h_check, inst.tree.height);
        auto core = core_vertices(*ctx, h);
        TreePolytope p;
        p.inst = inst;
        p.alpha = 1;
        p.targets.assign(inst.tree.leaves.begin(), inst.tree.leaves.end());
        p.forbidden = core;
        auto x = solve_vertex(p);
        if (!x) continue;  // blocking the core may cut all fractional cover
        ++done;
        auto parts = partitions_from_point(*x, h, inst);
        bool found = false;
        for (auto& pc : parts) {
            bool bot_ok = pc.bot.empty();
            if (!bot_ok) {
                auto bi = build_bottom(inst, h, pc.bot);
                REQUIRE(bi);
                bot_ok = dp_exact(bi->inst).has_value();
            }
            if (!bot_ok) continue;
            bool top_ok = pc.top.empty();
            if (!top_ok && h < inst.tree.height) {
                auto ti = build_top(inst, h, pc.top);
                if (!ti.infeasible_leaf) {
                    TreePolytope tp;
                    tp.inst = ti.window.inst;
                    tp.alpha = 2;  // x has stretch 1, so the top admits 1 + alpha = 2
                    tp.targets = ti.targets;
                    top_ok = solve_vertex(tp).has_value();
                }
            } else if (!top_ok) {
                top_ok = false;  // no levels above h: top-protection impossible
            }
            if (bot_ok && top_ok) {
                found = true;
                break;
            }
        }
        CHECK(found);
    }
    CHECK(done >= 40);
}

TEST_CASE("partition guarantee with a real top window") {
    // deep spines where h_check lands strictly below L, so the guaranteed
    // partition genuinely splits work between the DP and the LP
    const Rat eps(1, 2);
    for (int tufts : {1, 2}) {
        std::vector<std::pair<long long, long long>> edges;
        for (int v = 1; v <= 14; ++v) edges.push_back({v - 1, v});
        for (int j = 1; j <= tufts; ++j) edges.push_back({7, 100 + j});
        auto tree = build_tree(edges, 0);
        SrmfcInstance inst{tree, {}};
        inst.budgets.push_back(1);
        for (int l = 2; l <= tree.height; ++l)
            inst.budgets.push_back(eps * rat_pow(Rat(1) + eps, l - 2));
        inst.validate();
        auto ctx = make_ctx(inst, eps);
        REQUIRE(ctx);
        int h = ctx->th.h_check;
        REQUIRE(h < tree.height);
        auto core = core_vertices(*ctx, h);
        TreePolytope p;
        p.inst = inst;
        p.alpha = 1;
        p.targets.assign(tree.leaves.begin(), tree.leaves.end());
        p.forbidden = core;
        auto x = solve_vertex(p);
        if (!x) continue;
        bool found = false;
        for (auto& pc : partitions_from_point(*x, h, inst)) {
            bool bot_ok = pc.bot.empty();
            if (!bot_ok) {
                auto bi = build_bottom(inst, h, pc.bot);
                REQUIRE(bi);
                bot_ok = dp_exact(bi->inst).has_value();
            }
            if (!bot_ok) continue;
            bool top_ok = pc.top.empty();
            if (!top_ok) {
                auto ti = build_top(inst, h, pc.top);
                if (ti.infeasible_leaf) continue;
                TreePolytope tp;
                tp.inst = ti.window.inst;
                tp.alpha = 2;
                tp.targets = ti.targets;
                top_ok = solve_vertex(tp).has_value();
            }
            if (top_ok) {
                found = true;
                break;
            }
        }
        CHECK(found);
    }
}
