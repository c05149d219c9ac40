#pragma once

#include <optional>
#include <vector>

#include "rmfc/compress.hpp"
#include "rmfc/dp.hpp"
#include "rmfc/explore.hpp"
#include "rmfc/lp.hpp"

namespace rmfc {

// Bottom instance of a partition: the subtree spanned by the bottom-leaf
// paths up to level h, protect-all-leaves form. Vertex ids map back through
// orig_of_new.
struct BottomInstance {
    SrmfcInstance inst;
    std::vector<int> orig_of_new;
};

inline std::optional<BottomInstance> build_bottom(const SrmfcInstance& src, int h,
                                                  const VertexSet& bot_leaves) {
    const RootedTree& t = src.tree;
    VertexSet anchors;
    for (int leaf : bot_leaves) {
        int u = leaf;
        while (t.level[u] > h) u = t.parent[u];
        anchors.insert(u);
    }
    if (anchors.empty()) return std::nullopt;
    auto pruned = normalize_targets(t, anchors);
    BottomInstance out;
    out.inst.tree = pruned.tree;
    out.orig_of_new = pruned.orig_of_new;
    for (int l = 1; l <= pruned.tree.height; ++l) out.inst.budgets.push_back(src.budgets[l - 1]);
    out.inst.validate();
    return out;
}

// Top instance: the level window (h, L] with the prefix B_{<=h+1} absorbed
// into its first budget; feasibility statements about it are exactly
// original-instance prefix statements for sets avoiding V_{<=h}.
struct TopInstance {
    LevelWindow window;
    std::vector<int> targets;  // window ids
    bool infeasible_leaf = false;
};

inline TopInstance build_top(const SrmfcInstance& src, int h, const VertexSet& top_leaves) {
    TopInstance out;
    if (top_leaves.empty()) return out;
    for (int leaf : top_leaves)
        if (src.tree.level[leaf] <= h) {
            out.infeasible_leaf = true;  // cannot be protected above h
            return out;
        }
    out.window = make_window(src, h, src.tree.height, true);
    for (int leaf : top_leaves) out.targets.push_back(out.window.new_of_orig[leaf]);
    return out;
}

struct SolveLimits {
    ExploreLimits explore;
    long dp_entries = 2000000;
    long max_candidates = 512;
};

struct SrmfcSolution {
    VertexSet protect;      // on the input instance
    Rat alpha = Rat(0);     // measured stretch, exact
    bool found = false;
    bool truncated = false;
    bool eps_out_of_range = false;
    Rat candidate = Rat(0);  // the stretch guess that produced the solution
    long explore_nodes = 0;

    // true when the worst-case ratio argument applies: the search ran to
    // completion within the proven accuracy range
    bool guaranteed() const { return found && !truncated && !eps_out_of_range; }
};

namespace detail {

// solves one emitted partition on a compressed instance; returns the
// protecting set in compressed coordinates
inline std::optional<VertexSet> solve_partition(const SrmfcInstance& comp,
                                                const ExploreThresholds& th,
                                                const PartitionCandidate& pc,
                                                const SolveLimits& limits) {
    VertexSet result;
    if (!pc.bot.empty()) {
        auto bottom = build_bottom(comp, th.h_hat, pc.bot);
        if (!bottom) return std::nullopt;
        std::optional<VertexSet> r_bot;
        try {
            r_bot = dp_exact(bottom->inst, DpLimits{limits.dp_entries});
            if (!r_bot) {
                // the guaranteed bound for emitted partitions is (1+2eps)
                SrmfcInstance relaxed = bottom->inst;
                for (auto& b : relaxed.budgets) b *= Rat(1) + Rat(2) * th.eps;
                r_bot = dp_exact(relaxed, DpLimits{limits.dp_entries});
            }
        } catch (const ResourceCap&) {
            return std::nullopt;
        }
        if (!r_bot) return std::nullopt;
        for (int v : *r_bot) result.insert(bottom->orig_of_new[v]);
    }
    if (!pc.top.empty()) {
        auto top = build_top(comp, th.h_hat, pc.top);
        if (top.infeasible_leaf) return std::nullopt;
        TreePolytope p;
        p.inst = top.window.inst;
        p.alpha = Rat(1) + Rat(7) * th.eps;
        p.targets = top.targets;
        auto x = solve_vertex(p);
        if (!x) return std::nullopt;
        for (int v : round_loose(*x, p)) result.insert(top.window.orig_of_new[v]);
    }
    return result;
}

}  // namespace detail

// PTAS-style solver: guesses the stretch, compresses, explores partitions,
// solves bottom by DP and top by LP rounding, lifts back, and returns the
// first (hence lowest-guess) solution found. The reported alpha is the
// measured stretch of the returned set, not the guarantee.
inline SrmfcSolution solve_srmfc(const SrmfcInstance& inst, const Rat& eps,
                                 const SolveLimits& limits = {}) {
    inst.validate();
    SrmfcSolution best;
    best.eps_out_of_range = eps > Rat(1, 7);
    if (inst.tree.leaves.empty()) {
        best.found = true;
        return best;
    }
    std::vector<int> leaves(inst.tree.leaves.begin(), inst.tree.leaves.end());
    auto lp = solve_min_alpha(inst, leaves);
    if (!lp) return best;  // no fractional solution at any stretch: malformed budgets
    const Rat alpha_lp = lp->first;

    long tried = 0;
    for (const Rat& cand : alpha_candidates(inst)) {
        if (cand * (Rat(1) + eps) < alpha_lp) continue;  // compressed LP provably empty
        if (++tried > limits.max_candidates) {
            best.truncated = true;
            break;
        }
        auto rc = compress_candidate(inst, cand, eps);
        if (!rc) continue;
        auto th = thresholds(eps, rc->comp.inst);
        auto ex = explore(rc->comp.inst, th, ExploreVariant::efficient, limits.explore);
        best.truncated = best.truncated || ex.truncated;
        best.explore_nodes += ex.nodes;
        std::optional<std::pair<Rat, VertexSet>> cand_best;
        for (const auto& pc : ex.partitions) {
            auto r_comp = detail::solve_partition(rc->comp.inst, th, pc, limits);
            if (!r_comp) continue;
            auto lifted = rc->comp.lift(*r_comp);
            auto st = stretch_of(inst, lifted);
            if (!st.protecting || st.infinite) continue;
            if (!cand_best || st.value < cand_best->first) cand_best = {st.value, lifted};
        }
        if (cand_best) {
            best.found = true;
            best.protect = cand_best->second;
            best.alpha = cand_best->first;
            best.candidate = cand;
            return best;
        }
    }
    return best;
}

enum class RmfcMode { two_approx, budget_4eps, three_approx };

struct RmfcSolution {
    VertexSet protect;
    long budget = 0;      // measured per-level budget of the returned set
    bool found = false;
    bool certified = false;  // measured budget met the mode's bound at the guessed optimum
    bool truncated = false;
    long guessed_b = 0;
};

namespace detail {

// basic/mixing route on a compressed 1-feasible guess: bottom by DP, top by
// a layered rounding that avoids the lowest levels. Exploration escalates in
// batches and the partition loop ends as soon as the target stretch is
// certified; truncation is only flagged when the target was never reached
// and a user limit cut the search.
inline std::optional<VertexSet> solve_routes(const SrmfcInstance& comp, const ExploreThresholds& th,
                                             const Rat& eps, bool mixing_route, const Rat& target,
                                             const SolveLimits& limits, bool& truncated) {
    auto solve_one = [&](const PartitionCandidate& pc) -> std::optional<VertexSet> {
        VertexSet result;
        if (!pc.bot.empty()) {
            auto bottom = build_bottom(comp, th.h_check, pc.bot);
            if (!bottom) return std::nullopt;
            std::optional<VertexSet> r_bot;
            try {
                r_bot = dp_exact(bottom->inst, DpLimits{limits.dp_entries});
            } catch (const ResourceCap&) {
                return std::nullopt;
            }
            if (!r_bot) return std::nullopt;
            for (int v : *r_bot) result.insert(bottom->orig_of_new[v]);
        }
        if (!pc.top.empty()) {
            auto top = build_top(comp, th.h_check, pc.top);
            if (top.infeasible_leaf) return std::nullopt;
            TreePolytope p;
            p.inst = top.window.inst;
            p.alpha = mixing_route ? Rat((Rat(1) + Rat(2) * eps) * (Rat(1) + Rat(3) * eps))
                                   : Rat(Rat(2) + Rat(3) * eps);
            p.targets = top.targets;
            auto x = solve_vertex(p);
            if (!x) return std::nullopt;
            // back to compressed coordinates, then the slice rounding
            FractionalSolution y;
            for (auto& [v, q] : x->values) y.set(top.window.orig_of_new[v], q);
            try {
                for (int v : round_layered(y, 2, eps, comp)) result.insert(v);
            } catch (const PreconditionViolated&) {
                return std::nullopt;
            }
        }
        return result;
    };

    std::optional<std::pair<Rat, VertexSet>> best;
    for (long cap : {std::min(300l, limits.explore.max_nodes), limits.explore.max_nodes}) {
        ExploreLimits el = limits.explore;
        el.h_override = th.h_check;
        el.max_nodes = cap;
        auto ex = explore(comp, th, mixing_route ? ExploreVariant::mixing : ExploreVariant::basic, el);
        // large bottoms first: the all-bottom partition is solved exactly
        std::vector<const PartitionCandidate*> order;
        for (auto& pc : ex.partitions) order.push_back(&pc);
        std::sort(order.begin(), order.end(), [](auto* a, auto* b) {
            return a->bot.size() != b->bot.size() ? a->bot.size() > b->bot.size() : *a < *b;
        });
        for (auto* pc : order) {
            auto r = solve_one(*pc);
            if (!r) continue;
            auto st = stretch_of(comp, *r);
            if (!st.protecting || st.infinite) continue;
            if (!best || st.value < best->first) best = {st.value, *r};
            if (st.value <= target) return best->second;
        }
        if (!ex.truncated) break;  // natural exhaustion: nothing more to find
        if (cap == limits.explore.max_nodes) truncated = true;
    }
    if (!best) return std::nullopt;
    return best->second;
}

}  // namespace detail

// Classical RMFC: guesses the optimal budget in ascending order and runs the
// selected pipeline on the uniform smooth instance; stops at the first guess
// whose measured per-level budget certifies the mode's bound.
inline RmfcSolution solve_rmfc(const RootedTree& tree, RmfcMode mode, const Rat& eps_in,
                               const SolveLimits& limits = {}) {
    RmfcSolution out;
    if (tree.leaves.empty()) {
        out.found = true;
        out.certified = true;
        return out;
    }
    Rat eps = eps_in;
    if (mode == RmfcMode::two_approx) eps = rat_min(eps, Rat(1, 17));
    if (mode == RmfcMode::three_approx) eps = rat_min(eps, Rat(1, 13));

    std::vector<int> leaves(tree.leaves.begin(), tree.leaves.end());
    long b_lo = 1;
    {
        auto lp = solve_min_alpha(uniform_instance(tree, 1), leaves);
        if (lp) b_lo = std::max(1l, to_long(rat_ceil(lp->first)));
    }
    std::optional<std::pair<long, VertexSet>> fallback;
    for (long b = b_lo; b <= tree.n; ++b) {
        auto inst = uniform_instance(tree, Rat(b));
        std::optional<VertexSet> r;
        if (mode == RmfcMode::two_approx) {
            auto res = solve_srmfc(inst, eps, limits);
            out.truncated = out.truncated || res.truncated;
            if (res.found) r = res.protect;
        } else {
            auto rc = compress_candidate(inst, 1, eps);
            if (rc) {
                auto th = thresholds(eps, rc->comp.inst);
                // certifying targets before the lift's (1+eps) factor
                Rat target = mode == RmfcMode::three_approx ? Rat(Rat(3) / (Rat(1) + eps))
                                                            : Rat((Rat(4) + eps) / (Rat(1) + eps));
                auto rr = detail::solve_routes(rc->comp.inst, th, eps,
                                               mode == RmfcMode::three_approx, target, limits,
                                               out.truncated);
                if (rr) r = rc->comp.lift(*rr);
            }
        }
        if (!r || !check_protection(tree, *r)) continue;
        auto st = stretch_of(inst, *r);
        if (st.infinite) continue;
        auto levelized = levelize_solution(inst, *r, st.value);
        long used = 0;
        {
            std::vector<long> cnt(tree.height + 1, 0);
            for (int v : levelized) cnt[tree.level[v]]++;
            for (int l = 1; l <= tree.height; ++l) used = std::max(used, cnt[l]);
        }
        Rat bound = mode == RmfcMode::two_approx ? Rat(2 * b)
                    : mode == RmfcMode::three_approx
                        ? Rat(3 * b)
                        : Rat(rat_ceil((Rat(4) + eps) * Rat(b)));
        if (Rat(used) <= bound) {
            out.found = true;
            // a truncated run may have skipped a smaller workable guess, in
            // which case the ratio against the optimum is not established
            out.certified = !out.truncated;
            out.protect = levelized;
            out.budget = used;
            out.guessed_b = b;
            return out;
        }
        if (!fallback || used < fallback->first) fallback = {used, levelized};
    }
    if (fallback) {
        out.found = true;
        out.protect = fallback->second;
        out.budget = fallback->first;
    }
    return out;
}

}  // namespace rmfc
