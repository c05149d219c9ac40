#pragma once

#include <vector>

#include "rmfc/explore.hpp"
#include "rmfc/tree.hpp"

namespace rmfc {

// Test-side analysis objects: both sets below depend on a known optimal
// solution and exist to validate the exploration claims, not to compute
// anything the solvers use.
struct AnalysisContext {
    SrmfcInstance inst;
    VertexSet opt;  // 1-feasible protecting antichain (ties: lexicographically least)
    ExploreThresholds th;

    void validate() const {
        inst.validate();
        if (!check_protection(inst.tree, opt)) throw PreconditionViolated("opt not protecting");
        auto st = stretch_of(inst, opt);
        if (st.infinite || st.value > 1) throw PreconditionViolated("opt not 1-feasible");
        if (normalize_antichain(inst.tree, opt) != opt)
            throw PreconditionViolated("opt not an antichain");
    }
};

// strict ancestors of optimum vertices on the bottom h levels
inline VertexSet core_vertices(const AnalysisContext& ctx, int h) {
    const RootedTree& t = ctx.inst.tree;
    VertexSet core;
    for (int v : ctx.opt) {
        if (t.level[v] > h) continue;
        for (int u : t.path_of(v))
            if (u != v) core.insert(u);
    }
    if (Rat(static_cast<long>(core.size())) > Rat(h) * ctx.inst.budget_prefix(h))
        throw std::logic_error("core size exceeds h * B_{<=h}");
    return core;
}

// The pruned core: keeps, above h_check, only core vertices whose
// kappa-truncated subtree reaches an optimum vertex in V_{<=h_hat} or a
// branching vertex of the induced core forest; below h_check it keeps the
// whole depth-h_check core.
inline VertexSet thinned_core(const AnalysisContext& ctx) {
    const RootedTree& t = ctx.inst.tree;
    const auto& th = ctx.th;
    VertexSet core = core_vertices(ctx, th.h_hat);
    VertexSet branchy;
    for (int u : core) {
        int deg = 0;
        if (u != 0 && t.parent[u] != 0 && core.count(t.parent[u])) ++deg;
        for (int c : t.children[u])
            if (core.count(c)) ++deg;
        if (deg >= 3) branchy.insert(u);
    }
    VertexSet opt_low;
    for (int v : ctx.opt)
        if (t.level[v] <= th.h_hat) opt_low.insert(v);

    VertexSet thin = core_vertices(ctx, th.h_check);
    for (int v = 1; v < t.n; ++v) {
        if (t.level[v] <= th.h_check) continue;
        bool hit = false;
        for (int u : t.subtree_within(v, th.kappa)) {
            if (opt_low.count(u) || branchy.count(u)) {
                hit = true;
                break;
            }
        }
        if (hit) thin.insert(v);
    }
    for (int v : ctx.opt) thin.erase(v);

    for (int v : thin)
        if (!core.count(v)) throw std::logic_error("thinned core escapes the core");
    long below = 0, above = 0;
    for (int v : thin)
        (t.level[v] <= th.h_check ? below : above)++;
    if (below != static_cast<long>(core_vertices(ctx, th.h_check).size()))
        throw std::logic_error("thinned core below h_check must equal the depth-h_check core");
    if (Rat(above) > Rat(2) * Rat(th.kappa) * ctx.inst.budget_prefix(th.h_hat))
        throw std::logic_error("thinned core above h_check exceeds 2*kappa*B_{<=h_hat}");
    return thin;
}

}  // namespace rmfc
