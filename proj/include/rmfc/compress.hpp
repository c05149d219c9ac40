#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <vector>

#include "rmfc/tree.hpp"

namespace rmfc {

// One instance transformation, recorded as the map from new vertex ids to
// the ids of the instance it was produced from. Replaying the log backwards
// lifts solutions; budget-only operations (down-pushes, padding) do not
// appear since they move no vertices.
struct TransformStep {
    std::vector<int> old_of_new;
};

struct TransformedInstance {
    SrmfcInstance inst;
    TransformStep step;
};

inline SrmfcInstance down_push(const SrmfcInstance& in, int level) {
    in.validate();
    if (level < 2 || level > in.tree.height)
        throw LevelOutOfRange("down_push at level " + std::to_string(level));
    SrmfcInstance out = in;
    out.budgets[level - 2] += out.budgets[level - 1];
    out.budgets[level - 1] = 0;
    return out;
}

namespace detail {

// Rebuilds a tree from a survivor mask and a parent override (already
// expressed over old ids); returns the dense renumbering.
inline TransformedInstance rebuild(const SrmfcInstance& in, const std::vector<char>& keep,
                                   const std::vector<int>& parent_of_old,
                                   const std::vector<int>& level_of_old,
                                   std::vector<Rat> budgets) {
    const RootedTree& t = in.tree;
    TransformedInstance out;
    RootedTree& nt = out.inst.tree;
    std::vector<int> new_of_old(t.n, -1);
    // BFS over survivors keeps parents before children
    std::vector<int> queue{0};
    std::vector<std::vector<int>> kids(t.n);
    for (int v = 0; v < t.n; ++v)
        if (keep[v] && v != 0) kids[parent_of_old[v]].push_back(v);
    size_t head = 0;
    while (head < queue.size()) {
        int ov = queue[head++];
        int nv = static_cast<int>(out.step.old_of_new.size());
        new_of_old[ov] = nv;
        out.step.old_of_new.push_back(ov);
        nt.parent.push_back(ov == 0 ? -1 : new_of_old[parent_of_old[ov]]);
        nt.level.push_back(level_of_old[ov]);
        nt.label.push_back(t.label[ov]);
        nt.children.push_back({});
        if (ov != 0) nt.children[nt.parent[nv]].push_back(nv);
        std::sort(kids[ov].begin(), kids[ov].end());
        for (int c : kids[ov]) queue.push_back(c);
    }
    nt.n = static_cast<int>(out.step.old_of_new.size());
    nt.height = 0;
    for (int v = 0; v < nt.n; ++v) nt.height = std::max(nt.height, nt.level[v]);
    for (int v = 1; v < nt.n; ++v)
        if (nt.children[v].empty()) nt.leaves.push_back(v);
    budgets.resize(static_cast<size_t>(nt.height));
    out.inst.budgets = std::move(budgets);
    out.inst.validate();
    return out;
}

}  // namespace detail

// Removes a zero-budget level: every level struck vertex is bypassed; a
// level struck leaf turns its parent into a leaf and deletes the parent's
// whole subtree (anything protecting that leaf also protects the siblings).
inline TransformedInstance contract_zero_level(const SrmfcInstance& in, int level) {
    in.validate();
    if (level < 1 || level > in.tree.height)
        throw LevelOutOfRange("contract at level " + std::to_string(level));
    if (in.budgets[level - 1] != 0)
        throw NonzeroBudget("contract at level " + std::to_string(level));
    const RootedTree& t = in.tree;

    std::vector<char> keep(t.n, 1);
    // leaves on the struck level force their parent to become a leaf
    std::vector<int> forced;
    for (int v = 1; v < t.n; ++v)
        if (t.level[v] == level && t.is_leaf(v)) {
            int u = t.parent[v];
            if (u == 0)
                throw PreconditionViolated(
                    "contraction would make the root a leaf (unprotectable target)");
            forced.push_back(u);
        }
    for (int u : forced)
        for (int w : t.subtree_of(u))
            if (w != u) keep[w] = 0;
    for (int v = 1; v < t.n; ++v)
        if (t.level[v] == level) keep[v] = 0;

    std::vector<int> parent_of_old(t.n, -1), level_of_old(t.n, 0);
    for (int v = 1; v < t.n; ++v) {
        int p = t.parent[v];
        parent_of_old[v] = (t.level[p] == level) ? t.parent[p] : p;
        level_of_old[v] = t.level[v] > level ? t.level[v] - 1 : t.level[v];
    }
    std::vector<Rat> budgets;
    for (int l = 1; l <= t.height; ++l)
        if (l != level) budgets.push_back(in.budgets[l - 1]);
    return detail::rebuild(in, keep, parent_of_old, level_of_old, std::move(budgets));
}

// Splits every vertex on the given level into a parent-side/children-side
// pair connected by an edge; the level budget is divided as (b_keep,
// B_l - b_keep) across the old and the freshly inserted level.
inline TransformedInstance split_level(const SrmfcInstance& in, int level, const Rat& b_keep) {
    in.validate();
    if (level < 1 || level > in.tree.height)
        throw LevelOutOfRange("split at level " + std::to_string(level));
    if (b_keep < 0 || b_keep > in.budgets[level - 1])
        throw BudgetOutOfRange("split value outside [0, B_l]");
    const RootedTree& t = in.tree;

    TransformedInstance out;
    RootedTree& nt = out.inst.tree;
    std::vector<int> lower_of_old(t.n, -1);  // parent-side copy id
    std::vector<int> queue{0};
    auto emit = [&](int old_id, int parent_new, int lvl) {
        int nv = static_cast<int>(out.step.old_of_new.size());
        out.step.old_of_new.push_back(old_id);
        nt.parent.push_back(parent_new);
        nt.level.push_back(lvl);
        nt.label.push_back(t.label[old_id]);
        nt.children.push_back({});
        if (parent_new >= 0) nt.children[parent_new].push_back(nv);
        return nv;
    };
    std::vector<int> upper_of_old(t.n, -1);  // id carrying the children
    size_t head = 0;
    emit(0, -1, 0);
    upper_of_old[0] = 0;
    while (head < queue.size()) {
        int ov = queue[head++];
        for (int c : t.children[ov]) {
            int lvl = t.level[c] > level ? t.level[c] + 1 : t.level[c];
            int nv = emit(c, upper_of_old[ov], lvl);
            lower_of_old[c] = nv;
            if (t.level[c] == level) {
                upper_of_old[c] = emit(c, nv, lvl + 1);
            } else {
                upper_of_old[c] = nv;
            }
            queue.push_back(c);
        }
    }
    nt.n = static_cast<int>(out.step.old_of_new.size());
    nt.height = 0;
    for (int v = 0; v < nt.n; ++v) nt.height = std::max(nt.height, nt.level[v]);
    for (int v = 1; v < nt.n; ++v)
        if (nt.children[v].empty()) nt.leaves.push_back(v);

    for (int l = 1; l <= t.height; ++l) {
        if (l == level) {
            out.inst.budgets.push_back(b_keep);
            out.inst.budgets.push_back(in.budgets[l - 1] - b_keep);
        } else {
            out.inst.budgets.push_back(in.budgets[l - 1]);
        }
    }
    out.inst.validate();
    return out;
}

// epsilon-compressed instance plus the replayable log that lifts solutions
// back; any alpha-feasible solution of `inst` lifts to a (1+eps)*alpha
// feasible solution of the instance compress() was called on.
struct CompressedInstance {
    SrmfcInstance inst;
    Rat eps;
    std::vector<TransformStep> log;

    VertexSet lift(const VertexSet& r) const {
        VertexSet cur = r;
        for (auto it = log.rbegin(); it != log.rend(); ++it) {
            VertexSet prev;
            for (int v : cur) prev.insert(it->old_of_new[v]);
            cur = std::move(prev);
        }
        return cur;
    }
};

inline CompressedInstance compress(const SrmfcInstance& in, const Rat& eps) {
    in.validate();
    if (eps <= 0) throw ParameterOutOfRange("compress: eps > 0");
    if (in.budgets.empty() || in.budgets[0] < 1)
        throw PreconditionViolated("compress: B_1 >= 1 required");
    const Rat base = Rat(1) + eps;
    Rat total(0);
    for (auto& b : in.budgets) total += b;
    const long lp = ceil_log(base, total) + 1;

    CompressedInstance out;
    out.eps = eps;
    SrmfcInstance work = in;
    work.budgets.back() += rat_pow(base, lp - 1) - total;

    // one split per missing block boundary, top down
    for (long l = lp - 1; l >= 1; --l) {
        Rat target = rat_pow(base, l - 1);
        Rat pref(0);
        int k = 0;
        Rat before(0);
        for (int j = 1; j <= work.tree.height; ++j) {
            before = pref;
            pref += work.budgets[j - 1];
            if (pref >= target) {
                k = j;
                break;
            }
        }
        if (pref < target) throw std::logic_error("compress: prefix never reaches target");
        if (pref == target) continue;
        auto ti = split_level(work, k, target - before);
        work = std::move(ti.inst);
        out.log.push_back(std::move(ti.step));
    }

    // block boundaries now sit at exact powers; push block mass to the start
    std::vector<int> boundary;  // boundary[l-1] = level where prefix == (1+eps)^{l-1}
    {
        Rat pref(0);
        long next = 1;
        for (int j = 1; j <= work.tree.height && next <= lp; ++j) {
            pref += work.budgets[j - 1];
            if (pref == rat_pow(base, next - 1)) {
                boundary.push_back(j);
                ++next;
            }
        }
        if (static_cast<long>(boundary.size()) != lp)
            throw std::logic_error("compress: missing block boundary");
    }
    for (long l = lp; l >= 1; --l) {
        int start = (l == 1 ? 0 : boundary[l - 2]) + 1;
        for (int j = boundary[l - 1]; j >= start + 1; --j) work = down_push(work, j);
    }

    // contract all zero-budget levels, highest first
    for (int l = work.tree.height; l >= 1; --l) {
        if (l > work.tree.height) continue;  // tree may have shrunk
        if (work.budgets[l - 1] != 0) continue;
        auto ti = contract_zero_level(work, l);
        work = std::move(ti.inst);
        out.log.push_back(std::move(ti.step));
    }

    for (int l = 1; l <= work.tree.height; ++l)
        if (work.budget_prefix(l) != rat_pow(base, l - 1))
            throw std::logic_error("compress: prefix budgets not geometric");
    out.inst = std::move(work);
    return out;
}

// All stretch values m / B_{<=l} for m in [n]; contains the optimal stretch.
inline std::vector<Rat> alpha_candidates(const SrmfcInstance& in) {
    in.validate();
    std::set<Rat> cand;
    for (int l = 1; l <= in.tree.height; ++l) {
        Rat pref = in.budget_prefix(l);
        if (pref == 0) continue;
        for (int m = 1; m <= in.tree.n; ++m) cand.insert(Rat(m) / pref);
    }
    return {cand.begin(), cand.end()};
}

struct ReduceCandidate {
    Rat alpha;
    CompressedInstance comp;  // log already includes the pre-compression contractions
};

// Rescales by one candidate stretch, forces a usable first level, then
// compresses. A stretch-alpha solution of the input is exactly a stretch-1
// solution for budgets alpha*B, so the guess whose alpha is the optimal
// stretch yields a 1-feasible instance. nullopt when the candidate is
// infeasible outright (a level-1 target with too little budget below it).
inline std::optional<ReduceCandidate> compress_candidate(const SrmfcInstance& in, const Rat& alpha,
                                                         const Rat& eps) {
    if (alpha <= 0) throw ParameterOutOfRange("candidate stretch must be positive");
    SrmfcInstance work = in;
    for (auto& b : work.budgets) b *= alpha;
    std::vector<TransformStep> pre;
    try {
        while (!work.budgets.empty() && work.budgets[0] < 1) {
            if (work.tree.height < 2) return std::nullopt;  // budget below one unit in total
            // move the first-level budget up, then strike the empty level
            work.budgets[1] += work.budgets[0];
            work.budgets[0] = 0;
            auto ti = contract_zero_level(work, 1);
            work = std::move(ti.inst);
            pre.push_back(std::move(ti.step));
        }
        if (work.budgets.empty()) return std::nullopt;
        ReduceCandidate rc{alpha, compress(work, eps)};
        rc.comp.log.insert(rc.comp.log.begin(), std::make_move_iterator(pre.begin()),
                           std::make_move_iterator(pre.end()));
        return rc;
    } catch (const PreconditionViolated&) {
        return std::nullopt;
    }
}

inline std::vector<ReduceCandidate> reduce_to_compressed(const SrmfcInstance& in, const Rat& eps) {
    std::vector<ReduceCandidate> out;
    for (const Rat& a : alpha_candidates(in)) {
        auto rc = compress_candidate(in, a, eps);
        if (rc) out.push_back(std::move(*rc));
    }
    return out;
}

}  // namespace rmfc
