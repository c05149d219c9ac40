#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "rmfc/tree.hpp"

namespace rmfc {

// Per-level fireproofing counts c_l..c_L for a subtree rooted on level l.
// Feasible vectors respect the integral per-level caps
//   cap_i = floor(B_{<=i}) - floor(B_{<=i-1}),
// whose prefix sums equal floor(B_{<=i}); any set meeting the smooth prefix
// bounds can be shifted onto ancestors to meet these caps, so searching over
// cap-feasible vectors is exact for 1-feasibility.
using BudgetVec = std::vector<long>;

namespace detail {

inline bool dominates_le(const BudgetVec& a, const BudgetVec& b) {
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] > b[i]) return false;
    return true;
}

// keep only componentwise-minimal vectors; smaller usage is never worse
template <typename Entry>
inline void pareto_prune(std::vector<Entry>& list) {
    std::sort(list.begin(), list.end(),
              [](const Entry& x, const Entry& y) { return x.vec < y.vec; });
    std::vector<Entry> kept;
    for (auto& e : list) {
        bool dom = false;
        for (auto& k : kept)
            if (dominates_le(k.vec, e.vec)) {
                dom = true;
                break;
            }
        if (!dom) kept.push_back(std::move(e));
    }
    list = std::move(kept);
}

}  // namespace detail

struct DpLimits {
    long max_entries = 2000000;  // total stored budget vectors before ResourceCap
};

// Exact solver: returns a protecting set with |R cap V_{<=l}| <= floor(B_{<=l})
// for every l, or nullopt when none exists.
inline std::optional<VertexSet> dp_exact(const SrmfcInstance& inst, const DpLimits& limits = {}) {
    inst.validate();
    const RootedTree& t = inst.tree;
    const int L = t.height;
    if (t.n == 1) return VertexSet{};  // no leaves to protect

    std::vector<long> cap(L + 1, 0);
    {
        Int prev = 0;
        for (int l = 1; l <= L; ++l) {
            Int cur = rat_floor(inst.budget_prefix(l));
            Int d = cur - prev;
            prev = cur;
            // nothing gains from more than n units on one level
            cap[l] = d > t.n ? t.n : to_long(d);
        }
    }

    struct Entry {
        BudgetVec vec;       // counts for levels lv..L of this vertex
        int self = 0;        // 1: protect the vertex itself
        int prev = -1;       // index into previous merge step
        int child_choice = -1;
    };
    // lists[v]: final entries; steps[v][i]: entries after merging child i
    std::vector<std::vector<Entry>> lists(t.n);
    std::vector<std::vector<std::vector<Entry>>> steps(t.n);
    long stored = 0;

    for (int v = t.n - 1; v >= 0; --v) {
        const int lv = t.level[v];
        const size_t len = static_cast<size_t>(L - lv + 1);
        std::vector<Entry> cur;
        cur.push_back(Entry{BudgetVec(len, 0), 0, -1, -1});
        bool dead = false;
        steps[v].reserve(t.children[v].size());
        for (size_t ci = 0; ci < t.children[v].size() && !dead; ++ci) {
            int u = t.children[v][ci];
            std::vector<Entry> next;
            for (size_t ai = 0; ai < cur.size(); ++ai) {
                for (size_t bi = 0; bi < lists[u].size(); ++bi) {
                    BudgetVec sum = cur[ai].vec;
                    bool ok = true;
                    for (size_t j = 0; j < lists[u][bi].vec.size(); ++j) {
                        sum[j + 1] += lists[u][bi].vec[j];
                        if (sum[j + 1] > cap[lv + 1 + static_cast<int>(j)]) {
                            ok = false;
                            break;
                        }
                    }
                    if (ok)
                        next.push_back(Entry{std::move(sum), 0, static_cast<int>(ai), static_cast<int>(bi)});
                }
            }
            detail::pareto_prune(next);
            stored += static_cast<long>(next.size());
            if (stored > limits.max_entries) throw ResourceCap("dp_exact table too large");
            if (next.empty()) dead = true;
            steps[v].push_back(cur);
            cur = std::move(next);
        }
        if (dead) cur.clear();
        if (t.is_leaf(v)) cur.clear();  // a bare leaf is only saved by fireproofing it
        if (v != 0) {
            std::vector<Entry> fin = std::move(cur);
            if (cap[lv] > 0) {
                BudgetVec self(len, 0);
                self[0] = 1;
                fin.push_back(Entry{std::move(self), 1, -1, -1});
            }
            detail::pareto_prune(fin);
            lists[v] = std::move(fin);
        } else {
            lists[v] = std::move(cur);
        }
        // an empty list marks an unprotectable subtree; ancestors may still
        // cover it by fireproofing themselves
    }
    if (lists[0].empty()) return std::nullopt;

    // backtrack one witness
    VertexSet r;
    struct Frame {
        int v;
        int entry;
    };
    std::vector<Frame> stack{{0, 0}};
    while (!stack.empty()) {
        auto [v, ei] = stack.back();
        stack.pop_back();
        const Entry& e = lists[v][ei];
        if (e.self) {
            r.insert(v);
            continue;
        }
        // unwind the merge chain
        int idx = ei;
        for (int ci = static_cast<int>(t.children[v].size()) - 1; ci >= 0; --ci) {
            const Entry& me = ci + 1 == static_cast<int>(t.children[v].size())
                                  ? lists[v][idx]
                                  : steps[v][ci + 1][idx];
            stack.push_back({t.children[v][ci], me.child_choice});
            idx = me.prev;
        }
    }
    return r;
}

struct ExhaustiveResult {
    bool finite = false;
    Rat alpha = Rat(0);
    VertexSet witness;
};

// Independent brute-force oracle: enumerates every protecting antichain and
// minimizes the stretch. Guarded to small instances.
inline ExhaustiveResult exhaustive_exact(const SrmfcInstance& inst, int guard = 18) {
    inst.validate();
    const RootedTree& t = inst.tree;
    ExhaustiveResult best;
    if (t.leaves.empty()) {
        best.finite = true;
        return best;
    }
    const int m = t.n - 1;
    if (m > guard) throw ResourceCap("exhaustive_exact: too many vertices");
    for (unsigned long mask = 1; mask < (1ul << m); ++mask) {
        VertexSet r;
        bool antichain = true;
        for (int v = 1; v <= m && antichain; ++v) {
            if (!(mask >> (v - 1) & 1)) continue;
            for (int u = t.parent[v]; u > 0; u = t.parent[u])
                if (mask >> (u - 1) & 1) {
                    antichain = false;
                    break;
                }
            r.insert(v);
        }
        if (!antichain) continue;
        auto st = stretch_of(inst, r);
        if (!st.protecting || st.infinite) continue;
        if (!best.finite || st.value < best.alpha ||
            (st.value == best.alpha && r < best.witness)) {
            best.finite = true;
            best.alpha = st.value;
            best.witness = r;
        }
    }
    return best;
}

// 1-feasibility via the oracle (exhaustive path), for cross-checking dp_exact.
inline bool exhaustive_one_feasible(const SrmfcInstance& inst, int guard = 18) {
    auto r = exhaustive_exact(inst, guard);
    return r.finite && r.alpha <= 1;
}

// Brute-force optimal classical budget: the smallest uniform per-level count
// admitting a protecting set. Guarded like exhaustive_exact.
inline long exhaustive_min_budget(const RootedTree& t, int guard = 18) {
    if (t.leaves.empty()) return 0;
    const int m = t.n - 1;
    if (m > guard) throw ResourceCap("exhaustive_min_budget: too many vertices");
    long best = t.n;  // protecting every leaf individually always works
    for (unsigned long mask = 1; mask < (1ul << m); ++mask) {
        VertexSet r;
        for (int v = 1; v <= m; ++v)
            if (mask >> (v - 1) & 1) r.insert(v);
        if (!check_protection(t, r)) continue;
        std::vector<long> cnt(t.height + 1, 0);
        long width = 0;
        for (int v : r) width = std::max(width, ++cnt[t.level[v]]);
        best = std::min(best, width);
    }
    return best;
}

}  // namespace rmfc
