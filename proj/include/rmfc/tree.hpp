#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "rmfc/error.hpp"
#include "rmfc/rational.hpp"

namespace rmfc {

using VertexSet = std::set<int>;

// Rooted tree with dense vertex ids 0..n-1, root fixed at id 0.
// Levels count edge distance from the root; the root sits on level 0 and the
// tree "grows upward": level L vertices are the farthest from the root.
struct RootedTree {
    int n = 0;
    std::vector<int> parent;                 // parent[0] == -1
    std::vector<std::vector<int>> children;  // sorted by id
    std::vector<int> level;                  // level[0] == 0
    int height = 0;                          // L = max level
    std::vector<int> leaves;                 // non-root vertices without children, sorted
    std::vector<long long> label;            // external labels, label[v] for I/O round-trips

    bool is_leaf(int v) const { return v != 0 && children[v].empty(); }

    // Path P_v from the root to v, excluding the root, including v.
    std::vector<int> path_of(int v) const {
        std::vector<int> p;
        for (int u = v; u != 0; u = parent[u]) p.push_back(u);
        std::reverse(p.begin(), p.end());
        return p;
    }

    // true iff u is an ancestor of v or u == v
    bool is_ancestor_or_self(int u, int v) const {
        while (true) {
            if (u == v) return true;
            if (v == 0) return false;
            v = parent[v];
        }
    }

    // Subtree T_v (v included), ids in preorder.
    std::vector<int> subtree_of(int v) const {
        std::vector<int> out, stack{v};
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            out.push_back(u);
            for (int c : children[u]) stack.push_back(c);
        }
        return out;
    }

    // T_{v,kappa}: descendants of v up to kappa levels above v, v included.
    std::vector<int> subtree_within(int v, long kappa) const {
        std::vector<int> out, stack{v};
        int cutoff = level[v] + static_cast<int>(std::min<long>(kappa, height));
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            out.push_back(u);
            for (int c : children[u])
                if (level[c] <= cutoff) stack.push_back(c);
        }
        return out;
    }

    std::vector<int> leaves_under(int v) const {
        std::vector<int> out;
        for (int u : subtree_of(v))
            if (is_leaf(u)) out.push_back(u);
        std::sort(out.begin(), out.end());
        return out;
    }

    std::vector<std::vector<int>> vertices_by_level() const {
        std::vector<std::vector<int>> by(height + 1);
        for (int v = 0; v < n; ++v) by[level[v]].push_back(v);
        return by;
    }
};

// Builds a RootedTree from labelled edges; vertices are renumbered densely in
// BFS order from the root. Rejects cycles, duplicate children and vertices
// unreachable from the root.
inline RootedTree build_tree(const std::vector<std::pair<long long, long long>>& edges, long long root) {
    if (edges.empty()) throw MalformedInput("tree needs at least one edge");
    std::map<long long, std::vector<long long>> adj;
    std::set<long long> verts{root};
    std::set<std::pair<long long, long long>> seen;
    std::set<long long> has_parent;
    for (auto& [p, c] : edges) {
        if (p == c) throw MalformedInput("self-loop at vertex " + std::to_string(p));
        if (seen.count({p, c})) throw MalformedInput("duplicate edge");
        seen.insert({p, c});
        if (has_parent.count(c)) throw MalformedInput("vertex " + std::to_string(c) + " has two parents");
        has_parent.insert(c);
        adj[p].push_back(c);
        verts.insert(p);
        verts.insert(c);
    }
    if (has_parent.count(root)) throw MalformedInput("root has a parent");
    if (verts.size() != edges.size() + 1) throw MalformedInput("edge set is not a tree on its vertices");

    RootedTree t;
    t.n = static_cast<int>(verts.size());
    t.parent.assign(t.n, -1);
    t.children.assign(t.n, {});
    t.level.assign(t.n, 0);
    t.label.assign(t.n, 0);

    std::map<long long, int> id;
    std::vector<long long> queue{root};
    id[root] = 0;
    t.label[0] = root;
    size_t head = 0;
    while (head < queue.size()) {
        long long u = queue[head++];
        int ui = id[u];
        auto it = adj.find(u);
        if (it == adj.end()) continue;
        std::sort(it->second.begin(), it->second.end());
        for (long long c : it->second) {
            if (id.count(c)) throw MalformedInput("cycle through vertex " + std::to_string(c));
            int ci = static_cast<int>(id.size());
            id[c] = ci;
            t.label[ci] = c;
            t.parent[ci] = ui;
            t.level[ci] = t.level[ui] + 1;
            t.children[ui].push_back(ci);
            queue.push_back(c);
        }
    }
    if (static_cast<int>(id.size()) != t.n)
        throw MalformedInput("disconnected vertices present");
    t.height = *std::max_element(t.level.begin(), t.level.end());
    for (int v = 1; v < t.n; ++v)
        if (t.children[v].empty()) t.leaves.push_back(v);
    return t;
}

// Smooth instance: per-level rational budgets B_1..B_L.
struct SrmfcInstance {
    RootedTree tree;
    std::vector<Rat> budgets;

    void validate() const {
        if (static_cast<int>(budgets.size()) != tree.height)
            throw MalformedInput("budget vector length must equal tree height");
        for (auto& b : budgets)
            if (b < 0) throw MalformedInput("negative budget");
    }
    // B_{<=l}, 1-based level l; l == 0 gives 0.
    Rat budget_prefix(int l) const { return prefix_sum(budgets, static_cast<size_t>(l)); }
};

// Classical instance: one uniform integer budget per level.
struct RmfcInstance {
    RootedTree tree;
    long budget = 0;
};

inline SrmfcInstance uniform_instance(const RootedTree& tree, const Rat& b) {
    SrmfcInstance inst{tree, std::vector<Rat>(static_cast<size_t>(tree.height), b)};
    return inst;
}

// true iff every leaf t has P_t (t included) meeting R.
inline bool check_protection(const RootedTree& t, const VertexSet& r) {
    for (int leaf : t.leaves) {
        bool hit = false;
        for (int u = leaf; u != 0; u = t.parent[u])
            if (r.count(u)) {
                hit = true;
                break;
            }
        if (!hit) return false;
    }
    return true;
}

// Canonical antichain form: drop every vertex that has a strict ancestor in R.
inline VertexSet normalize_antichain(const RootedTree& t, const VertexSet& r) {
    VertexSet out;
    for (int v : r) {
        bool dominated = false;
        for (int u = t.parent[v]; u != -1 && u != 0; u = t.parent[u])
            if (r.count(u)) {
                dominated = true;
                break;
            }
        if (!dominated) out.insert(v);
    }
    return out;
}

struct StretchResult {
    bool protecting = false;
    bool infinite = false;
    Rat value = Rat(0);
};

// Smallest alpha with |R cap V_{<=l}| <= alpha * B_{<=l} for all l;
// infinite when a prefix with zero budget holds a vertex of R.
inline StretchResult stretch_of(const SrmfcInstance& inst, const VertexSet& r) {
    StretchResult res;
    res.protecting = check_protection(inst.tree, r);
    std::vector<long> cum(inst.tree.height + 1, 0);
    for (int v : r) cum[inst.tree.level[v]]++;
    long run = 0;
    Rat best(0);
    for (int l = 1; l <= inst.tree.height; ++l) {
        run += cum[l];
        Rat pref = inst.budget_prefix(l);
        if (run > 0 && pref == 0) {
            res.infinite = true;
            return res;
        }
        if (pref > 0) {
            Rat ratio = Rat(run) / pref;
            if (ratio > best) best = ratio;
        }
    }
    res.value = best;
    return res;
}

// Cumulative-to-per-level conversion: R satisfying the cumulative bound
// |R cap V_{<=l}| <= alpha*l*B for uniform budget B becomes a set with at
// most ceil(alpha*B) vertices per level, still protecting the same leaves.
inline VertexSet levelize_solution(const SrmfcInstance& inst, const VertexSet& r_in, const Rat& alpha) {
    inst.validate();
    for (size_t i = 1; i < inst.budgets.size(); ++i)
        if (inst.budgets[i] != inst.budgets[0])
            throw PreconditionViolated("levelize_solution needs uniform budgets");
    if (inst.budgets.empty()) return r_in;
    const Rat b = inst.budgets[0];
    const RootedTree& t = inst.tree;

    {
        std::vector<long> cum(t.height + 1, 0);
        for (int v : r_in) cum[t.level[v]]++;
        long run = 0;
        for (int l = 1; l <= t.height; ++l) {
            run += cum[l];
            if (Rat(run) > alpha * Rat(l) * b)
                throw PreconditionViolated("cumulative budget bound fails at level " + std::to_string(l));
        }
    }

    const Int cap_z = rat_ceil(alpha * b);
    const long cap = to_long(cap_z);
    VertexSet r = r_in;
    std::vector<std::set<int>> per_level(t.height + 1);
    for (int v : r) per_level[t.level[v]].insert(v);

    while (true) {
        int over = -1;
        for (int l = 1; l <= t.height && over < 0; ++l)
            if (static_cast<long>(per_level[l].size()) > cap) over = l;
        if (over < 0) break;
        int under = -1;
        for (int l = 1; l < over && under < 0; ++l)
            if (static_cast<long>(per_level[l].size()) < cap) under = l;
        if (under < 0) throw PreconditionViolated("no slack level below an overfull level");
        int v = *per_level[over].begin();
        int anc = v;
        while (t.level[anc] != under) anc = t.parent[anc];
        per_level[over].erase(v);
        r.erase(v);
        if (!r.count(anc)) {
            r.insert(anc);
            per_level[under].insert(anc);
        }
    }
    return r;
}

struct PrunedTree {
    RootedTree tree;
    std::vector<int> orig_of_new;  // new id -> id in the source tree
};

// Reduction to protect-all-leaves form: keep only minimal elements of S and
// the vertices on root-to-S paths; the minimal S-vertices become the leaves.
inline PrunedTree normalize_targets(const RootedTree& t, const VertexSet& s) {
    if (s.empty()) throw EmptyTargets();
    for (int v : s)
        if (v <= 0 || v >= t.n) throw MalformedInput("target out of range");
    VertexSet minimal = s;
    for (int v : s) {
        for (int u = t.parent[v]; u != -1 && u != 0; u = t.parent[u])
            if (s.count(u)) {
                minimal.erase(v);
                break;
            }
    }
    std::vector<char> keep(t.n, 0);
    keep[0] = 1;
    for (int v : minimal)
        for (int u = v; u != 0; u = t.parent[u]) keep[u] = 1;

    PrunedTree out;
    std::vector<int> new_of_orig(t.n, -1);
    for (int v = 0; v < t.n; ++v)
        if (keep[v]) {
            new_of_orig[v] = static_cast<int>(out.orig_of_new.size());
            out.orig_of_new.push_back(v);
        }
    RootedTree& nt = out.tree;
    nt.n = static_cast<int>(out.orig_of_new.size());
    nt.parent.assign(nt.n, -1);
    nt.children.assign(nt.n, {});
    nt.level.assign(nt.n, 0);
    nt.label.assign(nt.n, 0);
    for (int nv = 0; nv < nt.n; ++nv) {
        int ov = out.orig_of_new[nv];
        nt.label[nv] = t.label[ov];
        nt.level[nv] = t.level[ov];
        if (ov != 0) {
            nt.parent[nv] = new_of_orig[t.parent[ov]];
            nt.children[nt.parent[nv]].push_back(nv);
        }
    }
    nt.height = 0;
    for (int v = 0; v < nt.n; ++v) nt.height = std::max(nt.height, nt.level[v]);
    for (int v = 1; v < nt.n; ++v)
        if (nt.children[v].empty()) nt.leaves.push_back(v);
    return out;
}

}  // namespace rmfc
