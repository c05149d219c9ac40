#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "rmfc/lp.hpp"
#include "rmfc/metric.hpp"
#include "rmfc/simplex.hpp"

namespace rmfc {

// Nonnegative point indexed by (point, level) pairs.
struct PairSolution {
    std::map<Pair, Rat> values;

    Rat at(const Pair& p) const {
        auto it = values.find(p);
        return it == values.end() ? Rat(0) : it->second;
    }
    void set(const Pair& p, const Rat& q) {
        if (q == 0)
            values.erase(p);
        else
            values[p] = q;
    }
    Rat level_sum(int l) const {
        Rat s(0);
        for (auto& [p, q] : values)
            if (p.second == l) s += q;
        return s;
    }
    Rat prefix(int l) const {
        Rat s(0);
        for (auto& [p, q] : values)
            if (p.second <= l) s += q;
        return s;
    }
    // coverage of point v by per-level dilated balls
    Rat ball_coverage(const SnukcInstance& inst, int v, const std::vector<Rat>& beta) const {
        Rat s(0);
        for (auto& [p, q] : values)
            if (inst.space.d(p.first, v) <= beta[p.second - 1] * inst.radii[p.second - 1]) s += q;
        return s;
    }
    Rat ball_coverage(const SnukcInstance& inst, int v, const Rat& beta) const {
        return ball_coverage(inst, v, std::vector<Rat>(inst.budgets.size(), beta));
    }
};

// Vertex of the pair polytope: per-point coverage at per-level dilations,
// prefix budgets alpha*k_{<=l}, box bounds, x(D) = 0, and per-level
// compatibility budgets k_l - |C_l|. The per-level rows also keep every
// level's mass within its own budget, which the slice decomposition of the
// sparsifier relies on.
inline std::optional<PairSolution> solve_vertex_nukc(
    const SnukcInstance& inst, const Rat& alpha, const std::vector<Rat>& beta,
    const std::vector<int>& cover_points, const std::map<int, Rat>& delta, const PairSet& committed,
    const PairSet& forbidden) {
    const int n = inst.space.n, big_l = inst.levels();
    std::vector<Pair> vars;
    std::map<Pair, int> var_of;
    for (int v = 0; v < n; ++v)
        for (int l = 1; l <= big_l; ++l) {
            Pair p{v, l};
            if (forbidden.count(p)) continue;
            var_of[p] = static_cast<int>(vars.size());
            vars.push_back(p);
        }
    std::vector<long> committed_at(big_l + 1, 0);
    for (auto& [v, l] : committed) committed_at[l]++;

    Simplex sx(static_cast<int>(vars.size()));
    for (int v : cover_points) {
        std::vector<std::pair<int, Rat>> terms;
        for (size_t j = 0; j < vars.size(); ++j) {
            auto& [u, l] = vars[j];
            if (inst.space.d(u, v) <= beta[l - 1] * inst.radii[l - 1])
                terms.emplace_back(static_cast<int>(j), Rat(1));
        }
        auto it = delta.find(v);
        sx.add_ge(std::move(terms), it == delta.end() ? Rat(1) : it->second);
    }
    for (int l = 1; l <= big_l; ++l) {
        std::vector<std::pair<int, Rat>> pref, lvl;
        for (size_t j = 0; j < vars.size(); ++j) {
            if (vars[j].second <= l) pref.emplace_back(static_cast<int>(j), Rat(1));
            if (vars[j].second == l) lvl.emplace_back(static_cast<int>(j), Rat(1));
        }
        sx.add_le(std::move(pref), alpha * inst.budget_prefix(l));
        Rat adjusted = inst.budgets[l - 1] - Rat(committed_at[l]);
        sx.add_le(std::move(lvl), alpha * rat_max(adjusted, Rat(0)));
    }
    for (size_t j = 0; j < vars.size(); ++j) sx.add_le({{static_cast<int>(j), Rat(1)}}, Rat(1));
    auto sol = sx.solve();
    if (!sol) return std::nullopt;
    PairSolution x;
    for (size_t j = 0; j < vars.size(); ++j) x.set(vars[j], sol->x[j]);
    return x;
}

inline std::optional<PairSolution> solve_vertex_nukc(const SnukcInstance& inst, const Rat& alpha,
                                                     const Rat& beta,
                                                     const std::vector<int>& cover_points,
                                                     const PairSet& committed = {},
                                                     const PairSet& forbidden = {}) {
    return solve_vertex_nukc(inst, alpha, std::vector<Rat>(inst.budgets.size(), beta),
                             cover_points, {}, committed, forbidden);
}

// LP-aware reduction of a metric instance to a tree instance. The tree is
// built level by level from one leaf per point: each round picks the
// uncovered point whose ball holds the most mass, makes it a level vertex,
// and adopts every point within twice the dilated radius. Needs the radii to
// decay geometrically (ratio eta > 2) so that adopted sets nest.
struct TreeReduction {
    SrmfcInstance tree_inst;            // leaf row already dropped
    std::vector<int> psi;               // tree vertex -> point
    std::vector<int> anchor_of_point;   // point -> its level-L tree vertex
    FractionalSolution y_x;             // induced point on the tree
    std::map<int, Rat> delta_tree;      // requirement per tree leaf
};

inline TreeReduction reduce_to_tree(const SnukcInstance& inst, const PairSolution& x,
                                    const Rat& beta, const Rat& eta,
                                    const std::map<int, Rat>& delta) {
    inst.validate();
    if (eta <= 2) throw PreconditionViolated("reduce_to_tree: eta > 2");
    const int big_l = inst.levels();
    for (int l = 1; l < big_l; ++l)
        if (inst.radii[l - 1] < eta * inst.radii[l])
            throw PreconditionViolated("reduce_to_tree: radii must decay by factor eta");
    const int n = inst.space.n;

    struct Node {
        int point;
        int level;    // 1..L for kept nodes
        int parent;   // index into nodes
        Rat mass;
    };
    std::vector<Node> nodes;
    std::vector<int> frontier;  // node indices on the level below (farther from root)
    std::vector<int> point_leaf(n);
    for (int v = 0; v < n; ++v) {
        point_leaf[v] = static_cast<int>(nodes.size());
        nodes.push_back({v, big_l + 1, -1, Rat(0)});
        frontier.push_back(point_leaf[v]);
    }
    for (int l = big_l; l >= 1; --l) {
        std::vector<int> next;
        std::vector<char> assigned(frontier.size(), 0);
        while (true) {
            int pick = -1;
            Rat pick_mass(0);
            for (size_t i = 0; i < frontier.size(); ++i) {
                if (assigned[i]) continue;
                int v = nodes[frontier[i]].point;
                Rat mass(0);
                for (auto& [p, q] : x.values)
                    if (p.second == l && inst.space.d(p.first, v) <= beta * inst.radii[l - 1])
                        mass += q;
                if (pick < 0 || mass > pick_mass ||
                    (mass == pick_mass && v < nodes[frontier[static_cast<size_t>(pick)]].point)) {
                    // remember the frontier slot, compare by point id on ties
                    pick = static_cast<int>(i);
                    pick_mass = mass;
                }
            }
            if (pick < 0) break;
            int host_point = nodes[frontier[static_cast<size_t>(pick)]].point;
            int id = static_cast<int>(nodes.size());
            nodes.push_back({host_point, l, -1, pick_mass});
            for (size_t i = 0; i < frontier.size(); ++i) {
                if (assigned[i]) continue;
                int v = nodes[frontier[i]].point;
                if (inst.space.d(v, host_point) <= Rat(2) * beta * inst.radii[l - 1]) {
                    assigned[i] = 1;
                    nodes[frontier[i]].parent = id;
                }
            }
            next.push_back(id);
        }
        frontier = std::move(next);
    }

    TreeReduction out;
    RootedTree& t = out.tree_inst.tree;
    // renumber: root, then kept nodes by (level, creation order)
    std::vector<int> new_of(nodes.size(), -1);
    t.parent.push_back(-1);
    t.level.push_back(0);
    t.children.push_back({});
    t.label.push_back(-1);
    out.psi.push_back(-1);
    for (int l = 1; l <= big_l; ++l)
        for (size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i].level != l) continue;
            int nv = static_cast<int>(out.psi.size());
            new_of[i] = nv;
            int par = l == 1 ? 0 : new_of[nodes[i].parent];
            t.parent.push_back(par);
            t.level.push_back(l);
            t.children.push_back({});
            t.label.push_back(nodes[i].point);
            t.children[par].push_back(nv);
            out.psi.push_back(nodes[i].point);
            out.y_x.set(nv, nodes[i].mass);
        }
    t.n = static_cast<int>(out.psi.size());
    t.height = big_l;
    for (int v = 1; v < t.n; ++v)
        if (t.children[v].empty()) t.leaves.push_back(v);
    out.tree_inst.budgets = inst.budgets;
    out.tree_inst.validate();

    out.anchor_of_point.assign(n, -1);
    for (int v = 0; v < n; ++v) out.anchor_of_point[v] = new_of[nodes[point_leaf[v]].parent];
    for (int v = 0; v < n; ++v) {
        int a = out.anchor_of_point[v];
        auto it = delta.find(v);
        Rat dv = it == delta.end() ? Rat(1) : it->second;
        auto cur = out.delta_tree.find(a);
        if (cur == out.delta_tree.end() || cur->second < dv) out.delta_tree[a] = dv;
    }
    return out;
}

inline PairSolution project_back(const FractionalSolution& y, const TreeReduction& red) {
    PairSolution out;
    for (auto& [v, q] : y.values) {
        Pair p{red.psi[v], red.tree_inst.tree.level[v]};
        out.set(p, out.at(p) + q);
    }
    return out;
}

// Metric sparsifier. Splits the bottom levels into lambda slices of
// geometrically separated radii, pushes each slice through the tree
// reduction and the tree sparsifier, projects back, moves support onto
// supp(x), reassembles, and rescales. The per-level mass bounds of
// (C,D)-compatible points are what make each slice restriction feasible.
struct NukcSparsified {
    PairSolution y;
    std::vector<Rat> beta;  // beta(lambda) per level
};

inline NukcSparsified sparsify_nukc(const SnukcInstance& inst, const PairSolution& x,
                                    const Rat& eps, long lambda, const std::vector<int>& cover,
                                    int h_hat, int h_check) {
    inst.validate();
    if (eps <= 0 || eps > Rat(1, 7)) throw PreconditionViolated("sparsify_nukc: 0 < eps <= 1/7");
    const Rat base = Rat(1) + eps;
    const Rat eta = rat_pow(base, lambda);
    if (lambda < 1 || eta <= 2) throw PreconditionViolated("sparsify_nukc: (1+eps)^lambda > 2 required");
    const int big_l = inst.levels();
    for (int l = 1; l <= big_l; ++l) {
        if (x.prefix(l) > inst.budget_prefix(l))
            throw PreconditionViolated("sparsify_nukc: x violates prefix budgets");
        if (x.level_sum(l) > inst.budgets[l - 1])
            throw PreconditionViolated("sparsify_nukc: x violates per-level budgets");
    }

    const Rat bulk = Rat(2) * eta / (eta - Rat(2));
    NukcSparsified out;
    out.beta.assign(static_cast<size_t>(big_l), Rat(1));
    for (int l = 1; l <= std::min(h_hat, big_l); ++l) out.beta[l - 1] = Rat(1) + bulk;

    PairSolution combined;
    for (auto& [p, q] : x.values)
        if (p.second > h_hat) combined.set(p, q);

    for (long m = 1; m <= lambda; ++m) {
        std::vector<int> slice_levels;
        for (int l = 1; l <= std::min(h_hat, big_l); ++l)
            if ((l - m) % lambda == 0) slice_levels.push_back(l);
        if (slice_levels.empty()) continue;
        SnukcInstance slice;
        slice.space = inst.space;
        for (int l : slice_levels) {
            slice.budgets.push_back(inst.budgets[l - 1]);
            slice.radii.push_back(inst.radii[l - 1]);
        }
        PairSolution xs;
        for (size_t i = 0; i < slice_levels.size(); ++i)
            for (int v = 0; v < inst.space.n; ++v) {
                Rat q = x.at({v, slice_levels[i]});
                if (q != 0) xs.set({v, static_cast<int>(i) + 1}, q);
            }
        std::map<int, Rat> delta_m;
        const Rat step = eps / Rat(lambda);
        for (int v : cover) {
            Rat cov = xs.ball_coverage(slice, v, Rat(1));
            Rat d = round_down_multiple(cov, step);
            delta_m[v] = rat_min(d, Rat(1));
        }
        auto red = reduce_to_tree(slice, xs, Rat(1), eta, delta_m);
        int h2 = 0;
        for (size_t i = 0; i < slice_levels.size(); ++i)
            if (slice_levels[i] <= h_check) h2 = static_cast<int>(i) + 1;
        auto y_tree = sparsify(red.y_x, eps, Rat(1) / Rat(lambda),
                               static_cast<int>(slice_levels.size()), h2, red.delta_tree,
                               red.tree_inst);
        auto xy = project_back(y_tree, red);
        // move mass onto supp(x) within one plain radius; the support of the
        // tree point only ever sits on adopted hosts, so a close original
        // support pair always exists
        for (auto& [p, q] : xy.values) {
            auto [v, i] = p;
            Pair orig{v, slice_levels[static_cast<size_t>(i) - 1]};
            if (x.at(orig) != 0) {
                combined.set(orig, combined.at(orig) + q);
                continue;
            }
            int host = -1;
            for (int u = 0; u < inst.space.n && host < 0; ++u)
                if (x.at({u, orig.second}) != 0 &&
                    inst.space.d(u, v) <= inst.radii[orig.second - 1])
                    host = u;
            if (host < 0) throw std::logic_error("sparsify_nukc: no support pair within one radius");
            Pair moved{host, orig.second};
            combined.set(moved, combined.at(moved) + q);
        }
    }

    const Rat scale = Rat(1) / (Rat(1) - Rat(3) * eps);
    for (auto& [p, q] : combined.values) out.y.set(p, q * scale);

    // contract checks: support, floors, budgets, coverage
    const Rat cap = Rat(1) + Rat(7) * eps;
    for (auto& [p, q] : out.y.values) {
        if (x.at(p) == 0) throw std::logic_error("sparsify_nukc: support escaped supp(x)");
        if (p.second <= h_check && q < eps / (Rat(lambda) * Rat(h_hat)) * scale * (Rat(1) - Rat(3) * eps))
            throw std::logic_error("sparsify_nukc: low-level floor violated");
    }
    for (int l = 1; l <= big_l; ++l)
        if (out.y.prefix(l) > cap * inst.budget_prefix(l))
            throw std::logic_error("sparsify_nukc: budget blow-up beyond 1+7eps");
    for (int v : cover)
        if (out.y.ball_coverage(inst, v, out.beta) < 1)
            throw std::logic_error("sparsify_nukc: coverage lost");
    return out;
}

// Self-contained small-radii rounding: radii are coarsened upward to powers
// of four, equal levels merged, the instance reduced to a tree with eta = 4
// and rounded there; centers project back and spread across their merged
// group greedily. Coverage lands within 16*beta of the original radii.
inline std::optional<PairSet> round_small_radii(const SnukcInstance& inst, const PairSolution& x,
                                                const Rat& eps, const Rat& alpha, const Rat& beta,
                                                const std::vector<int>& cover = {}) {
    inst.validate();
    const int big_l = inst.levels();
    for (int l = 1; l <= big_l; ++l)
        if (inst.budgets[l - 1] < Rat(big_l) / eps)
            throw PreconditionViolated("round_small_radii: k_l >= L/eps required");

    // coarsen and merge
    std::vector<Rat> coarse(big_l);
    for (int l = 1; l <= big_l; ++l) {
        const Rat& r = inst.radii[l - 1];
        coarse[l - 1] = r > 0 ? rat_pow(Rat(4), ceil_log(Rat(4), r)) : Rat(0);
    }
    std::vector<int> group_of(big_l + 1, 0);
    SnukcInstance merged;
    merged.space = inst.space;
    std::vector<int> group_start;  // first original level of each group
    for (int l = 1; l <= big_l; ++l) {
        if (merged.radii.empty() || merged.radii.back() != coarse[l - 1]) {
            merged.radii.push_back(coarse[l - 1]);
            merged.budgets.push_back(inst.budgets[l - 1]);
            group_start.push_back(l);
        } else {
            merged.budgets.back() += inst.budgets[l - 1];
        }
        group_of[l] = static_cast<int>(merged.radii.size());
    }
    merged.validate();
    PairSolution xm;
    for (auto& [p, q] : x.values) {
        Pair g{p.first, group_of[p.second]};
        xm.set(g, xm.at(g) + q);
    }

    std::map<int, Rat> delta;
    if (!cover.empty()) {
        for (int v = 0; v < inst.space.n; ++v) delta[v] = 0;
        for (int v : cover) delta[v] = 1;
    }
    auto red = reduce_to_tree(merged, xm, beta, Rat(4), delta);
    TreePolytope p;
    p.inst = red.tree_inst;
    p.alpha = alpha;
    for (int leaf : red.tree_inst.tree.leaves)
        if (red.delta_tree.at(leaf) > 0) p.targets.push_back(leaf);
    auto xv = solve_vertex(p);
    if (!xv) return std::nullopt;
    auto r_tree = round_loose(*xv, p);

    // spread each group's centers onto original levels, earliest fit under
    // the (alpha + eps) prefix caps
    std::vector<std::vector<int>> group_centers(merged.levels() + 1);
    for (int v : r_tree) group_centers[red.tree_inst.tree.level[v]].push_back(red.psi[v]);
    PairSet out;
    long placed = 0;
    int next_level = 1;
    const Rat cap_alpha = alpha + eps;
    for (int g = 1; g <= merged.levels(); ++g) {
        next_level = std::max(next_level, group_start[g - 1]);
        int group_end = g < merged.levels() ? group_start[g] - 1 : big_l;
        for (int v : group_centers[g]) {
            while (next_level <= group_end &&
                   Rat(placed + 1) > cap_alpha * inst.budget_prefix(next_level))
                ++next_level;
            if (next_level > group_end)
                throw std::logic_error("round_small_radii: group budget exhausted");
            out.insert({v, next_level});
            ++placed;
        }
    }
    return out;
}

}  // namespace rmfc
