#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "rmfc/simplex.hpp"
#include "rmfc/tree.hpp"

namespace rmfc {

// Nonnegative rational point indexed by non-root vertices; only nonzero
// entries are stored.
struct FractionalSolution {
    std::map<int, Rat> values;

    Rat at(int v) const {
        auto it = values.find(v);
        return it == values.end() ? Rat(0) : it->second;
    }
    void set(int v, const Rat& q) {
        if (q == 0)
            values.erase(v);
        else
            values[v] = q;
    }
    VertexSet support() const {
        VertexSet s;
        for (auto& [v, q] : values) s.insert(v);
        return s;
    }
    Rat total() const {
        Rat s(0);
        for (auto& [v, q] : values) s += q;
        return s;
    }
    Rat path_sum(const RootedTree& t, int v) const {
        Rat s(0);
        for (int u = v; u != 0; u = t.parent[u]) s += at(u);
        return s;
    }
    // mass on path P_v restricted to levels (lo, hi]
    Rat path_sum_window(const RootedTree& t, int v, int lo, int hi) const {
        Rat s(0);
        for (int u = v; u != 0; u = t.parent[u])
            if (t.level[u] > lo && t.level[u] <= hi) s += at(u);
        return s;
    }
    Rat level_prefix(const RootedTree& t, int l) const {
        Rat s(0);
        for (auto& [v, q] : values)
            if (t.level[v] <= l) s += q;
        return s;
    }

    bool operator==(const FractionalSolution& o) const { return values == o.values; }
};

inline FractionalSolution mix(const std::vector<FractionalSolution>& ys) {
    if (ys.empty()) throw EmptyCollection("mix of zero points");
    FractionalSolution avg;
    Rat inv(1, static_cast<unsigned long>(ys.size()));
    for (auto& y : ys)
        for (auto& [v, q] : y.values) avg.values[v] += q;
    for (auto it = avg.values.begin(); it != avg.values.end();) {
        it->second *= inv;
        if (it->second == 0)
            it = avg.values.erase(it);
        else
            ++it;
    }
    return avg;
}

// Q_alpha^D(Gamma') with optional fractional coverage requirements delta
// (targets without an entry require coverage 1).
struct TreePolytope {
    SrmfcInstance inst;
    Rat alpha = Rat(1);
    std::vector<int> targets;
    std::map<int, Rat> delta;
    VertexSet forbidden;

    Rat delta_of(int t) const {
        auto it = delta.find(t);
        return it == delta.end() ? Rat(1) : it->second;
    }
};

inline bool in_polytope(const FractionalSolution& x, const TreePolytope& p) {
    const RootedTree& t = p.inst.tree;
    for (auto& [v, q] : x.values)
        if (q < 0 || p.forbidden.count(v)) return false;
    for (int l = 1; l <= t.height; ++l)
        if (x.level_prefix(t, l) > p.alpha * p.inst.budget_prefix(l)) return false;
    for (int tgt : p.targets)
        if (x.path_sum(t, tgt) < p.delta_of(tgt)) return false;
    return true;
}

// Partition of supp(x): v is tight iff x(P_v) equals the requirement of some
// target leaf in T_v, loose otherwise.
struct SupportClasses {
    VertexSet loose, tight;
};

inline SupportClasses classify_supports(const FractionalSolution& x, const TreePolytope& p) {
    const RootedTree& t = p.inst.tree;
    VertexSet target_set(p.targets.begin(), p.targets.end());
    SupportClasses out;
    for (auto& [v, q] : x.values) {
        Rat pv = x.path_sum(t, v);
        bool tight = false;
        for (int u : t.subtree_of(v)) {
            if (!target_set.count(u)) continue;
            if (pv == p.delta_of(u)) {
                tight = true;
                break;
            }
        }
        (tight ? out.tight : out.loose).insert(v);
    }
    return out;
}

// Basic feasible point of the polytope, or nullopt when empty. An optional
// support restriction forces x_v = 0 outside the given set (used to find a
// vertex within supp(x) of a known feasible x).
inline std::optional<FractionalSolution> solve_vertex(
    const TreePolytope& p, const std::optional<VertexSet>& support_restrict = std::nullopt) {
    const RootedTree& t = p.inst.tree;
    std::vector<int> vars;  // vertex ids with a free variable
    std::vector<int> var_of(t.n, -1);
    for (int v = 1; v < t.n; ++v) {
        if (p.forbidden.count(v)) continue;
        if (support_restrict && !support_restrict->count(v)) continue;
        var_of[v] = static_cast<int>(vars.size());
        vars.push_back(v);
    }
    Simplex sx(static_cast<int>(vars.size()));
    for (int l = 1; l <= t.height; ++l) {
        std::vector<std::pair<int, Rat>> terms;
        for (size_t j = 0; j < vars.size(); ++j)
            if (t.level[vars[j]] <= l) terms.emplace_back(static_cast<int>(j), Rat(1));
        sx.add_le(std::move(terms), p.alpha * p.inst.budget_prefix(l));
    }
    for (int tgt : p.targets) {
        std::vector<std::pair<int, Rat>> terms;
        for (int u = tgt; u != 0; u = t.parent[u])
            if (var_of[u] >= 0) terms.emplace_back(var_of[u], Rat(1));
        sx.add_ge(std::move(terms), p.delta_of(tgt));
    }
    auto sol = sx.solve();
    if (!sol) return std::nullopt;
    FractionalSolution x;
    for (size_t j = 0; j < vars.size(); ++j) x.set(vars[j], sol->x[j]);

    // every computed vertex must satisfy the sparsity bound: at most L loose
    // support vertices (checked unconditionally; cheap at this scale)
    auto cls = classify_supports(x, p);
    if (static_cast<int>(cls.loose.size()) > t.height)
        throw std::logic_error("vertex has more than L loose support vertices");
    return x;
}

// min { alpha : Q_alpha^D(Gamma') nonempty }, with a witness point.
inline std::optional<std::pair<Rat, FractionalSolution>> solve_min_alpha(
    const SrmfcInstance& inst, const std::vector<int>& targets, const VertexSet& forbidden = {}) {
    const RootedTree& t = inst.tree;
    std::vector<int> vars;
    std::vector<int> var_of(t.n, -1);
    for (int v = 1; v < t.n; ++v) {
        if (forbidden.count(v)) continue;
        var_of[v] = static_cast<int>(vars.size());
        vars.push_back(v);
    }
    int alpha_var = static_cast<int>(vars.size());
    Simplex sx(alpha_var + 1);
    for (int l = 1; l <= t.height; ++l) {
        std::vector<std::pair<int, Rat>> terms;
        for (size_t j = 0; j < vars.size(); ++j)
            if (t.level[vars[j]] <= l) terms.emplace_back(static_cast<int>(j), Rat(1));
        terms.emplace_back(alpha_var, -inst.budget_prefix(l));
        sx.add_le(std::move(terms), Rat(0));
    }
    for (int tgt : targets) {
        std::vector<std::pair<int, Rat>> terms;
        for (int u = tgt; u != 0; u = t.parent[u])
            if (var_of[u] >= 0) terms.emplace_back(var_of[u], Rat(1));
        sx.add_ge(std::move(terms), Rat(1));
    }
    std::vector<Rat> c(alpha_var + 1, Rat(0));
    c[alpha_var] = 1;
    sx.minimize(std::move(c));
    auto sol = sx.solve();
    if (!sol) return std::nullopt;
    FractionalSolution x;
    for (size_t j = 0; j < vars.size(); ++j) x.set(vars[j], sol->x[j]);
    return std::make_pair(sol->x[alpha_var], x);
}

// Sub-instance over levels (h_lo, h_hi]: the bottom h_lo levels are
// contracted into a fresh root and levels above h_hi are dropped. The
// window's first-level budget absorbs the full prefix B_{<=h_lo+1} so that
// any point feasible on the full instance restricts to a feasible point of
// the window; stretch statements about the window are then statements about
// original-instance prefixes.
struct LevelWindow {
    SrmfcInstance inst;
    std::vector<int> orig_of_new;  // window id -> original id (index 0 = synthetic root)
    std::vector<int> new_of_orig;  // -1 when outside the window
    int h_lo = 0, h_hi = 0;
};

inline LevelWindow make_window(const SrmfcInstance& src, int h_lo, int h_hi, bool absorb_prefix) {
    const RootedTree& t = src.tree;
    h_hi = std::min(h_hi, t.height);
    if (h_lo < 0 || h_lo >= h_hi) throw LevelOutOfRange("window (" + std::to_string(h_lo) + "," + std::to_string(h_hi) + "]");
    LevelWindow w;
    w.h_lo = h_lo;
    w.h_hi = h_hi;
    w.new_of_orig.assign(t.n, -1);
    w.orig_of_new.push_back(0);  // synthetic root stands for the contracted bottom
    RootedTree& nt = w.inst.tree;
    nt.parent.push_back(-1);
    nt.children.push_back({});
    nt.level.push_back(0);
    nt.label.push_back(t.label[0]);
    // BFS order keeps parents before children
    std::vector<int> order;
    {
        std::vector<int> q{0};
        size_t head = 0;
        while (head < q.size()) {
            int u = q[head++];
            if (u != 0 && t.level[u] > h_lo && t.level[u] <= h_hi) order.push_back(u);
            for (int c : t.children[u])
                if (t.level[c] <= h_hi) q.push_back(c);
        }
    }
    for (int ov : order) {
        int nv = static_cast<int>(w.orig_of_new.size());
        w.orig_of_new.push_back(ov);
        w.new_of_orig[ov] = nv;
        int op = t.parent[ov];
        int np = t.level[ov] == h_lo + 1 ? 0 : w.new_of_orig[op];
        nt.parent.push_back(np);
        nt.children.push_back({});
        nt.level.push_back(t.level[ov] - h_lo);
        nt.label.push_back(t.label[ov]);
        nt.children[np].push_back(nv);
    }
    nt.n = static_cast<int>(w.orig_of_new.size());
    nt.height = 0;
    for (int v = 0; v < nt.n; ++v) nt.height = std::max(nt.height, nt.level[v]);
    for (int v = 1; v < nt.n; ++v)
        if (nt.children[v].empty()) nt.leaves.push_back(v);
    for (int j = 1; j <= nt.height; ++j) w.inst.budgets.push_back(src.budgets[h_lo + j - 1]);
    if (absorb_prefix && !w.inst.budgets.empty()) w.inst.budgets[0] += src.budget_prefix(h_lo);
    return w;
}

inline FractionalSolution restrict_to_window(const FractionalSolution& x, const LevelWindow& w) {
    FractionalSolution out;
    for (auto& [v, q] : x.values)
        if (w.new_of_orig[v] >= 0) out.set(w.new_of_orig[v], q);
    return out;
}

// Window sparsification. Rounds a point of Q_{1,delta} to a point
// with supp(y) within supp(x), value floors eps*gamma/h2 on levels <= h2 and
// eps*gamma on levels in (h2,h1], budget blow-up at most 1+eps^2, and
// coverage loss at most 2*eps*gamma per target.
inline FractionalSolution sparsify(const FractionalSolution& x, const Rat& eps, const Rat& gamma,
                                   int h1, int h2, const std::map<int, Rat>& delta,
                                   const SrmfcInstance& inst) {
    const RootedTree& t = inst.tree;
    const int big_l = t.height;
    if (eps <= 0 || eps > Rat(1, 7)) throw PreconditionViolated("sparsify: 0 < eps <= 1/7");
    if (gamma <= 0 || gamma > 1) throw PreconditionViolated("sparsify: gamma in (0,1]");
    if (h2 > h1 || h1 > big_l || h2 < 0) throw PreconditionViolated("sparsify: need 0 <= h2 <= h1 <= L");
    if (h1 < big_l && inst.budgets[h1] < Rat(big_l) / eps)
        throw PreconditionViolated("sparsify: B_{h1+1} >= L/eps required");
    if (h2 < h1 && inst.budgets[h2] < Rat(h1) / eps)
        throw PreconditionViolated("sparsify: B_{h2+1} >= h1/eps required");
    {
        TreePolytope q;
        q.inst = inst;
        for (auto& [tgt, d] : delta) {
            q.targets.push_back(tgt);
            q.delta[tgt] = d;
        }
        if (!in_polytope(x, q)) throw PreconditionViolated("sparsify: x not in Q_{1,delta}");
    }

    const Rat step = eps * gamma;
    FractionalSolution y = x;

    if (h2 < h1) {
        LevelWindow w = make_window(inst, h2, h1, true);
        // caps never exceed what x itself already uses in and below the
        // window, so splicing the rounded window point back cannot raise any
        // full-instance prefix beyond x's own usage plus the rounding slack
        Rat below = x.level_prefix(t, h2);
        Rat window_mass = x.level_prefix(t, h1) - below;
        std::vector<Rat> caps(w.inst.tree.height);
        for (int j = 1; j <= w.inst.tree.height; ++j) {
            Rat c = inst.budget_prefix(h2 + j) - below;
            caps[j - 1] = rat_min(c, window_mass);
        }
        for (int j = w.inst.tree.height - 1; j >= 1; --j) caps[j] -= caps[j - 1];
        w.inst.budgets = caps;

        TreePolytope wp;
        wp.inst = w.inst;
        wp.alpha = Rat(1);
        FractionalSolution xw = restrict_to_window(x, w);
        for (int leaf : w.inst.tree.leaves) {
            wp.targets.push_back(leaf);
            wp.delta[leaf] = round_down_multiple(xw.path_sum(w.inst.tree, leaf), step);
        }
        VertexSet supp_w = xw.support();
        auto xv = solve_vertex(wp, supp_w);
        if (!xv) throw std::logic_error("sparsify: window polytope unexpectedly empty");
        auto cls = classify_supports(*xv, wp);
        FractionalSolution xr;
        for (auto& [v, q] : xv->values) {
            if (cls.loose.count(v))
                xr.set(v, round_up_multiple(q, step));
            else
                xr.set(v, round_down_multiple(q, step));
        }
        for (int leaf : w.inst.tree.leaves)
            if (xr.path_sum(w.inst.tree, leaf) < wp.delta[leaf])
                throw std::logic_error("sparsify: rounded window point lost coverage");
        // splice back
        for (auto& [v, q] : x.values)
            if (t.level[v] > h2 && t.level[v] <= h1) y.values.erase(v);
        for (auto& [nv, q] : xr.values)
            if (q != 0) y.set(w.orig_of_new[nv], q);
    }
    if (h2 > 0) {
        Rat small_step = step / Rat(h2);
        for (int v = 1; v < t.n; ++v)
            if (t.level[v] <= h2 && y.at(v) != 0) y.set(v, round_down_multiple(y.at(v), small_step));
    }
    const Rat budget_factor = Rat(1) + eps * eps;
    for (int l = 1; l <= big_l; ++l)
        if (y.level_prefix(t, l) > budget_factor * inst.budget_prefix(l))
            throw std::logic_error("sparsify: budget blow-up beyond 1+eps^2");
    return y;
}

// Loose-vertex rounding of a vertex of Q_alpha(Gamma') with unit
// requirements: keep tight vertices at value one plus every loose vertex.
inline VertexSet round_loose(const FractionalSolution& x, const TreePolytope& p) {
    for (int tgt : p.targets)
        if (p.delta_of(tgt) != 1) throw PreconditionViolated("round_loose needs unit coverage requirements");
    auto cls = classify_supports(x, p);
    VertexSet r;
    for (int v : cls.loose) r.insert(v);
    for (int v : cls.tight)
        if (x.at(v) == 1) r.insert(v);
    for (int tgt : p.targets) {
        bool hit = false;
        for (int u = tgt; u != 0; u = p.inst.tree.parent[u])
            if (r.count(u)) {
                hit = true;
                break;
            }
        if (!hit) throw std::logic_error("round_loose: target left unprotected");
    }
    return r;
}

// Layered rounding: splits the instance at the threshold sequence
// h_0 = L, h_i = ceil(log_{1+eps}(h_{i-1}/eps^2)) + 1, rounds each slice with
// round_loose on a vertex found at stretch k*alpha, and unions the results.
// The output fireproofs nothing on levels <= h_k.
inline VertexSet round_layered(const FractionalSolution& y, int k, const Rat& eps,
                               const SrmfcInstance& inst) {
    const RootedTree& t = inst.tree;
    if (k < 1) throw ParameterOutOfRange("round_layered: k >= 1");
    std::vector<int> h(static_cast<size_t>(k) + 1);
    h[0] = t.height;
    for (int i = 1; i <= k; ++i) {
        long v = ceil_log(Rat(1) + eps, Rat(h[i - 1]) / (eps * eps)) + 1;
        h[i] = static_cast<int>(std::min<long>(v, h[i - 1]));
    }
    for (auto& [v, q] : y.values)
        if (t.level[v] <= h[k]) throw PreconditionViolated("round_layered: support must avoid levels <= h_k");

    Rat alpha(0);
    for (int l = 1; l <= t.height; ++l) {
        Rat pref = inst.budget_prefix(l);
        Rat mass = y.level_prefix(t, l);
        if (pref == 0) {
            if (mass > 0) throw PreconditionViolated("round_layered: mass above zero budget");
            continue;
        }
        Rat ratio = mass / pref;
        alpha = rat_max(alpha, ratio);
    }

    VertexSet out;
    for (int i = 1; i <= k; ++i) {
        if (h[i] >= h[i - 1]) continue;  // empty slice
        std::vector<int> gamma_i;
        for (int leaf : t.leaves)
            if (y.path_sum_window(t, leaf, h[i], h[i - 1]) >= Rat(1, static_cast<unsigned long>(k)))
                gamma_i.push_back(leaf);
        if (gamma_i.empty()) continue;
        LevelWindow w = make_window(inst, h[i], h[i - 1], true);
        TreePolytope wp;
        wp.inst = w.inst;
        wp.alpha = Rat(k) * alpha;
        VertexSet tgt;
        for (int leaf : gamma_i) {
            int u = leaf;
            while (t.level[u] > h[i - 1]) u = t.parent[u];
            tgt.insert(w.new_of_orig[u]);
        }
        wp.targets.assign(tgt.begin(), tgt.end());
        auto xv = solve_vertex(wp);
        if (!xv) throw std::logic_error("round_layered: slice polytope unexpectedly empty");
        VertexSet ri = round_loose(*xv, wp);
        for (int nv : ri) out.insert(w.orig_of_new[nv]);
    }
    return out;
}

// line-oriented dump for test forensics: "<vertex id> <value p/q>"
inline void dump_solution(std::ostream& os, const FractionalSolution& x) {
    for (auto& [v, q] : x.values) os << v << ' ' << rat_str(q) << '\n';
}

}  // namespace rmfc
