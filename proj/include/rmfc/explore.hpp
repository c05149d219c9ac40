#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "rmfc/compress.hpp"
#include "rmfc/lp.hpp"

namespace rmfc {

// Threshold bundle for the guessing procedures on an eps-compressed
// instance. Level thresholds are clamped to L; the raw formula values are
// kept for reporting.
struct ExploreThresholds {
    Rat eps;
    int h_hat = 0;   // clamped
    int h_check = 0; // clamped
    long h_hat_raw = 0;
    long h_check_raw = 0;
    long kappa = 0;
    long n_mix = 0;  // N
    Rat zeta_bar;
    // sparsification runs at min(eps, 1/7); its own window thresholds are
    // scanned from the budgets so its preconditions hold for any profile
    Rat eps_sparse;
    int sp_h1 = 0, sp_h2 = 0;
};

inline ExploreThresholds thresholds(const Rat& eps, const SrmfcInstance& inst) {
    if (eps <= 0 || eps > Rat(1, 2)) throw ParameterOutOfRange("thresholds: 0 < eps <= 1/2");
    inst.validate();
    const int big_l = inst.tree.height;
    const Rat base = Rat(1) + eps;
    ExploreThresholds th;
    th.eps = eps;
    th.h_hat_raw = ceil_log(base, Rat(big_l) / (eps * eps)) + 1;
    th.h_hat = static_cast<int>(std::min<long>(th.h_hat_raw, big_l));
    th.h_check_raw = ceil_log(base, Rat(th.h_hat) / (eps * eps)) + 1;
    th.h_check = static_cast<int>(std::min<long>(th.h_check_raw, big_l));
    th.n_mix = to_long(rat_ceil(Rat(4) / eps));
    th.kappa = ceil_log(base, (Rat(1) + Rat(3) * eps) * Rat(th.n_mix) / (eps * eps));
    th.zeta_bar = Rat(2) * Rat(th.n_mix) / (eps * eps * eps) *
                  (Rat(th.h_check) * Rat(th.h_check) * inst.budget_prefix(th.h_check) +
                   Rat(2) * Rat(th.kappa) * inst.budget_prefix(th.h_hat));

    th.eps_sparse = rat_min(eps, Rat(1, 7));
    // smallest h with B_{h+1} >= L/eps_sparse (ditto for the lower window)
    auto scan = [&](const Rat& need) {
        for (int h = 0; h < big_l; ++h)
            if (inst.budgets[h] >= need) return h;
        return big_l;
    };
    th.sp_h1 = scan(Rat(big_l) / th.eps_sparse);
    th.sp_h2 = scan(Rat(th.sp_h1) / th.eps_sparse);
    if (th.sp_h2 > th.sp_h1) th.sp_h2 = th.sp_h1;
    return th;
}

// Gamma_top^h(y): leaves essentially covered above level h.
inline VertexSet gamma_top(const FractionalSolution& y, int h, const Rat& eps,
                           const RootedTree& tree) {
    VertexSet out;
    for (int leaf : tree.leaves)
        if (y.path_sum_window(tree, leaf, h, tree.height) >= Rat(1) - eps) out.insert(leaf);
    return out;
}

// D_top^h(A) = union over v in A of P_v and (T_v cap V_{<=h}).
inline VertexSet blocked_top(const RootedTree& tree, const VertexSet& a, int h) {
    VertexSet out;
    for (int v : a) {
        if (tree.level[v] > h) throw PreconditionViolated("blocked_top: A must lie in V_{<=h}");
        for (int u : tree.path_of(v)) out.insert(u);
        for (int u : tree.subtree_of(v))
            if (tree.level[u] <= h) out.insert(u);
    }
    return out;
}

// D_dropped(A): below h_check block the whole subtree cap V_{<=h_check};
// above it only the kappa-truncated subtree cap V_{<=h_hat}.
inline VertexSet blocked_dropped(const RootedTree& tree, const VertexSet& a,
                                 const ExploreThresholds& th) {
    VertexSet out;
    for (int v : a) {
        if (tree.level[v] > th.h_hat) throw PreconditionViolated("blocked_dropped: A must lie in V_{<=h_hat}");
        for (int u : tree.path_of(v)) out.insert(u);
        if (tree.level[v] <= th.h_check) {
            for (int u : tree.subtree_of(v))
                if (tree.level[u] <= th.h_check) out.insert(u);
        } else {
            for (int u : tree.subtree_within(v, th.kappa))
                if (tree.level[u] <= th.h_hat) out.insert(u);
        }
    }
    return out;
}

struct PartitionCandidate {
    VertexSet bot, top;
    bool operator<(const PartitionCandidate& o) const {
        return bot != o.bot ? bot < o.bot : top < o.top;
    }
    bool operator==(const PartitionCandidate& o) const { return bot == o.bot && top == o.top; }
};

// Partition family of a point: one candidate per subset G of the bottom
// support, interpreting G as the guesses "P_v meets the optimum".
inline std::vector<PartitionCandidate> partitions_from_point(const FractionalSolution& y, int h,
                                                             const SrmfcInstance& inst,
                                                             int max_support_bits = 16) {
    const RootedTree& t = inst.tree;
    std::vector<int> bottom;
    for (auto& [v, q] : y.values)
        if (t.level[v] <= h) bottom.push_back(v);
    if (static_cast<int>(bottom.size()) > max_support_bits)
        throw ResourceCap("partitions_from_point: bottom support too large");
    std::set<PartitionCandidate> dedup;
    VertexSet all_leaves(t.leaves.begin(), t.leaves.end());
    for (unsigned long mask = 0; mask < (1ul << bottom.size()); ++mask) {
        VertexSet bot;
        for (size_t i = 0; i < bottom.size(); ++i)
            if (mask >> i & 1)
                for (int leaf : t.leaves_under(bottom[i])) bot.insert(leaf);
        PartitionCandidate pc;
        pc.bot = bot;
        for (int leaf : all_leaves)
            if (!bot.count(leaf)) pc.top.insert(leaf);
        dedup.insert(std::move(pc));
    }
    return {dedup.begin(), dedup.end()};
}

enum class ExploreVariant { basic, mixing, thinned, efficient };

struct ExploreLimits {
    long max_nodes = 200000;
    long max_partitions = 256;
    int max_support_bits = 14;   // widest subset family enumerated at one node
    long gamma = -1;             // depth budget for basic/mixing/thinned; -1: preset
    bool use_zeta_bar = true;    // efficient: the analysis-backed bulk budget
    Rat zeta = Rat(0);           // efficient: explicit bulk budget when !use_zeta_bar
    int h_override = -1;         // threshold separating bottom from top; -1: preset
};

struct ExploreResult {
    std::vector<PartitionCandidate> partitions;
    bool truncated = false;
    bool eps_out_of_range = false;  // guarantees are proven for eps <= 1/7 only
    long nodes = 0;
};

namespace detail {

struct ExploreCtx {
    const SrmfcInstance* inst;
    const ExploreThresholds* th;
    ExploreVariant variant;
    ExploreLimits limits;
    int h;  // bottom/top threshold used for guessing
    std::set<PartitionCandidate> out;
    // the basic variant's emissions are a function of (D, depth) alone and
    // grow with the depth budget, so a state revisited with no more depth
    // than before contributes nothing new
    std::map<VertexSet, Rat> basic_seen;
    // the other variants are deterministic in (D, depth, Y), Y enters only
    // through its multiset, and a larger remaining depth budget strictly
    // widens the branch menu: a state revisited with no more budget than
    // before contributes nothing new
    std::map<std::pair<VertexSet, std::vector<std::map<int, Rat>>>, Rat> state_seen;
    bool truncated = false;
    long nodes = 0;

    bool emit(PartitionCandidate pc) {
        if (static_cast<long>(out.size()) >= limits.max_partitions && !out.count(pc)) {
            truncated = true;
            return false;
        }
        out.insert(std::move(pc));
        return true;
    }
};

inline FractionalSolution sparsify_for_explore(const FractionalSolution& x, const ExploreCtx& c) {
    std::map<int, Rat> unit;
    for (int leaf : c.inst->tree.leaves) unit[leaf] = 1;
    auto y = sparsify(x, c.th->eps_sparse, 1, c.th->sp_h1, c.th->sp_h2, unit, *c.inst);
    FractionalSolution scaled;
    Rat f = Rat(1) / (Rat(1) - Rat(2) * c.th->eps_sparse);
    for (auto& [v, q] : y.values) scaled.set(v, q * f);
    // inline contract: the scaled point lies in Q_{1+3eps'}(Gamma) and keeps
    // the value floors of the sparsification
    TreePolytope q;
    q.inst = *c.inst;
    q.alpha = Rat(1) + Rat(3) * c.th->eps_sparse;
    q.targets.assign(c.inst->tree.leaves.begin(), c.inst->tree.leaves.end());
    if (!in_polytope(scaled, q)) throw std::logic_error("explore: sparsified point left Q_{1+3eps}");
    return scaled;
}

inline std::optional<FractionalSolution> lp_point(const ExploreCtx& c, const VertexSet& d) {
    TreePolytope p;
    p.inst = *c.inst;
    p.alpha = 1;
    p.targets.assign(c.inst->tree.leaves.begin(), c.inst->tree.leaves.end());
    p.forbidden = d;
    auto x = solve_vertex(p);
    if (x)
        for (int v : d)
            if (x->at(v) != 0) throw std::logic_error("explore: point not zero on D");
    return x;
}

inline std::vector<int> bottom_support(const FractionalSolution& y, const ExploreCtx& c) {
    std::vector<int> s;
    for (auto& [v, q] : y.values)
        if (c.inst->tree.level[v] <= c.h) s.push_back(v);
    return s;
}

// subset masks ordered by (size, value): deterministic, small guesses first
inline std::vector<unsigned long> ordered_masks(size_t n) {
    std::vector<unsigned long> m;
    m.reserve(1ul << n);
    for (unsigned long v = 0; v < (1ul << n); ++v) m.push_back(v);
    std::stable_sort(m.begin(), m.end(), [](unsigned long a, unsigned long b) {
        int pa = __builtin_popcountl(a), pb = __builtin_popcountl(b);
        return pa != pb ? pa < pb : a < b;
    });
    return m;
}

inline void explore_rec(ExploreCtx& c, VertexSet d, Rat depth, std::vector<FractionalSolution> ys);

inline void recurse_guard(ExploreCtx& c, VertexSet d, const Rat& depth,
                          std::vector<FractionalSolution> ys) {
    if (c.truncated && static_cast<long>(c.out.size()) >= c.limits.max_partitions) return;
    explore_rec(c, std::move(d), depth, std::move(ys));
}

inline void explore_rec(ExploreCtx& c, VertexSet d, Rat depth, std::vector<FractionalSolution> ys) {
    ++c.nodes;
    if (c.nodes > c.limits.max_nodes) {
        c.truncated = true;
        return;
    }
    const bool depth_gated = c.variant != ExploreVariant::efficient;
    if (depth_gated && depth <= 0) return;
    if (c.variant == ExploreVariant::basic) {
        auto it = c.basic_seen.find(d);
        if (it != c.basic_seen.end() && it->second >= depth) return;
        c.basic_seen[d] = depth;
    } else {
        std::vector<std::map<int, Rat>> key;
        key.reserve(ys.size());
        for (auto& y : ys) key.push_back(y.values);
        std::sort(key.begin(), key.end());
        auto k = std::make_pair(d, std::move(key));
        auto it = c.state_seen.find(k);
        if (it != c.state_seen.end() && it->second >= depth) return;
        c.state_seen[std::move(k)] = depth;
    }
    auto x = lp_point(c, d);
    if (!x) return;
    auto y = sparsify_for_explore(*x, c);
    const RootedTree& tree = c.inst->tree;

    // with every level at or below the threshold the only partition any
    // execution path can emit is (Gamma, empty): Gamma_top is empty for any
    // averaged point, and the all-empty-guesses path keeps this node's D, so
    // reaching |Y| = N only needs the feasibility already established here
    if (c.variant != ExploreVariant::basic && c.h >= tree.height) {
        Rat need = Rat(c.th->n_mix - static_cast<long>(ys.size()));
        if (!depth_gated || depth >= need) {
            PartitionCandidate pc;
            pc.bot.insert(tree.leaves.begin(), tree.leaves.end());
            c.emit(std::move(pc));
        }
        return;
    }

    auto support = bottom_support(y, c);
    std::sort(support.begin(), support.end());
    if (static_cast<int>(support.size()) > c.limits.max_support_bits) {
        c.truncated = true;
        return;
    }

    if (c.variant == ExploreVariant::efficient) {
        // bulk guessing on levels where the support is dense enough
        std::set<std::pair<VertexSet, Rat>> seen;
        for (int l = 1; l <= c.th->h_hat; ++l) {
            std::vector<int> sl;
            for (int v : support)
                if (tree.level[v] == l) sl.push_back(v);
            if (sl.empty() || Rat(static_cast<long>(sl.size())) > depth) continue;
            Rat need = c.th->eps * c.inst->budgets[l - 1] / Rat(c.th->n_mix);
            Rat zeta_next = depth - Rat(static_cast<long>(sl.size()));
            for (unsigned long mask : ordered_masks(sl.size())) {
                long size = __builtin_popcountl(mask);
                if (Rat(size) < need) continue;
                VertexSet dd = d;
                for (size_t i = 0; i < sl.size(); ++i)
                    if (mask >> i & 1) dd.insert(sl[i]);
                if (!seen.insert({dd, zeta_next}).second) continue;
                recurse_guard(c, std::move(dd), zeta_next, ys);
            }
        }
        ys.push_back(y);
        if (static_cast<long>(ys.size()) == c.th->n_mix) {
            auto avg = mix(ys);
            PartitionCandidate pc;
            pc.top = gamma_top(avg, c.h, c.th->eps, tree);
            for (int leaf : tree.leaves)
                if (!pc.top.count(leaf)) pc.bot.insert(leaf);
            c.emit(std::move(pc));
            return;
        }
        // disjoint (A_top, A_dropped): mask picks the touched vertices, the
        // inner subset sends each touched vertex to one of the two sets
        std::set<VertexSet> seen_d;
        for (unsigned long mask : ordered_masks(support.size())) {
            for (unsigned long sub = mask;; sub = (sub - 1) & mask) {
                VertexSet at, ad;
                for (size_t i = 0; i < support.size(); ++i) {
                    if (!(mask >> i & 1)) continue;
                    if (sub >> i & 1)
                        at.insert(support[i]);
                    else
                        ad.insert(support[i]);
                }
                VertexSet dd = d;
                for (int u : blocked_top(tree, at, c.h)) dd.insert(u);
                for (int u : blocked_dropped(tree, ad, *c.th)) dd.insert(u);
                if (seen_d.insert(dd).second) recurse_guard(c, std::move(dd), depth, ys);
                if (sub == 0) break;
            }
        }
        return;
    }

    // depth-gated variants share one loop over labelled disjoint subsets
    std::set<std::pair<VertexSet, bool>> seen_d;
    const int labels = c.variant == ExploreVariant::basic ? 2
                       : c.variant == ExploreVariant::mixing ? 3
                                                             : 4;
    std::vector<int> assign(support.size(), 0);
    // enumerate label vectors in counting order; label 0 = untouched
    while (true) {
        VertexSet a_core, a_top, a_dropped;
        for (size_t i = 0; i < support.size(); ++i) {
            if (assign[i] == 1) a_core.insert(support[i]);
            if (assign[i] == 2) a_top.insert(support[i]);
            if (assign[i] == 3) a_dropped.insert(support[i]);
        }
        VertexSet dd = d;
        for (int v : a_core) dd.insert(v);
        if (labels >= 3)
            for (int u : blocked_top(tree, a_top, c.h)) dd.insert(u);
        if (labels >= 4)
            for (int u : blocked_dropped(tree, a_dropped, *c.th)) dd.insert(u);

        if (c.variant == ExploreVariant::basic) {
            if (a_core.empty()) {
                try {
                    for (auto& pc : partitions_from_point(y, c.h, *c.inst, c.limits.max_support_bits))
                        if (!c.emit(std::move(pc))) break;
                } catch (const ResourceCap&) {
                    c.truncated = true;
                }
            } else if (seen_d.insert({dd, false}).second) {
                recurse_guard(c, std::move(dd), depth - 1, ys);
            }
        } else {
            auto ys_next = ys;
            if (a_core.empty()) ys_next.push_back(y);
            if (static_cast<long>(ys_next.size()) == c.th->n_mix) {
                auto avg = mix(ys_next);
                PartitionCandidate pc;
                pc.top = gamma_top(avg, c.h, c.th->eps, tree);
                for (int leaf : tree.leaves)
                    if (!pc.top.count(leaf)) pc.bot.insert(leaf);
                c.emit(std::move(pc));
            } else if (seen_d.insert({dd, a_core.empty()}).second) {
                recurse_guard(c, std::move(dd), depth - 1, std::move(ys_next));
            }
        }
        // next labelling
        size_t i = 0;
        while (i < assign.size()) {
            if (++assign[i] < labels) break;
            assign[i] = 0;
            ++i;
        }
        if (i == assign.size()) break;
    }
}

}  // namespace detail

// LP-guided guessing. Emits leaf partitions per the selected variant; the
// result flags truncation whenever a user limit stopped the search early.
inline ExploreResult explore(const SrmfcInstance& inst, const ExploreThresholds& th,
                             ExploreVariant variant, const ExploreLimits& limits = {}) {
    inst.validate();
    detail::ExploreCtx c;
    c.inst = &inst;
    c.th = &th;
    c.variant = variant;
    c.limits = limits;
    c.h = limits.h_override >= 0 ? limits.h_override
          : variant == ExploreVariant::basic ? th.h_check
                                             : th.h_hat;
    Rat depth;
    if (variant == ExploreVariant::efficient) {
        depth = limits.use_zeta_bar ? th.zeta_bar : limits.zeta;
    } else if (limits.gamma >= 0) {
        depth = Rat(limits.gamma);
    } else if (variant == ExploreVariant::basic) {
        // gamma = h*B_{<=h} + 1
        depth = Rat(to_long(rat_ceil(Rat(c.h) * inst.budget_prefix(c.h)))) + 1;
    } else {
        // gamma = h*(1+eps)^h + N
        depth = Rat(to_long(rat_ceil(Rat(c.h) * rat_pow(Rat(1) + th.eps, c.h)))) + Rat(th.n_mix);
    }
    detail::explore_rec(c, {}, depth, {});
    ExploreResult res;
    res.partitions.assign(c.out.begin(), c.out.end());
    res.truncated = c.truncated;
    res.nodes = c.nodes;
    res.eps_out_of_range = th.eps > Rat(1, 7);
    return res;
}

}  // namespace rmfc
