#pragma once

#include <random>
#include <vector>

#include "rmfc/error.hpp"
#include "rmfc/tree.hpp"

namespace rmfc {

// All generators run on std::mt19937_64 (a fully specified engine) with
// explicit rejection sampling, so a seed pins the instance on any platform.
struct Rng {
    std::mt19937_64 eng;
    explicit Rng(std::uint64_t seed) : eng(seed) {}

    // uniform integer in [0, bound)
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw ParameterOutOfRange("rng bound 0");
        std::uint64_t limit = ~0ull - (~0ull % bound);
        while (true) {
            std::uint64_t v = eng();
            if (v < limit) return v % bound;
        }
    }
    long range(long lo, long hi) {  // inclusive
        return lo + static_cast<long>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }
    bool coin() { return below(2) == 1; }
};

struct TreeGenOptions {
    long budget_num_max = 3;  // budgets uniform over {0, 1/d, 2/d, ..} up to this value
    long budget_den_max = 3;
    bool allow_zero_budget = true;
};

// Uniform random attachment tree: a forced spine realizes the requested
// depth, every further vertex attaches to a uniform existing vertex with
// level < depth (respecting the branching cap).
inline SrmfcInstance generate_tree(int n, int depth, int branching, std::uint64_t seed,
                                   const TreeGenOptions& opt = {}) {
    if (n < 2 || depth < 1 || depth > n - 1 || branching < 1)
        throw ParameterOutOfRange("generate_tree: need n >= 2, 1 <= depth <= n-1, branching >= 1");
    Rng rng(seed);
    SrmfcInstance inst;
    RootedTree& t = inst.tree;
    t.n = n;
    t.parent.assign(n, -1);
    t.children.assign(n, {});
    t.level.assign(n, 0);
    t.label.assign(n, 0);
    for (int v = 0; v < n; ++v) t.label[v] = v;
    for (int v = 1; v <= depth; ++v) {
        t.parent[v] = v - 1;
        t.children[v - 1].push_back(v);
        t.level[v] = v;
    }
    for (int v = depth + 1; v < n; ++v) {
        std::vector<int> hosts;
        for (int u = 0; u < v; ++u)
            if (t.level[u] < depth &&
                static_cast<int>(t.children[u].size()) < branching + (u == 0 ? 1 : 0))
                hosts.push_back(u);
        if (hosts.empty()) hosts.push_back(0);
        int p = hosts[rng.below(hosts.size())];
        t.parent[v] = p;
        t.children[p].push_back(v);
        t.level[v] = t.level[p] + 1;
    }
    for (auto& c : t.children) std::sort(c.begin(), c.end());
    t.height = depth;
    for (int v = 1; v < n; ++v)
        if (t.children[v].empty()) t.leaves.push_back(v);

    for (int l = 0; l < depth; ++l) {
        long den = rng.range(1, opt.budget_den_max);
        long lo = opt.allow_zero_budget ? 0 : 1;
        long num = rng.range(lo, opt.budget_num_max * den);
        inst.budgets.emplace_back(num, den);
        inst.budgets.back().canonicalize();
    }
    return inst;
}

}  // namespace rmfc

#include "rmfc/metric.hpp"

namespace rmfc {

enum class MetricKind { line, plane, closure };

// Line/plane instances take l1 distances of random integer coordinates;
// closure instances repair a random symmetric matrix into a metric via its
// min-plus closure. Radii are sorted non-increasing.
inline SnukcInstance generate_metric(int n, MetricKind kind, int levels, std::uint64_t seed) {
    if (n < 1 || levels < 1) throw ParameterOutOfRange("generate_metric: n >= 1, levels >= 1");
    Rng rng(seed);
    SnukcInstance inst;
    inst.space.n = n;
    auto& d = inst.space.dist;
    d.assign(n, std::vector<Rat>(n, Rat(0)));
    if (kind == MetricKind::closure) {
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v) d[u][v] = d[v][u] = Rat(rng.range(1, 20));
        for (int w = 0; w < n; ++w)
            for (int u = 0; u < n; ++u)
                for (int v = 0; v < n; ++v) {
                    Rat via = d[u][w] + d[w][v];
                    if (via < d[u][v]) d[u][v] = via;
                }
    } else {
        int dims = kind == MetricKind::line ? 1 : 2;
        std::vector<std::vector<long>> pt(n, std::vector<long>(dims));
        for (auto& p : pt)
            for (auto& c : p) c = rng.range(0, 4 * n);
        for (int u = 0; u < n; ++u)
            for (int v = 0; v < n; ++v) {
                long s = 0;
                for (int j = 0; j < dims; ++j) s += std::abs(pt[u][j] - pt[v][j]);
                d[u][v] = Rat(s);
            }
    }
    std::vector<Rat> radii;
    for (int l = 0; l < levels; ++l) radii.push_back(make_rat(rng.range(1, 6 * n), 2));
    std::sort(radii.rbegin(), radii.rend());
    inst.radii = std::move(radii);
    for (int l = 0; l < levels; ++l) {
        long den = rng.range(1, 2);
        inst.budgets.push_back(make_rat(rng.range(l == 0 ? den : 0, 2 * den), den));
    }
    if (inst.budgets[0] < 1) inst.budgets[0] = 1;
    inst.validate();
    return inst;
}

}  // namespace rmfc
