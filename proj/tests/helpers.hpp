#pragma once

#include <vector>

#include "rmfc/lp.hpp"
#include "rmfc/tree.hpp"

namespace rmfc::test {

// T1: root with two children a,b; a has leaves a1,a2; b has leaf b1.
// ids after BFS: r=0, a=1, b=2, a1=3, a2=4, b1=5
inline RootedTree fixture_t1() {
    return build_tree({{0, 1}, {0, 2}, {1, 3}, {1, 4}, {2, 5}}, 0);
}

// P3: path r -> v1 -> v2 -> t (ids 0,1,2,3)
inline RootedTree fixture_p3() {
    return build_tree({{0, 1}, {1, 2}, {2, 3}}, 0);
}

// T2: star, root with three leaf children u1,u2,u3 (ids 1,2,3)
inline RootedTree fixture_t2() {
    return build_tree({{0, 1}, {0, 2}, {0, 3}}, 0);
}

inline SrmfcInstance with_budgets(const RootedTree& t, std::vector<Rat> b) {
    SrmfcInstance inst{t, std::move(b)};
    inst.validate();
    return inst;
}

// Exact rank of the tight-constraint system at x (variables: all non-root
// vertices). A basic feasible point has rank equal to the variable count.
inline int tight_rank(const FractionalSolution& x, const TreePolytope& p) {
    const RootedTree& t = p.inst.tree;
    const int nv = t.n - 1;  // variable for vertex v lives at column v-1
    std::vector<std::vector<Rat>> rows;
    for (int v = 1; v < t.n; ++v)
        if (x.at(v) == 0) {
            std::vector<Rat> r(nv, Rat(0));
            r[v - 1] = 1;
            rows.push_back(std::move(r));
        }
    for (int l = 1; l <= t.height; ++l) {
        if (x.level_prefix(t, l) != p.alpha * p.inst.budget_prefix(l)) continue;
        std::vector<Rat> r(nv, Rat(0));
        for (int v = 1; v < t.n; ++v)
            if (t.level[v] <= l) r[v - 1] = 1;
        rows.push_back(std::move(r));
    }
    for (int tgt : p.targets) {
        if (x.path_sum(t, tgt) != p.delta_of(tgt)) continue;
        std::vector<Rat> r(nv, Rat(0));
        for (int u = tgt; u != 0; u = t.parent[u]) r[u - 1] = 1;
        rows.push_back(std::move(r));
    }
    // gaussian elimination over exact rationals
    int rank = 0;
    for (int col = 0; col < nv && rank < static_cast<int>(rows.size()); ++col) {
        int pivot = -1;
        for (size_t i = rank; i < rows.size(); ++i)
            if (rows[i][col] != 0) {
                pivot = static_cast<int>(i);
                break;
            }
        if (pivot < 0) continue;
        std::swap(rows[rank], rows[pivot]);
        for (size_t i = 0; i < rows.size(); ++i) {
            if (static_cast<int>(i) == rank || rows[i][col] == 0) continue;
            Rat f = rows[i][col] / rows[rank][col];
            for (int j = col; j < nv; ++j) rows[i][j] -= f * rows[rank][j];
        }
        ++rank;
    }
    return rank;
}

inline bool is_vertex_of(const FractionalSolution& x, const TreePolytope& p) {
    return in_polytope(x, p) && tight_rank(x, p) == p.inst.tree.n - 1;
}

}  // namespace rmfc::test

#include "rmfc/generate.hpp"

namespace rmfc::test {

// generate_tree with depth clamped into its legal range
inline SrmfcInstance rand_tree(int n, int depth, int branching, std::uint64_t seed,
                               const TreeGenOptions& opt = {}) {
    depth = std::min(depth, n - 1);
    depth = std::max(depth, 1);
    return generate_tree(n, depth, branching, seed, opt);
}

}  // namespace rmfc::test
