#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "rmfc/error.hpp"
#include "rmfc/rational.hpp"

namespace rmfc {

struct MetricSpace {
    int n = 0;
    std::vector<std::vector<Rat>> dist;

    const Rat& d(int u, int v) const { return dist[u][v]; }

    // silent non-metrics corrupt every guarantee, so this runs at ingestion
    void validate() const {
        if (static_cast<int>(dist.size()) != n) throw MalformedInput("distance matrix size");
        for (int u = 0; u < n; ++u) {
            if (static_cast<int>(dist[u].size()) != n) throw MalformedInput("distance row size");
            if (dist[u][u] != 0) throw MalformedInput("nonzero diagonal");
            for (int v = 0; v < n; ++v) {
                if (dist[u][v] < 0) throw MalformedInput("negative distance");
                if (dist[u][v] != dist[v][u]) throw MalformedInput("asymmetric distance");
            }
        }
        for (int u = 0; u < n; ++u)
            for (int v = 0; v < n; ++v)
                for (int w = 0; w < n; ++w)
                    if (dist[u][w] > dist[u][v] + dist[v][w])
                        throw MalformedInput("non-metric: triangle inequality fails");
    }
};

// (point, level) with 1-based levels
using Pair = std::pair<int, int>;
using PairSet = std::set<Pair>;

struct SnukcInstance {
    MetricSpace space;
    std::vector<Rat> budgets;  // k_1..k_L
    std::vector<Rat> radii;    // r_1 >= r_2 >= ... >= r_L

    int levels() const { return static_cast<int>(budgets.size()); }
    Rat budget_prefix(int l) const { return prefix_sum(budgets, static_cast<size_t>(l)); }

    void validate() const {
        space.validate();
        if (budgets.size() != radii.size()) throw MalformedInput("budget/radius length mismatch");
        if (budgets.empty()) throw MalformedInput("no levels");
        for (auto& k : budgets)
            if (k < 0) throw MalformedInput("negative budget");
        for (size_t i = 0; i < radii.size(); ++i) {
            if (radii[i] < 0) throw MalformedInput("negative radius");
            if (i + 1 < radii.size() && radii[i] < radii[i + 1])
                throw MalformedInput("radii must be non-increasing");
        }
    }
};

// coverage at dilation beta plus the smooth (prefix) or classical
// (per-level) budget check
inline bool is_feasible(const SnukcInstance& inst, const PairSet& c, const Rat& alpha,
                        const Rat& beta, bool smooth) {
    const int big_l = inst.levels();
    std::vector<long> per_level(big_l + 1, 0);
    for (auto& [v, l] : c) {
        if (l < 1 || l > big_l || v < 0 || v >= inst.space.n) return false;
        per_level[l]++;
    }
    if (smooth) {
        long run = 0;
        for (int l = 1; l <= big_l; ++l) {
            run += per_level[l];
            if (Rat(run) > alpha * inst.budget_prefix(l)) return false;
        }
    } else {
        for (int l = 1; l <= big_l; ++l)
            if (Rat(per_level[l]) > alpha * inst.budgets[l - 1]) return false;
    }
    for (int v = 0; v < inst.space.n; ++v) {
        bool covered = false;
        for (auto& [u, l] : c)
            if (inst.space.d(u, v) <= beta * inst.radii[l - 1]) {
                covered = true;
                break;
            }
        if (!covered) return false;
    }
    return true;
}

// smallest dilation at which C covers everything; nullopt when some point
// sees no center at all (only possible with zero radii)
inline std::optional<Rat> measured_dilation(const SnukcInstance& inst, const PairSet& c) {
    Rat best(0);
    for (int v = 0; v < inst.space.n; ++v) {
        std::optional<Rat> need;
        for (auto& [u, l] : c) {
            const Rat& r = inst.radii[l - 1];
            if (inst.space.d(u, v) == 0) {
                need = Rat(0);
                break;
            }
            if (r == 0) continue;
            Rat q = inst.space.d(u, v) / r;
            if (!need || q < *need) need = q;
        }
        if (!need) return std::nullopt;
        best = rat_max(best, *need);
    }
    return best;
}

inline Rat measured_budget_stretch(const SnukcInstance& inst, const PairSet& c) {
    const int big_l = inst.levels();
    std::vector<long> per_level(big_l + 1, 0);
    for (auto& [v, l] : c) per_level[l]++;
    Rat best(0);
    long run = 0;
    for (int l = 1; l <= big_l; ++l) {
        run += per_level[l];
        Rat pref = inst.budget_prefix(l);
        if (run > 0 && pref == 0) throw PreconditionViolated("centers above zero budget prefix");
        if (pref > 0) {
            Rat q = Rat(run) / pref;
            best = rat_max(best, q);
        }
    }
    return best;
}

// Prefix-to-per-level conversion: prefix-feasible center multiplicities are
// rebalanced to per-level counts ceil(alpha*k_l) by promoting centers to
// earlier (larger-radius) levels; coverage only improves.
inline PairSet flatten_budgets(const SnukcInstance& inst, const PairSet& c_in, const Rat& alpha) {
    const int big_l = inst.levels();
    std::vector<long> cap(big_l + 1, 0), cnt(big_l + 1, 0);
    for (int l = 1; l <= big_l; ++l) cap[l] = to_long(rat_ceil(alpha * inst.budgets[l - 1]));
    std::vector<std::vector<int>> at(big_l + 1);
    for (auto& [v, l] : c_in) {
        cnt[l]++;
        at[l].push_back(v);
    }
    {
        long run_c = 0;
        Rat run_cap(0);
        for (int l = 1; l <= big_l; ++l) {
            run_c += cnt[l];
            run_cap += Rat(cap[l]);
            if (Rat(run_c) > run_cap)
                throw PreconditionViolated("flatten_budgets: prefix condition fails");
        }
    }
    while (true) {
        int over = -1;
        for (int l = 1; l <= big_l && over < 0; ++l)
            if (cnt[l] > cap[l]) over = l;
        if (over < 0) break;
        int under = -1;
        for (int l = 1; l < over && under < 0; ++l)
            if (cnt[l] < cap[l]) under = l;
        if (under < 0) throw std::logic_error("flatten_budgets: no slack below an overfull level");
        int v = at[over].back();
        at[over].pop_back();
        cnt[over]--;
        at[under].push_back(v);
        cnt[under]++;
    }
    PairSet out;
    for (int l = 1; l <= big_l; ++l)
        for (int v : at[l]) out.insert({v, l});
    return out;
}

// all ratios distance/radius; the optimal dilation is one of them
inline std::vector<Rat> beta_candidates(const SnukcInstance& inst) {
    std::set<Rat> cand;
    for (int u = 0; u < inst.space.n; ++u)
        for (int v = u + 1; v < inst.space.n; ++v)
            for (int l = 1; l <= inst.levels(); ++l)
                if (inst.radii[l - 1] > 0) cand.insert(inst.space.d(u, v) / inst.radii[l - 1]);
    return {cand.begin(), cand.end()};
}

struct ExhaustiveNukcResult {
    bool feasible = false;
    Rat beta = Rat(0);
    PairSet witness;
};

// Brute-force optimal dilation over integral center multiplicities that
// respect the floored prefix budgets (prefix-feasible sets normalize to the
// per-level caps by promotion, so filling the caps is exhaustive).
inline ExhaustiveNukcResult exhaustive_nukc(const SnukcInstance& inst, int point_guard = 10) {
    inst.validate();
    const int n = inst.space.n, big_l = inst.levels();
    if (n > point_guard) throw ResourceCap("exhaustive_nukc: too many points");
    std::vector<long> cap(big_l + 1, 0);
    {
        Int prev = 0;
        for (int l = 1; l <= big_l; ++l) {
            Int cur = rat_floor(inst.budget_prefix(l));
            cap[l] = to_long(cur - prev) > n ? n : to_long(cur - prev);
            prev = cur;
        }
    }
    long total = 0;
    for (int l = 1; l <= big_l; ++l) total += cap[l];
    if (total > 8 || big_l > 4) throw ResourceCap("exhaustive_nukc: center budget too large");

    ExhaustiveNukcResult best;
    PairSet current;
    // per level, all point subsets of size exactly min(cap, n): opening more
    // centers never hurts coverage, so maximal choices are exhaustive
    std::vector<std::vector<std::vector<int>>> level_choices(big_l + 1);
    for (int l = 1; l <= big_l; ++l) {
        long want = std::min<long>(cap[l], n);
        std::vector<std::vector<int>> subs;
        std::vector<int> pick;
        std::function<void(int)> rec = [&](int from) {
            if (static_cast<long>(pick.size()) == want) {
                subs.push_back(pick);
                return;
            }
            if (from == n || n - from < want - static_cast<long>(pick.size())) return;
            pick.push_back(from);
            rec(from + 1);
            pick.pop_back();
            rec(from + 1);
        };
        rec(0);
        level_choices[l] = std::move(subs);
    }
    std::function<void(int)> walk = [&](int l) {
        if (l > big_l) {
            if (current.empty()) return;
            auto beta = measured_dilation(inst, current);
            if (!beta) return;
            if (!best.feasible || *beta < best.beta ||
                (*beta == best.beta && current < best.witness)) {
                best.feasible = true;
                best.beta = *beta;
                best.witness = current;
            }
            return;
        }
        for (auto& sub : level_choices[l]) {
            for (int v : sub) current.insert({v, l});
            walk(l + 1);
            for (int v : sub) current.erase({v, l});
        }
    };
    walk(1);
    return best;
}

}  // namespace rmfc
