#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <tuple>
#include <optional>
#include <vector>

#include "rmfc/nukc_compress.hpp"
#include "rmfc/nukc_lp.hpp"

namespace rmfc {

struct NukcThresholds {
    Rat eps;
    int h_hat = 0, h_check = 0;
    Rat rho, sigma;
    long lambda_eps = 1;
    long kappa = 0, kappa2 = 0, mu = 2, n_mix = 0;
    Rat zeta_bar;
    // sparsification parameters, clamped to the proven range
    Rat eps_sparse;
    int sp_h_hat = 0, sp_h_check = 0;
    long lambda_sparse = 1;
};

inline long smallest_lambda(const Rat& eps) {
    // least lambda with 1 + 2/(1 - 2(1+eps)^-lambda) <= 3 + eps/2, i.e.
    // (1+eps)^lambda >= (8+2eps)/eps
    const Rat need = (Rat(8) + Rat(2) * eps) / eps;
    long lambda = 1;
    while (rat_pow(Rat(1) + eps, lambda) < need) ++lambda;
    return lambda;
}

inline NukcThresholds nukc_thresholds(const Rat& eps, const SnukcInstance& inst) {
    if (eps <= 0 || eps > Rat(1, 2)) throw ParameterOutOfRange("nukc_thresholds: 0 < eps <= 1/2");
    inst.validate();
    const int big_l = inst.levels();
    NukcThresholds th;
    th.eps = eps;
    th.rho = Rat(15) + Rat(6) * eps;
    th.sigma = Rat(3) + eps;
    th.lambda_eps = smallest_lambda(eps);
    th.n_mix = to_long(rat_ceil(Rat(3) / eps));
    const Rat base = Rat(1) + eps;
    th.kappa = std::max(ceil_log(base, Rat(4) * th.sigma / eps),
                        2 * ceil_log(base, Rat(4) * th.sigma + 2));
    th.kappa2 = ceil_log(base, Rat(2) * th.sigma / eps);
    auto scan = [&](const Rat& need) {
        for (int h = 0; h < big_l; ++h)
            if (inst.budgets[h] >= need) return h;
        return big_l;
    };
    th.h_hat = scan(Rat(big_l) / eps);
    th.h_check = std::min(scan(Rat(th.h_hat) / eps), th.h_hat);
    th.zeta_bar = Rat(4) * Rat(th.n_mix) * Rat(th.lambda_eps) / rat_pow(eps, 5) *
                  (Rat(th.h_check) * Rat(th.h_check) * Rat(th.h_hat) +
                   Rat(3) * Rat(th.kappa) * Rat(big_l));

    th.eps_sparse = rat_min(eps, Rat(1, 7));
    th.lambda_sparse = smallest_lambda(th.eps_sparse);
    th.sp_h_hat = scan(Rat(big_l) / th.eps_sparse);
    th.sp_h_check = std::min(scan(Rat(th.sp_h_hat) / th.eps_sparse), th.sp_h_hat);
    return th;
}

// Coverage DP: smallest-prefix-budget center sets, per-level caps from the
// floored budget prefixes, coverage targets a pair set S ("covered" means a
// center at the same or an earlier level within beta times its radius).
struct DpCoverLimits {
    int max_points = 12;
    int max_targets = 30;
    long max_states = 400000;
};

inline std::optional<PairSet> dp_cover(const SnukcInstance& inst, const std::vector<Pair>& s,
                                       const Rat& beta, const DpCoverLimits& limits = {}) {
    inst.validate();
    const int n = inst.space.n, big_l = inst.levels();
    if (n > limits.max_points) throw ResourceCap("dp_cover: too many candidate points");
    if (static_cast<int>(s.size()) > limits.max_targets) throw ResourceCap("dp_cover: too many targets");
    std::vector<long> cap(big_l + 1, 0);
    {
        Int prev = 0;
        for (int l = 1; l <= big_l; ++l) {
            Int cur = rat_floor(inst.budget_prefix(l));
            cap[l] = std::min<long>(to_long(cur - prev), n);
            prev = cur;
        }
    }
    using Mask = unsigned long long;
    auto cover_mask = [&](int v, int l) {
        Mask m = 0;
        for (size_t i = 0; i < s.size(); ++i)
            if (l <= s[i].second && inst.space.d(v, s[i].first) <= beta * inst.radii[l - 1])
                m |= Mask(1) << i;
        return m;
    };
    const Mask full = s.empty() ? 0 : (s.size() == 64 ? ~0ull : (Mask(1) << s.size()) - 1);
    std::map<Mask, PairSet> states{{0, {}}};
    for (int l = big_l; l >= 1; --l) {
        if (cap[l] == 0) continue;
        // all point subsets of size exactly min(cap, n); more centers never
        // cover less
        long want = std::min<long>(cap[l], n);
        std::vector<std::pair<Mask, std::vector<int>>> choices;
        std::vector<int> pick;
        std::function<void(int)> rec = [&](int from) {
            if (static_cast<long>(pick.size()) == want) {
                Mask m = 0;
                for (int v : pick) m |= cover_mask(v, l);
                choices.push_back({m, pick});
                return;
            }
            if (from == n || n - from < want - static_cast<long>(pick.size())) return;
            pick.push_back(from);
            rec(from + 1);
            pick.pop_back();
            rec(from + 1);
        };
        rec(0);
        // spending nothing on this level keeps the old states; richer
        // choices only register masks not seen yet
        std::map<Mask, PairSet> next = states;
        for (auto& [m, witness] : states)
            for (auto& [cm, pts] : choices) {
                Mask nm = m | cm;
                if (next.count(nm)) continue;
                PairSet w = witness;
                for (int v : pts) w.insert({v, l});
                next[nm] = std::move(w);
                if (static_cast<long>(next.size()) > limits.max_states)
                    throw ResourceCap("dp_cover: state table too large");
            }
        states = std::move(next);
    }
    auto hit = states.find(full);
    if (hit == states.end()) return std::nullopt;
    return hit->second;
}

inline PairSet ball_pairs(const SnukcInstance& inst, int center, int level, const Rat& radius) {
    PairSet out;
    for (int u = 0; u < inst.space.n; ++u)
        if (inst.space.d(u, center) <= radius) out.insert({u, level});
    return out;
}

// pairs that can no longer be opened once a guess is committed
inline PairSet blocked_thin(const SnukcInstance& inst, const PairSet& a, const Rat& sigma) {
    PairSet out;
    for (auto& [v, l] : a)
        for (auto& p : ball_pairs(inst, v, l, Rat(4) * sigma * inst.radii[l - 1])) out.insert(p);
    return out;
}

inline PairSet blocked_small(const SnukcInstance& inst, const PairSet& a, const Rat& sigma, int h_hat) {
    PairSet out;
    for (auto& [v, l] : a)
        for (int lp = 1; lp <= h_hat; ++lp)
            for (auto& p :
                 ball_pairs(inst, v, lp, sigma * (inst.radii[l - 1] + inst.radii[lp - 1])))
                out.insert(p);
    return out;
}

inline PairSet blocked_sep(const SnukcInstance& inst, const PairSet& a, const NukcThresholds& th) {
    PairSet out;
    for (auto& [v, l] : a) {
        int hi = l <= th.h_check ? th.h_check
                                 : static_cast<int>(std::min<long>(th.h_hat, l + th.kappa));
        for (int lp = 1; lp <= hi; ++lp)
            for (auto& p :
                 ball_pairs(inst, v, lp, th.sigma * (inst.radii[l - 1] + inst.radii[lp - 1])))
                out.insert(p);
    }
    return out;
}

struct NukcExploreLimits {
    long max_nodes = 4000;
    long max_solutions = 8;
    int max_support_bits = 10;
    bool use_zeta_bar = true;
    Rat zeta = Rat(0);
    DpCoverLimits dp;
};

struct NukcExploreResult {
    std::vector<PairSet> solutions;  // each verified coverage-complete
    bool truncated = false;
    bool eps_out_of_range = false;
    long nodes = 0;
};

namespace detail {

struct NukcCtx {
    const SnukcInstance* inst;
    const NukcThresholds* th;
    NukcExploreLimits limits;
    std::vector<PairSet> out;
    bool truncated = false;
    long nodes = 0;
};

inline std::vector<char> covered_by(const SnukcInstance& inst, const PairSet& c, const Rat& rho) {
    std::vector<char> cov(inst.space.n, 0);
    for (auto& [v, l] : c)
        for (int u = 0; u < inst.space.n; ++u)
            if (inst.space.d(u, v) <= rho * inst.radii[l - 1]) cov[u] = 1;
    return cov;
}

inline void explore_nukc_rec(NukcCtx& c, PairSet cset, PairSet d, Rat zeta,
                             std::vector<PairSolution> ys, PairSet a_dp) {
    ++c.nodes;
    if (c.nodes > c.limits.max_nodes) {
        c.truncated = true;
        return;
    }
    if (static_cast<long>(c.out.size()) >= c.limits.max_solutions) return;
    const SnukcInstance& inst = *c.inst;
    const NukcThresholds& th = *c.th;
    auto vc = covered_by(inst, cset, th.rho);
    std::vector<int> uncovered;
    for (int v = 0; v < inst.space.n; ++v)
        if (!vc[v]) uncovered.push_back(v);
    auto x = solve_vertex_nukc(inst, 1, Rat(1), uncovered, cset, d);
    if (!x) return;
    PairSolution y;
    try {
        auto sp = sparsify_nukc(inst, *x, th.eps_sparse, th.lambda_sparse, uncovered, th.sp_h_hat,
                                th.sp_h_check);
        y = sp.y;
    } catch (const PreconditionViolated&) {
        c.truncated = true;
        return;
    }
    // drop pairs whose sigma-ball is already fully committed
    {
        std::vector<Pair> gone;
        for (auto& [p, q] : y.values) {
            bool outside = false;
            for (int u = 0; u < inst.space.n && !outside; ++u)
                if (!vc[u] && inst.space.d(u, p.first) <= th.sigma * inst.radii[p.second - 1])
                    outside = true;
            if (!outside) gone.push_back(p);
        }
        for (auto& p : gone) y.values.erase(p);
    }

    // bulk guessing on dense levels
    std::set<std::pair<PairSet, PairSet>> seen_heavy;
    for (int l = 1; l <= th.h_hat; ++l) {
        std::vector<Pair> sl;
        for (auto& [p, q] : y.values)
            if (p.second == l) sl.push_back(p);
        if (sl.empty() || Rat(static_cast<long>(sl.size())) > zeta) continue;
        if (static_cast<int>(sl.size()) > c.limits.max_support_bits) {
            c.truncated = true;
            continue;
        }
        Rat need = th.eps * inst.budgets[l - 1] / Rat(th.n_mix);
        Rat zeta_next = zeta - Rat(static_cast<long>(sl.size()));
        for (unsigned long mask = 0; mask < (1ul << sl.size()); ++mask) {
            long size = __builtin_popcountl(mask);
            if (Rat(size) < need) continue;
            // each guessed pair is either committed or blocked with its
            // whole 4-sigma neighbourhood
            for (unsigned long sub = mask;; sub = (sub - 1) & mask) {
                PairSet into_c, into_d;
                for (size_t i = 0; i < sl.size(); ++i) {
                    if (!(mask >> i & 1)) continue;
                    if (sub >> i & 1)
                        into_c.insert(sl[i]);
                    else
                        into_d.insert(sl[i]);
                }
                PairSet c2 = cset, d2 = d;
                for (auto& p : into_c) c2.insert(p);
                for (auto& p : blocked_thin(inst, into_d, th.sigma)) d2.insert(p);
                if (seen_heavy.insert({c2, d2}).second)
                    explore_nukc_rec(c, std::move(c2), std::move(d2), zeta_next, ys, a_dp);
                if (sub == 0) break;
            }
        }
    }

    ys.push_back(y);
    if (static_cast<long>(ys.size()) == th.n_mix) {
        // assemble: committed centers, a DP cover for the flagged pairs, and
        // a small-radii rounding for everything essentially covered above
        PairSolution ybar;
        {
            Rat inv = Rat(1) / Rat(th.n_mix);
            for (auto& yy : ys)
                for (auto& [p, q] : yy.values) ybar.set(p, ybar.at(p) + q * inv);
        }
        std::vector<Pair> a_final;
        for (auto& [v, l] : a_dp) {
            bool outside = false;
            for (int u = 0; u < inst.space.n && !outside; ++u)
                if (!vc[u] && inst.space.d(u, v) <= th.sigma * inst.radii[l - 1]) outside = true;
            if (outside && l <= th.h_hat) a_final.push_back({v, l});
        }
        PairSet c_big;
        if (!a_final.empty()) {
            std::set<int> pts;
            for (auto& [v, l] : a_dp) pts.insert(v);
            std::vector<int> id_of(inst.space.n, -1), point_of;
            for (int v : pts) {
                id_of[v] = static_cast<int>(point_of.size());
                point_of.push_back(v);
            }
            SnukcInstance sub;
            sub.space.n = static_cast<int>(point_of.size());
            sub.space.dist.assign(sub.space.n, std::vector<Rat>(sub.space.n, Rat(0)));
            for (int a = 0; a < sub.space.n; ++a)
                for (int b = 0; b < sub.space.n; ++b)
                    sub.space.dist[a][b] = inst.space.d(point_of[a], point_of[b]);
            std::vector<long> committed_at(inst.levels() + 1, 0);
            for (auto& [v, l] : cset) committed_at[l]++;
            for (int l = 1; l <= th.h_hat; ++l) {
                Rat adjusted = inst.budgets[l - 1] - Rat(committed_at[l]) +
                               Rat(2) * th.eps * inst.budgets[l - 1];
                sub.budgets.push_back(rat_max(adjusted, Rat(0)));
                sub.radii.push_back(inst.radii[l - 1]);
            }
            std::vector<Pair> s_local;
            for (auto& [v, l] : a_final) s_local.push_back({id_of[v], l});
            std::optional<PairSet> got;
            try {
                got = dp_cover(sub, s_local, Rat(4) * th.sigma, c.limits.dp);
            } catch (const ResourceCap&) {
                c.truncated = true;
                return;
            }
            if (!got) return;  // this execution path cannot certify a cover
            for (auto& [v, l] : *got) c_big.insert({point_of[v], l});
        }
        PairSet c_small;
        if (th.h_hat < inst.levels()) {
            std::vector<int> small_pts;
            for (int v = 0; v < inst.space.n; ++v) {
                Rat cov(0);
                for (auto& [p, q] : ybar.values)
                    if (p.second > th.h_hat &&
                        inst.space.d(p.first, v) <= inst.radii[p.second - 1])
                        cov += q;
                if (cov >= Rat(1) - th.eps) small_pts.push_back(v);
            }
            if (!small_pts.empty()) {
                SnukcInstance sub;
                sub.space = inst.space;
                for (int l = th.h_hat + 1; l <= inst.levels(); ++l) {
                    sub.budgets.push_back(inst.budgets[l - 1]);
                    sub.radii.push_back(inst.radii[l - 1]);
                }
                PairSolution xs;
                Rat scale = Rat(1) / (Rat(1) - th.eps);
                for (auto& [p, q] : ybar.values)
                    if (p.second > th.h_hat) xs.set({p.first, p.second - th.h_hat}, q * scale);
                Rat alpha_small(0);
                for (int l = 1; l <= sub.levels(); ++l) {
                    Rat pref = sub.budget_prefix(l);
                    if (pref > 0) {
                        Rat q = xs.prefix(l) / pref;
                        alpha_small = rat_max(alpha_small, q);
                    }
                }
                std::optional<PairSet> got;
                try {
                    got = round_small_radii(sub, xs, th.eps, alpha_small, Rat(1), small_pts);
                } catch (const PreconditionViolated&) {
                    got = std::nullopt;
                }
                if (!got) return;
                for (auto& [v, l] : *got) c_small.insert({v, l + th.h_hat});
            }
        }
        PairSet all = cset;
        for (auto& p : c_big) all.insert(p);
        for (auto& p : c_small) all.insert(p);
        if (measured_dilation(inst, all)) c.out.push_back(std::move(all));
        return;
    }

    // light iteration: label every bottom support pair
    std::vector<Pair> support;
    for (auto& [p, q] : y.values)
        if (p.second <= th.h_hat) support.push_back(p);
    if (static_cast<int>(support.size()) > c.limits.max_support_bits) {
        c.truncated = true;
        return;
    }
    std::set<std::tuple<PairSet, PairSet, PairSet>> seen;
    std::vector<int> label(support.size(), 0);  // 0 = toward the DP, 1 = small, 2 = sep, 3 = big
    while (true) {
        PairSet a_dp_new = a_dp, a_small, a_sep, a_big;
        for (size_t i = 0; i < support.size(); ++i) {
            switch (label[i]) {
                case 0: a_dp_new.insert(support[i]); break;
                case 1: a_small.insert(support[i]); break;
                case 2: a_sep.insert(support[i]); break;
                default: a_big.insert(support[i]);
            }
        }
        PairSet d2 = d;
        for (auto& p : blocked_small(inst, a_small, th.sigma, th.h_hat)) d2.insert(p);
        for (auto& p : blocked_sep(inst, a_sep, th)) d2.insert(p);
        // close-by guesses for the big side: subsets and level offsets
        std::vector<Pair> bigs(a_big.begin(), a_big.end());
        std::function<void(size_t, PairSet)> pick = [&](size_t i, PairSet c2) {
            if (i == bigs.size()) {
                if (seen.insert({c2, d2, a_dp_new}).second)
                    explore_nukc_rec(c, c2, d2, zeta, ys, a_dp_new);
                return;
            }
            pick(i + 1, c2);  // not committed
            auto [v, l] = bigs[i];
            long lim = std::min<long>(th.kappa2, l - 1);
            for (long f = 1; f <= lim; ++f) {
                PairSet c3 = c2;
                c3.insert({v, static_cast<int>(l - f)});
                pick(i + 1, std::move(c3));
            }
        };
        pick(0, cset);
        size_t i = 0;
        while (i < label.size()) {
            if (++label[i] < 4) break;
            label[i] = 0;
            ++i;
        }
        if (i == label.size()) break;
        if (c.truncated && static_cast<long>(c.out.size()) >= c.limits.max_solutions) break;
    }
}

}  // namespace detail

inline NukcExploreResult explore_nukc(const SnukcInstance& inst, const NukcThresholds& th,
                                      const NukcExploreLimits& limits = {}) {
    inst.validate();
    detail::NukcCtx c;
    c.inst = &inst;
    c.th = &th;
    c.limits = limits;
    Rat zeta = limits.use_zeta_bar ? th.zeta_bar : limits.zeta;
    detail::explore_nukc_rec(c, {}, {}, zeta, {}, {});
    NukcExploreResult res;
    res.solutions = std::move(c.out);
    res.truncated = c.truncated;
    res.nodes = c.nodes;
    res.eps_out_of_range = th.eps > Rat(1, 7);
    return res;
}

struct NukcSolution {
    PairSet centers;
    Rat alpha = Rat(0);  // measured prefix-budget stretch
    Rat beta = Rat(0);   // measured dilation against the original radii
    bool found = false;
    bool truncated = false;
    long nodes = 0;
    Rat guess = Rat(0);
};

// End-to-end SNUkC: guesses the optimal dilation among the distance/radius
// ratios, folds it into the radii, compresses, explores, lifts, and returns
// the first guess that produces a verified solution.
inline NukcSolution solve_snukc(const SnukcInstance& inst, const Rat& eps,
                                const NukcExploreLimits& limits = {}) {
    inst.validate();
    NukcSolution out;
    if (inst.space.n == 1) {
        for (int l = 1; l <= inst.levels(); ++l)
            if (rat_floor(inst.budget_prefix(l)) >= 1) {
                out.centers = {{0, l}};
                out.found = true;
                out.alpha = measured_budget_stretch(inst, out.centers);
                return out;
            }
        return out;
    }
    for (const Rat& guess : beta_candidates(inst)) {
        SnukcInstance scaled = inst;
        for (auto& r : scaled.radii) r *= guess;
        int dropped = 0;
        while (!scaled.budgets.empty() && scaled.budgets[0] < 1) {
            if (scaled.levels() < 2) break;
            scaled.budgets[1] += scaled.budgets[0];
            scaled.budgets.erase(scaled.budgets.begin());
            scaled.radii.erase(scaled.radii.begin());
            ++dropped;
        }
        if (scaled.budgets.empty() || scaled.budgets[0] < 1) continue;
        NukcCompressed comp;
        try {
            comp = compress_nukc(scaled, eps);
        } catch (const PreconditionViolated&) {
            continue;
        }
        auto th = nukc_thresholds(eps, comp.inst);
        auto ex = explore_nukc(comp.inst, th, limits);
        out.truncated = out.truncated || ex.truncated;
        out.nodes += ex.nodes;
        std::optional<NukcSolution> best;
        for (auto& sol : ex.solutions) {
            PairSet lifted;
            for (auto& [v, l] : comp.lift(sol)) lifted.insert({v, l + dropped});
            auto beta = measured_dilation(inst, lifted);
            if (!beta) continue;
            NukcSolution cand;
            cand.centers = lifted;
            cand.alpha = measured_budget_stretch(inst, lifted);
            cand.beta = *beta;
            cand.found = true;
            cand.guess = guess;
            if (!best || cand.beta < best->beta ||
                (cand.beta == best->beta && cand.alpha < best->alpha))
                best = cand;
        }
        if (best) {
            best->truncated = out.truncated;
            best->nodes = out.nodes;
            return *best;
        }
    }
    return out;
}

}  // namespace rmfc
