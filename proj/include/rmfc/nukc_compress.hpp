#pragma once

#include <vector>

#include "rmfc/metric.hpp"

namespace rmfc {

// epsilon-compressed metric instance. Every compressed level stores its
// provenance: the original levels whose (rounded) radius hosts it, one per
// merged block, each entitled to the original prefix budget ending there.
// Lifting spreads a level's centers across these hosts earliest-fit under
// (1+eps)-stretched original prefixes; rounded radii exceed the originals by
// at most (1+eps), so an (alpha, beta)-feasible compressed solution lifts to
// a ((1+eps)alpha, (1+eps)beta)-feasible one.
struct NukcCompressed {
    SnukcInstance inst;
    Rat eps;
    std::vector<std::vector<int>> provenance;  // per compressed level: original levels, ascending
    std::vector<Rat> orig_prefix;              // k_{<=j} of the input instance, 1-based

    PairSet lift(const PairSet& c) const {
        Rat alpha = measured_budget_stretch(inst, c);
        Rat target = (Rat(1) + eps) * alpha;
        PairSet out;
        long placed = 0;
        for (int l = 1; l <= inst.levels(); ++l) {
            const auto& hosts = provenance[static_cast<size_t>(l) - 1];
            size_t slot = 0;
            for (auto& [v, cl] : c) {
                if (cl != l) continue;
                while (slot + 1 < hosts.size() &&
                       Rat(placed + 1) > target * orig_prefix[static_cast<size_t>(hosts[slot])])
                    ++slot;
                if (Rat(placed + 1) > target * orig_prefix[static_cast<size_t>(hosts[slot])])
                    throw std::logic_error("nukc lift: provenance budget exhausted");
                out.insert({v, hosts[slot]});
                ++placed;
            }
        }
        return out;
    }
};

inline NukcCompressed compress_nukc(const SnukcInstance& in, const Rat& eps, int h = -1) {
    in.validate();
    if (eps <= 0) throw ParameterOutOfRange("compress_nukc: eps > 0");
    if (in.budgets.empty() || in.budgets[0] < 1)
        throw PreconditionViolated("compress_nukc: k_1 >= 1 required");
    const int big_l = in.levels();
    if (h < 0) h = big_l;
    const Rat base = Rat(1) + eps;

    struct Item {
        Rat k;
        Rat r;
        int orig;
    };
    std::vector<Item> items;
    for (int l = 1; l <= big_l; ++l) {
        Rat r = in.radii[l - 1];
        if (l <= h && r > 0) r = rat_pow(base, ceil_log(base, r));  // round up to a power
        items.push_back({in.budgets[l - 1], r, l});
    }
    Rat total(0);
    for (auto& it : items) total += it.k;
    const long lp = ceil_log(base, total) + 1;
    items.back().k += rat_pow(base, lp - 1) - total;

    // split levels so every boundary (1+eps)^{m-1} falls between items
    for (long m = lp - 1; m >= 1; --m) {
        Rat target = rat_pow(base, m - 1);
        Rat pref(0);
        for (size_t i = 0; i < items.size(); ++i) {
            Rat before = pref;
            pref += items[i].k;
            if (pref > target && before < target) {
                Item upper = items[i];
                upper.k = pref - target;
                items[i].k = target - before;
                items.insert(items.begin() + static_cast<long>(i) + 1, upper);
                break;
            }
            if (pref >= target) break;
        }
    }
    // push each block's budget onto its first item
    std::vector<Item> blocks;
    {
        Rat pref(0);
        long next = 1;
        size_t i = 0;
        while (i < items.size()) {
            Item head = items[i];
            Rat acc(0);
            Rat boundary = rat_pow(base, next - 1);
            while (i < items.size() && pref + acc + items[i].k <= boundary) {
                acc += items[i].k;
                ++i;
            }
            if (pref + acc != boundary) throw std::logic_error("compress_nukc: missing boundary");
            head.k = acc;
            blocks.push_back(head);
            pref += acc;
            ++next;
            if (next > lp) break;
        }
    }
    // merge equal radii onto the smallest index, drop empty levels, and
    // remember every constituent block head for the lift
    NukcCompressed out;
    out.eps = eps;
    out.inst.space = in.space;
    for (auto& bl : blocks) {
        if (bl.k == 0) continue;
        if (!out.inst.radii.empty() && out.inst.radii.back() == bl.r) {
            out.inst.budgets.back() += bl.k;
            out.provenance.back().push_back(bl.orig);
        } else {
            out.inst.budgets.push_back(bl.k);
            out.inst.radii.push_back(bl.r);
            out.provenance.push_back({bl.orig});
        }
    }
    out.orig_prefix.assign(static_cast<size_t>(big_l) + 1, Rat(0));
    for (int l = 1; l <= big_l; ++l) out.orig_prefix[l] = in.budget_prefix(l);
    out.inst.validate();
    // prefix budgets must land on powers of the base, radii must drop by a
    // (1+eps) factor between distinct compressed levels within the rounded
    // range
    {
        Rat pref(0);
        for (int l = 1; l <= out.inst.levels(); ++l) {
            pref += out.inst.budgets[l - 1];
            if (rat_pow(base, ceil_log(base, pref)) != pref)
                throw std::logic_error("compress_nukc: prefix budget not a power");
        }
        for (int l = 1; l < out.inst.levels(); ++l) {
            if (out.provenance[l][0] > h) continue;
            const Rat &ra = out.inst.radii[l - 1], &rb = out.inst.radii[l];
            if (rb > 0 && ra < base * rb)
                throw std::logic_error("compress_nukc: adjacent radii too close");
        }
    }
    return out;
}

}  // namespace rmfc
