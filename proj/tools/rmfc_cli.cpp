// Command-line front end: solve / check / compress / oracle / analyze /
// gen / bench over the line-oriented instance formats.

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rmfc/analysis.hpp"
#include "rmfc/dp.hpp"
#include "rmfc/generate.hpp"
#include "rmfc/io.hpp"
#include "rmfc/nukc_solver.hpp"
#include "rmfc/pipeline.hpp"

using namespace rmfc;

namespace {

struct Clock {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    long ms() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - t0)
            .count();
    }
};

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw MalformedInput("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_out(const std::string& path, const std::string& text) {
    if (path.empty()) return;
    std::ofstream f(path);
    f << text;
}

// protect-targets reduction applied up front when the file names them
SrmfcInstance tree_instance_of(const TreeFile& tf) {
    RootedTree tree = tf.tree;
    std::vector<Rat> budgets = tf.budgets;
    if (tf.protect) {
        auto pruned = normalize_targets(tf.tree, *tf.protect);
        tree = pruned.tree;
        budgets.resize(static_cast<size_t>(tree.height));
    }
    SrmfcInstance inst{std::move(tree), std::move(budgets)};
    inst.validate();
    return inst;
}

int cmd_solve(const std::string& in_path, const std::string& out_path, const std::string& problem,
              const std::string& mode, const Rat& eps, long max_nodes, long max_partitions) {
    Clock clock;
    std::string text = slurp(in_path);
    auto parsed = parse_instance(text);
    std::cout << "command: solve --problem " << problem << "\n";
    std::cout << "instance: " << digest(text) << "\n";
    SolveLimits limits;
    limits.explore.max_nodes = max_nodes;
    limits.explore.max_partitions = max_partitions;

    if (problem == "srmfc") {
        if (!parsed.tree) throw MalformedInput("srmfc expects a tree instance");
        auto inst = tree_instance_of(*parsed.tree);
        auto res = solve_srmfc(inst, eps, limits);
        if (!res.found) {
            std::cout << "result: infeasible\n";
            return 1;
        }
        auto st = stretch_of(inst, res.protect);
        if (!st.protecting || st.infinite || st.value != res.alpha)
            throw std::logic_error("certificate failed re-verification");
        std::cout << "result: stretch " << rat_str(res.alpha) << "\n";
        std::cout << "guess: " << rat_str(res.candidate) << "\n";
        std::cout << "truncated: " << (res.truncated ? "yes" : "no") << "\n";
        std::cout << "worst_case_guarantee: " << (res.guaranteed() ? "yes" : "no") << "\n";
        if (res.eps_out_of_range) std::cout << "note: guarantees proven only for eps <= 1/7\n";
        std::ostringstream sol;
        serialize_protection(sol, inst.tree, res.protect);
        write_out(out_path, sol.str());
        std::cout << "wall_ms: " << clock.ms() << "\n";
        return 0;
    }
    if (problem == "rmfc") {
        if (!parsed.tree) throw MalformedInput("rmfc expects a tree instance");
        auto inst = tree_instance_of(*parsed.tree);
        RmfcMode m = mode == "budget_4eps"    ? RmfcMode::budget_4eps
                     : mode == "three_approx" ? RmfcMode::three_approx
                                              : RmfcMode::two_approx;
        auto res = solve_rmfc(inst.tree, m, eps, limits);
        if (!res.found) {
            std::cout << "result: infeasible\n";
            return 1;
        }
        if (!check_protection(inst.tree, res.protect))
            throw std::logic_error("certificate failed re-verification");
        std::cout << "result: budget " << res.budget << "\n";
        std::cout << "guess: " << res.guessed_b << "\n";
        std::cout << "certified: " << (res.certified ? "yes" : "no") << "\n";
        std::cout << "truncated: " << (res.truncated ? "yes" : "no") << "\n";
        if (inst.tree.n - 1 <= 14)
            std::cout << "oracle_budget: " << exhaustive_min_budget(inst.tree) << "\n";
        std::ostringstream sol;
        serialize_protection(sol, inst.tree, res.protect);
        write_out(out_path, sol.str());
        std::cout << "wall_ms: " << clock.ms() << "\n";
        return 0;
    }
    if (problem == "snukc" || problem == "nukc") {
        if (!parsed.metric) throw MalformedInput("nukc expects a metric instance");
        NukcExploreLimits nl;
        nl.max_nodes = max_nodes;
        auto res = solve_snukc(*parsed.metric, eps, nl);
        if (!res.found) {
            std::cout << "result: infeasible\n";
            return 1;
        }
        PairSet centers = res.centers;
        Rat alpha = res.alpha;
        if (problem == "nukc") {
            SnukcInstance integral = *parsed.metric;
            for (auto& k : integral.budgets) k = Rat(rat_ceil(k));
            alpha = rat_max(res.alpha, Rat(1));
            centers = flatten_budgets(integral, centers, alpha);
        }
        if (!is_feasible(*parsed.metric, centers, rat_max(alpha, Rat(1)), res.beta, true))
            throw std::logic_error("certificate failed re-verification");
        std::cout << "result: alpha " << rat_str(alpha) << " beta " << rat_str(res.beta) << "\n";
        std::cout << "guess: " << rat_str(res.guess) << "\n";
        std::cout << "truncated: " << (res.truncated ? "yes" : "no") << "\n";
        std::ostringstream sol;
        serialize_centers(sol, centers);
        write_out(out_path, sol.str());
        std::cout << "wall_ms: " << clock.ms() << "\n";
        return 0;
    }
    throw MalformedInput("unknown problem " + problem);
}

int cmd_check(const std::string& in_path, const std::string& sol_path) {
    auto parsed = parse_instance(slurp(in_path));
    std::ifstream sf(sol_path);
    if (!sf) throw MalformedInput("cannot open " + sol_path);
    auto sol = parse_solution(sf);
    if (parsed.tree) {
        auto inst = tree_instance_of(*parsed.tree);
        VertexSet r;
        for (int lbl : sol.protect) {
            int id = -1;
            for (int v = 0; v < inst.tree.n; ++v)
                if (inst.tree.label[v] == lbl) id = v;
            if (id <= 0) throw MalformedInput("solution names unknown vertex");
            r.insert(id);
        }
        auto st = stretch_of(inst, r);
        std::vector<long> cnt(inst.tree.height + 1, 0);
        for (int v : r) cnt[inst.tree.level[v]]++;
        long run = 0;
        for (int l = 1; l <= inst.tree.height; ++l) {
            run += cnt[l];
            std::cout << "level " << l << ": used " << run << " of "
                      << rat_str(inst.budget_prefix(l)) << " (prefix)\n";
        }
        std::cout << "protecting: " << (st.protecting ? "yes" : "no") << "\n";
        std::cout << "stretch: " << (st.infinite ? "infinite" : rat_str(st.value)) << "\n";
        return st.protecting && !st.infinite ? 0 : 1;
    }
    auto dil = measured_dilation(*parsed.metric, sol.centers);
    if (!dil) {
        std::cout << "covering: no\n";
        return 1;
    }
    std::cout << "alpha: " << rat_str(measured_budget_stretch(*parsed.metric, sol.centers)) << "\n";
    std::cout << "beta: " << rat_str(*dil) << "\n";
    return 0;
}

int cmd_compress(const std::string& in_path, const std::string& out_path, const Rat& eps,
                 const Rat& alpha) {
    auto parsed = parse_instance(slurp(in_path));
    std::ostringstream os;
    if (parsed.tree) {
        auto inst = tree_instance_of(*parsed.tree);
        auto rc = compress_candidate(inst, alpha, eps);
        if (!rc) {
            std::cout << "result: candidate infeasible\n";
            return 1;
        }
        TreeFile tf{rc->comp.inst.tree, rc->comp.inst.budgets, std::nullopt};
        serialize_tree(os, tf);
    } else {
        auto comp = compress_nukc(*parsed.metric, eps);
        serialize_metric(os, comp.inst);
    }
    if (out_path.empty())
        std::cout << os.str();
    else
        write_out(out_path, os.str());
    return 0;
}

int cmd_oracle(const std::string& in_path) {
    auto parsed = parse_instance(slurp(in_path));
    if (parsed.tree) {
        auto inst = tree_instance_of(*parsed.tree);
        auto ex = exhaustive_exact(inst);
        if (ex.finite) {
            std::cout << "alpha_opt: " << rat_str(ex.alpha) << "\n";
            std::ostringstream w;
            serialize_protection(w, inst.tree, ex.witness);
            std::cout << w.str();
        } else {
            std::cout << "alpha_opt: infinite\n";
        }
        std::cout << "budget_opt: " << exhaustive_min_budget(inst.tree) << "\n";
        return 0;
    }
    auto ex = exhaustive_nukc(*parsed.metric);
    if (!ex.feasible) {
        std::cout << "beta_opt: infeasible\n";
        return 1;
    }
    std::cout << "beta_opt: " << rat_str(ex.beta) << "\n";
    std::ostringstream w;
    serialize_centers(w, ex.witness);
    std::cout << w.str();
    return 0;
}

int cmd_analyze(const std::string& in_path, const Rat& eps) {
    auto parsed = parse_instance(slurp(in_path));
    if (!parsed.tree) throw MalformedInput("analyze expects a tree instance");
    auto inst = tree_instance_of(*parsed.tree);
    auto ex = exhaustive_exact(inst);
    if (!ex.finite || ex.alpha > 1) {
        std::cout << "analysis needs a 1-feasible instance (optimum "
                  << (ex.finite ? rat_str(ex.alpha) : "infinite") << ")\n";
        return 1;
    }
    AnalysisContext ctx{inst, ex.witness, thresholds(eps, inst)};
    ctx.validate();
    std::cout << "h_hat: " << ctx.th.h_hat << "\nh_check: " << ctx.th.h_check
              << "\nkappa: " << ctx.th.kappa << "\n";
    std::cout << "opt:";
    for (int v : ctx.opt) std::cout << ' ' << inst.tree.label[v];
    std::cout << "\ncore:";
    for (int v : core_vertices(ctx, ctx.th.h_hat)) std::cout << ' ' << inst.tree.label[v];
    std::cout << "\nthinned_core:";
    for (int v : thinned_core(ctx)) std::cout << ' ' << inst.tree.label[v];
    std::cout << "\n";
    return 0;
}

int cmd_gen(const std::string& kind, int n, int depth, int branching, int levels,
            const std::string& metric_kind, std::uint64_t seed, const std::string& out_path) {
    std::ostringstream os;
    if (kind == "tree") {
        auto inst = generate_tree(n, depth, branching, seed);
        TreeFile tf{inst.tree, inst.budgets, std::nullopt};
        serialize_tree(os, tf);
    } else {
        MetricKind mk = metric_kind == "line"    ? MetricKind::line
                        : metric_kind == "plane" ? MetricKind::plane
                                                 : MetricKind::closure;
        serialize_metric(os, generate_metric(n, mk, levels, seed));
    }
    std::cout << "seed: " << seed << "\n";
    if (out_path.empty())
        std::cout << os.str();
    else
        write_out(out_path, os.str());
    return 0;
}

int cmd_bench(const std::string& kind, int count, int n, const Rat& eps, std::uint64_t seed) {
    std::cout << "family\tn\tseed\tmode\tratio\twall_ms\ttruncated\n";
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        std::uint64_t s = seed * 1000 + static_cast<std::uint64_t>(i);
        if (kind == "tree") {
            int depth = std::min(2 + static_cast<int>(rng.below(4)), n - 1);
            auto inst = generate_tree(n, depth, 3, s, TreeGenOptions{2, 2, false});
            auto ex = exhaustive_exact(inst);
            if (!ex.finite || ex.alpha == 0) continue;
            Clock clock;
            auto res = solve_srmfc(inst, eps);
            if (!res.found) continue;
            std::cout << "tree\t" << n << "\t" << s << "\tsrmfc\t"
                      << rat_str(res.alpha / ex.alpha) << "\t" << clock.ms() << "\t"
                      << (res.truncated ? 1 : 0) << "\n";
        } else {
            auto inst = generate_metric(n, MetricKind{static_cast<int>(i % 3)}, 2, s);
            auto ex = exhaustive_nukc(inst);
            if (!ex.feasible || ex.beta == 0) continue;
            Clock clock;
            auto res = solve_snukc(inst, eps);
            if (!res.found) continue;
            std::cout << "metric\t" << n << "\t" << s << "\tsnukc\t"
                      << rat_str(res.beta / ex.beta) << "\t" << clock.ms() << "\t"
                      << (res.truncated ? 1 : 0) << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"solver toolkit for fire containment on trees and non-uniform k-center"};
    app.require_subcommand(1);

    std::string in_path, out_path, sol_path;
    std::string problem = "srmfc", mode = "two_approx", kind = "tree", metric_kind = "plane";
    std::string eps_str = "1/7", alpha_str = "1";
    long max_nodes = 200000, max_partitions = 256;
    int n = 10, depth = 3, branching = 3, levels = 2, count = 20;
    std::uint64_t seed = 1;

    auto* solve = app.add_subcommand("solve", "run a solver pipeline");
    solve->add_option("--in", in_path)->required();
    solve->add_option("--out", out_path);
    solve->add_option("--problem", problem)->check(CLI::IsMember({"srmfc", "rmfc", "snukc", "nukc"}));
    solve->add_option("--mode", mode)
        ->check(CLI::IsMember({"two_approx", "budget_4eps", "three_approx"}));
    solve->add_option("--eps", eps_str);
    solve->add_option("--max-nodes", max_nodes);
    solve->add_option("--max-partitions", max_partitions);

    auto* check = app.add_subcommand("check", "verify a solution file");
    check->add_option("--in", in_path)->required();
    check->add_option("--solution", sol_path)->required();

    auto* compress_cmd = app.add_subcommand("compress", "emit the compressed instance");
    compress_cmd->add_option("--in", in_path)->required();
    compress_cmd->add_option("--out", out_path);
    compress_cmd->add_option("--eps", eps_str);
    compress_cmd->add_option("--alpha", alpha_str);

    auto* oracle = app.add_subcommand("oracle", "brute-force optimum for small instances");
    oracle->add_option("--in", in_path)->required();

    auto* analyze = app.add_subcommand("analyze", "dump optimum-dependent core sets");
    analyze->add_option("--in", in_path)->required();
    analyze->add_option("--eps", eps_str);

    auto* gen = app.add_subcommand("gen", "generate a random instance");
    gen->add_option("kind", kind)->check(CLI::IsMember({"tree", "metric"}));
    gen->add_option("--n", n);
    gen->add_option("--depth", depth);
    gen->add_option("--branching", branching);
    gen->add_option("--levels", levels);
    gen->add_option("--metric-kind", metric_kind)->check(CLI::IsMember({"line", "plane", "closure"}));
    gen->add_option("--seed", seed);
    gen->add_option("--out", out_path);

    auto* bench = app.add_subcommand("bench", "sweep a family and report oracle ratios");
    bench->add_option("--kind", kind)->check(CLI::IsMember({"tree", "metric"}));
    bench->add_option("--count", count);
    bench->add_option("--n", n);
    bench->add_option("--eps", eps_str);
    bench->add_option("--seed", seed);

    CLI11_PARSE(app, argc, argv);

    try {
        Rat eps = parse_rat(eps_str);
        if (solve->parsed())
            return cmd_solve(in_path, out_path, problem, mode, eps, max_nodes, max_partitions);
        if (check->parsed()) return cmd_check(in_path, sol_path);
        if (compress_cmd->parsed()) return cmd_compress(in_path, out_path, eps, parse_rat(alpha_str));
        if (oracle->parsed()) return cmd_oracle(in_path);
        if (analyze->parsed()) return cmd_analyze(in_path, eps);
        if (gen->parsed()) return cmd_gen(kind, n, depth, branching, levels, metric_kind, seed, out_path);
        if (bench->parsed()) return cmd_bench(kind, count, n, eps, seed);
    } catch (const MalformedInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const EmptyTargets& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParameterOutOfRange& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ResourceCap& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
