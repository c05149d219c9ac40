#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rmfc/metric.hpp"
#include "rmfc/tree.hpp"

namespace rmfc {

// Line-oriented exact-rational formats:
//   rmfc v1 / n <int> / root <id> / edge <p> <c> ... / budget <r> ... /
//   [protect <id> ...]
//   nukc v1 / points <n> / n distance rows / levels <L> / k ... / r ...
//   solution v1 / protect <id> lines or center <point> <level> lines
struct TreeFile {
    RootedTree tree;
    std::vector<Rat> budgets;
    std::optional<VertexSet> protect;  // dense ids; absent = all leaves
};

struct ParsedInstance {
    std::optional<TreeFile> tree;
    std::optional<SnukcInstance> metric;
};

namespace detail {

struct LineReader {
    std::istream& in;
    int line_no = 0;
    std::string line;

    bool next() {
        while (std::getline(in, line)) {
            ++line_no;
            auto pos = line.find_first_not_of(" \t\r");
            if (pos == std::string::npos || line[pos] == '#') continue;
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw MalformedInput("line " + std::to_string(line_no) + ": " + what);
    }
    std::vector<std::string> tokens() const {
        std::istringstream ss(line);
        std::vector<std::string> out;
        std::string t;
        while (ss >> t) out.push_back(t);
        return out;
    }
};

inline Rat parse_rat_at(const LineReader& r, const std::string& tok) {
    try {
        return parse_rat(tok);
    } catch (const std::exception& e) {
        r.fail(std::string("bad rational '") + tok + "'");
    }
}

inline long long parse_int_at(const LineReader& r, const std::string& tok) {
    try {
        size_t used = 0;
        long long v = std::stoll(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        r.fail(std::string("bad integer '") + tok + "'");
    }
}

}  // namespace detail

inline ParsedInstance parse_instance(std::istream& in) {
    detail::LineReader r{in, 0, {}};
    if (!r.next()) throw MalformedInput("empty input");
    auto head = r.tokens();
    ParsedInstance out;
    if (head.size() == 2 && head[0] == "rmfc" && head[1] == "v1") {
        long long n = -1, root = -1;
        std::vector<std::pair<long long, long long>> edges;
        std::vector<Rat> budgets;
        std::optional<std::vector<long long>> protect_labels;
        while (r.next()) {
            auto t = r.tokens();
            if (t[0] == "n" && t.size() == 2) {
                n = detail::parse_int_at(r, t[1]);
            } else if (t[0] == "root" && t.size() == 2) {
                root = detail::parse_int_at(r, t[1]);
            } else if (t[0] == "edge" && t.size() == 3) {
                edges.push_back({detail::parse_int_at(r, t[1]), detail::parse_int_at(r, t[2])});
            } else if (t[0] == "budget") {
                for (size_t i = 1; i < t.size(); ++i) budgets.push_back(detail::parse_rat_at(r, t[i]));
            } else if (t[0] == "protect") {
                protect_labels.emplace();
                for (size_t i = 1; i < t.size(); ++i)
                    protect_labels->push_back(detail::parse_int_at(r, t[i]));
            } else {
                r.fail("unknown directive '" + t[0] + "'");
            }
        }
        if (root < 0) throw MalformedInput("missing root");
        TreeFile tf;
        tf.tree = build_tree(edges, root);
        if (n >= 0 && n != tf.tree.n) throw MalformedInput("declared n does not match the edges");
        if (static_cast<int>(budgets.size()) != tf.tree.height)
            throw MalformedInput("budget count must equal the tree height");
        for (auto& b : budgets)
            if (b < 0) throw MalformedInput("negative budget");
        tf.budgets = std::move(budgets);
        if (protect_labels) {
            VertexSet s;
            for (long long lbl : *protect_labels) {
                int id = -1;
                for (int v = 0; v < tf.tree.n; ++v)
                    if (tf.tree.label[v] == lbl) id = v;
                if (id < 0) throw MalformedInput("protect names unknown vertex " + std::to_string(lbl));
                if (id == 0) throw MalformedInput("the root cannot be a protection target");
                s.insert(id);
            }
            if (s.empty()) throw EmptyTargets();
            tf.protect = std::move(s);
        }
        out.tree = std::move(tf);
        return out;
    }
    if (head.size() == 2 && head[0] == "nukc" && head[1] == "v1") {
        SnukcInstance inst;
        if (!r.next()) r.fail("expected points");
        auto t = r.tokens();
        if (t.size() != 2 || t[0] != "points") r.fail("expected 'points <n>'");
        inst.space.n = static_cast<int>(detail::parse_int_at(r, t[1]));
        if (inst.space.n < 1) r.fail("need at least one point");
        inst.space.dist.assign(inst.space.n, std::vector<Rat>(inst.space.n, Rat(0)));
        for (int u = 0; u < inst.space.n; ++u) {
            if (!r.next()) r.fail("missing distance row");
            auto row = r.tokens();
            if (static_cast<int>(row.size()) != inst.space.n) r.fail("distance row width");
            for (int v = 0; v < inst.space.n; ++v)
                inst.space.dist[u][v] = detail::parse_rat_at(r, row[v]);
        }
        if (!r.next()) r.fail("expected levels");
        t = r.tokens();
        if (t.size() != 2 || t[0] != "levels") r.fail("expected 'levels <L>'");
        long levels = detail::parse_int_at(r, t[1]);
        if (!r.next()) r.fail("expected k");
        t = r.tokens();
        if (t.empty() || t[0] != "k" || static_cast<long>(t.size()) != levels + 1)
            r.fail("expected 'k' with one budget per level");
        for (size_t i = 1; i < t.size(); ++i) inst.budgets.push_back(detail::parse_rat_at(r, t[i]));
        if (!r.next()) r.fail("expected r");
        t = r.tokens();
        if (t.empty() || t[0] != "r" || static_cast<long>(t.size()) != levels + 1)
            r.fail("expected 'r' with one radius per level");
        for (size_t i = 1; i < t.size(); ++i) inst.radii.push_back(detail::parse_rat_at(r, t[i]));
        try {
            inst.validate();
        } catch (const MalformedInput& e) {
            throw MalformedInput(std::string("metric instance: ") + e.what());
        }
        out.metric = std::move(inst);
        return out;
    }
    throw MalformedInput("unknown header (want 'rmfc v1' or 'nukc v1')");
}

inline ParsedInstance parse_instance(const std::string& text) {
    std::istringstream ss(text);
    return parse_instance(ss);
}

struct SolutionFile {
    VertexSet protect;  // labels resolved against a tree at check time
    PairSet centers;
    bool is_tree = false;
};

inline SolutionFile parse_solution(std::istream& in) {
    detail::LineReader r{in, 0, {}};
    if (!r.next()) throw MalformedInput("empty solution");
    auto head = r.tokens();
    if (head.size() != 2 || head[0] != "solution" || head[1] != "v1")
        r.fail("expected 'solution v1'");
    SolutionFile out;
    bool any = false;
    while (r.next()) {
        auto t = r.tokens();
        if (t[0] == "protect" && t.size() == 2) {
            out.protect.insert(static_cast<int>(detail::parse_int_at(r, t[1])));
            out.is_tree = true;
        } else if (t[0] == "center" && t.size() == 3) {
            out.centers.insert({static_cast<int>(detail::parse_int_at(r, t[1])),
                                static_cast<int>(detail::parse_int_at(r, t[2]))});
        } else {
            r.fail("expected 'protect <id>' or 'center <point> <level>'");
        }
        any = true;
    }
    if (!any) throw MalformedInput("solution has no entries");
    return out;
}

inline void serialize_tree(std::ostream& os, const TreeFile& tf) {
    os << "rmfc v1\n";
    os << "n " << tf.tree.n << "\n";
    os << "root " << tf.tree.label[0] << "\n";
    for (int v = 1; v < tf.tree.n; ++v)
        os << "edge " << tf.tree.label[tf.tree.parent[v]] << ' ' << tf.tree.label[v] << "\n";
    os << "budget";
    for (auto& b : tf.budgets) os << ' ' << rat_str(b);
    os << "\n";
    if (tf.protect) {
        os << "protect";
        for (int v : *tf.protect) os << ' ' << tf.tree.label[v];
        os << "\n";
    }
}

inline void serialize_metric(std::ostream& os, const SnukcInstance& inst) {
    os << "nukc v1\n";
    os << "points " << inst.space.n << "\n";
    for (int u = 0; u < inst.space.n; ++u) {
        for (int v = 0; v < inst.space.n; ++v) os << (v ? " " : "") << rat_str(inst.space.d(u, v));
        os << "\n";
    }
    os << "levels " << inst.levels() << "\n";
    os << "k";
    for (auto& k : inst.budgets) os << ' ' << rat_str(k);
    os << "\nr";
    for (auto& r : inst.radii) os << ' ' << rat_str(r);
    os << "\n";
}

inline void serialize_protection(std::ostream& os, const RootedTree& tree, const VertexSet& r) {
    os << "solution v1\n";
    for (int v : r) os << "protect " << tree.label[v] << "\n";
}

inline void serialize_centers(std::ostream& os, const PairSet& c) {
    os << "solution v1\n";
    for (auto& [v, l] : c) os << "center " << v << ' ' << l << "\n";
}

// FNV-1a over the canonical serialization, reported in run summaries
inline std::string digest(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace rmfc
