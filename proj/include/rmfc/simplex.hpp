#pragma once

#include <cassert>
#include <optional>
#include <ostream>
#include <vector>

#include "rmfc/error.hpp"
#include "rmfc/rational.hpp"

namespace rmfc {

enum class Rel { LE, GE, EQ };

struct LinRow {
    std::vector<std::pair<int, Rat>> terms;  // (variable, coefficient), variables 0-based
    Rel rel = Rel::LE;
    Rat rhs = Rat(0);
};

struct LpSolution {
    std::vector<Rat> x;
    Rat objective = Rat(0);
};

// Dense two-phase primal simplex over exact rationals with Bland's
// anti-cycling rule. Solutions are basic feasible points, i.e. vertices of
// the constraint polyhedron, which is what the rounding procedures need.
class Simplex {
public:
    explicit Simplex(int nvars) : nvars_(nvars) {}

    void add(LinRow row) { rows_.push_back(std::move(row)); }

    void add_le(std::vector<std::pair<int, Rat>> terms, Rat rhs) {
        add(LinRow{std::move(terms), Rel::LE, std::move(rhs)});
    }
    void add_ge(std::vector<std::pair<int, Rat>> terms, Rat rhs) {
        add(LinRow{std::move(terms), Rel::GE, std::move(rhs)});
    }

    // Minimizes c^T x after phase 1; without an objective, phase 1's basic
    // feasible point is returned as-is.
    void minimize(std::vector<Rat> c) { obj_ = std::move(c); }

    std::optional<LpSolution> solve() {
        build();
        if (!phase1()) return std::nullopt;
        if (!obj_.empty()) phase2();
        LpSolution out;
        out.x.assign(nvars_, Rat(0));
        for (int i = 0; i < m_; ++i)
            if (basis_[i] < nvars_) out.x[basis_[i]] = b_[i];
        if (!obj_.empty())
            for (int j = 0; j < nvars_; ++j) out.objective += obj_[j] * out.x[j];
        return out;
    }

    long pivot_count() const { return pivots_; }

private:
    int nvars_;
    std::vector<LinRow> rows_;
    std::vector<Rat> obj_;

    int m_ = 0, cols_ = 0, art_begin_ = 0;
    std::vector<std::vector<Rat>> a_;
    std::vector<Rat> b_;
    std::vector<int> basis_;
    std::vector<Rat> red_;
    long pivots_ = 0;

    void build() {
        m_ = static_cast<int>(rows_.size());
        // canonicalize rhs >= 0
        for (auto& r : rows_) {
            if (r.rhs < 0) {
                for (auto& t : r.terms) t.second = -t.second;
                r.rhs = -r.rhs;
                if (r.rel == Rel::LE)
                    r.rel = Rel::GE;
                else if (r.rel == Rel::GE)
                    r.rel = Rel::LE;
            }
        }
        int nslack = 0, nart = 0;
        for (auto& r : rows_) {
            if (r.rel != Rel::EQ) ++nslack;
            if (r.rel != Rel::LE) ++nart;
        }
        art_begin_ = nvars_ + nslack;
        cols_ = nvars_ + nslack + nart;
        a_.assign(m_, std::vector<Rat>(cols_, Rat(0)));
        b_.assign(m_, Rat(0));
        basis_.assign(m_, -1);
        int s = nvars_, art = art_begin_;
        for (int i = 0; i < m_; ++i) {
            const auto& r = rows_[i];
            for (auto& [v, c] : r.terms) {
                assert(v >= 0 && v < nvars_);
                a_[i][v] += c;
            }
            b_[i] = r.rhs;
            if (r.rel == Rel::LE) {
                a_[i][s] = 1;
                basis_[i] = s++;
            } else if (r.rel == Rel::GE) {
                a_[i][s] = -1;
                ++s;
                a_[i][art] = 1;
                basis_[i] = art++;
            } else {
                a_[i][art] = 1;
                basis_[i] = art++;
            }
        }
    }

    void pivot(int r, int c) {
        ++pivots_;
        Rat inv = Rat(1) / a_[r][c];
        for (int j = 0; j < cols_; ++j)
            if (a_[r][j] != 0) a_[r][j] *= inv;
        b_[r] *= inv;
        a_[r][c] = 1;
        for (int i = 0; i < m_; ++i) {
            if (i == r || a_[i][c] == 0) continue;
            Rat f = a_[i][c];
            for (int j = 0; j < cols_; ++j)
                if (a_[r][j] != 0) a_[i][j] -= f * a_[r][j];
            b_[i] -= f * b_[r];
            a_[i][c] = 0;
        }
        if (red_[c] != 0) {
            Rat f = red_[c];
            for (int j = 0; j < cols_; ++j)
                if (a_[r][j] != 0) red_[j] -= f * a_[r][j];
            red_[c] = 0;
        }
        basis_[r] = c;
    }

    // Bland's rule: entering = smallest-index column with negative reduced
    // cost; leaving = min-ratio row, ties by smallest basic column.
    void run(const std::vector<char>& allowed) {
        while (true) {
            int enter = -1;
            for (int j = 0; j < cols_; ++j)
                if (allowed[j] && red_[j] < 0) {
                    enter = j;
                    break;
                }
            if (enter < 0) return;
            int leave = -1;
            Rat best;
            for (int i = 0; i < m_; ++i) {
                if (a_[i][enter] <= 0) continue;
                Rat ratio = b_[i] / a_[i][enter];
                if (leave < 0 || ratio < best || (ratio == best && basis_[i] < basis_[leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (leave < 0) throw PreconditionViolated("unbounded linear program");
            pivot(leave, enter);
        }
    }

    void set_costs(const std::vector<Rat>& c) {
        red_ = c;
        red_.resize(cols_, Rat(0));
        for (int i = 0; i < m_; ++i) {
            Rat cb = basis_[i] < static_cast<int>(c.size()) ? c[basis_[i]] : Rat(0);
            if (cb == 0) continue;
            for (int j = 0; j < cols_; ++j)
                if (a_[i][j] != 0) red_[j] -= cb * a_[i][j];
        }
    }

    Rat objective_of(const std::vector<Rat>& c) const {
        Rat v(0);
        for (int i = 0; i < m_; ++i)
            if (basis_[i] < static_cast<int>(c.size())) v += c[basis_[i]] * b_[i];
        return v;
    }

    bool phase1() {
        std::vector<Rat> c(cols_, Rat(0));
        for (int j = art_begin_; j < cols_; ++j) c[j] = 1;
        set_costs(c);
        std::vector<char> allowed(cols_, 1);
        run(allowed);
        if (objective_of(c) != 0) return false;
        // pivot lingering artificials out; drop rows that became redundant
        for (int i = m_ - 1; i >= 0; --i) {
            if (basis_[i] < art_begin_) continue;
            int col = -1;
            for (int j = 0; j < art_begin_; ++j)
                if (a_[i][j] != 0) {
                    col = j;
                    break;
                }
            if (col >= 0) {
                pivot(i, col);
            } else {
                a_.erase(a_.begin() + i);
                b_.erase(b_.begin() + i);
                basis_.erase(basis_.begin() + i);
                --m_;
            }
        }
        return true;
    }

    void phase2() {
        std::vector<Rat> c = obj_;
        c.resize(cols_, Rat(0));
        set_costs(c);
        std::vector<char> allowed(cols_, 1);
        for (int j = art_begin_; j < cols_; ++j) allowed[j] = 0;
        run(allowed);
    }
};

}  // namespace rmfc
