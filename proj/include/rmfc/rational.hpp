#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmfc {

// Exact arithmetic throughout: all budgets, stretches, radii and LP values
// are mpq_class rationals. No floating point on any solution path.
using Rat = mpq_class;
using Int = mpz_class;

// mpq_class(p, q) does not canonicalize; use this for computed operands
inline Rat make_rat(long num, long den) {
    Rat r(num, den);
    r.canonicalize();
    return r;
}

inline Int rat_floor(const Rat& q) {
    Int r;
    mpz_fdiv_q(r.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
    return r;
}

inline Int rat_ceil(const Rat& q) {
    Int r;
    mpz_cdiv_q(r.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
    return r;
}

inline long to_long(const Int& z) {
    if (!z.fits_slong_p()) throw std::overflow_error("integer too large for long");
    return z.get_si();
}

inline Rat rat_pow(const Rat& base, long e) {
    if (e == 0) return Rat(1);
    Rat b = e > 0 ? base : Rat(1) / base;
    long k = e > 0 ? e : -e;
    Rat acc(1);
    while (k > 0) {
        if (k & 1) acc *= b;
        b *= b;
        k >>= 1;
    }
    return acc;
}

// Smallest integer m with base^m >= q, i.e. the exact value of
// ceil(log_base(q)) for base > 1, q > 0. May be negative for q < 1.
inline long ceil_log(const Rat& base, const Rat& q) {
    if (base <= 1 || q <= 0) throw std::invalid_argument("ceil_log: base > 1, q > 0 required");
    long m = 0;
    Rat p(1);
    if (p >= q) {
        // walk down while base^(m-1) still >= q
        while (p / base >= q) {
            p /= base;
            --m;
            if (m < -100000) throw std::overflow_error("ceil_log underflow");
        }
        return m;
    }
    while (p < q) {
        p *= base;
        ++m;
        if (m > 100000) throw std::overflow_error("ceil_log overflow");
    }
    return m;
}

// Largest multiple of step that is <= q (step > 0).
inline Rat round_down_multiple(const Rat& q, const Rat& step) {
    return Rat(rat_floor(q / step)) * step;
}

// Smallest multiple of step that is >= q (step > 0).
inline Rat round_up_multiple(const Rat& q, const Rat& step) {
    return Rat(rat_ceil(q / step)) * step;
}

// Parses "p/q", plain integers, or decimals like "1.25" into an exact Rat.
inline Rat parse_rat(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("empty rational literal");
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        Rat r;
        if (r.set_str(s, 10) != 0) throw std::invalid_argument("bad rational literal: " + s);
        if (r.get_den() == 0) throw std::invalid_argument("zero denominator: " + s);
        r.canonicalize();
        return r;
    }
    auto dot = s.find('.');
    if (dot == std::string::npos) {
        Rat r;
        if (r.set_str(s, 10) != 0) throw std::invalid_argument("bad integer literal: " + s);
        r.canonicalize();
        return r;
    }
    std::string head = s.substr(0, dot), tail = s.substr(dot + 1);
    bool neg = !head.empty() && head[0] == '-';
    if (neg) head = head.substr(1);
    if (head.empty()) head = "0";
    if (tail.empty()) tail = "0";
    for (char c : head)
        if (!isdigit(static_cast<unsigned char>(c))) throw std::invalid_argument("bad decimal: " + s);
    for (char c : tail)
        if (!isdigit(static_cast<unsigned char>(c))) throw std::invalid_argument("bad decimal: " + s);
    Int num(head + tail, 10);
    Int den(1);
    for (size_t i = 0; i < tail.size(); ++i) den *= 10;
    Rat r(num, den);
    r.canonicalize();
    if (neg) r = -r;
    return r;
}

inline const Rat& rat_max(const Rat& a, const Rat& b) { return a < b ? b : a; }
inline const Rat& rat_min(const Rat& a, const Rat& b) { return b < a ? b : a; }

inline std::string rat_str(const Rat& q) { return q.get_str(); }

inline Rat prefix_sum(const std::vector<Rat>& v, size_t upto) {
    Rat s(0);
    for (size_t i = 0; i < upto && i < v.size(); ++i) s += v[i];
    return s;
}

}  // namespace rmfc
