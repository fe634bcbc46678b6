#include "nilflow/rat.hpp"

#include <algorithm>
#include <cstdlib>

namespace nilflow {

Rat make_rat(const Int& num, const Int& den) {
    if (den == 0) {
        throw DivisionByZeroError("rational with zero denominator");
    }
    // Division canonicalizes; raw mpq construction would not.
    return Rat(num) / Rat(den);
}

Rat parse_rat(const std::string& text) {
    auto bad = [&]() { return ScenarioError("bad rational literal: '" + text + "'"); };
    if (text.empty()) throw bad();
    auto slash = text.find('/');
    try {
        if (slash == std::string::npos) {
            return Rat(Int(text));
        }
        std::string num = text.substr(0, slash);
        std::string den = text.substr(slash + 1);
        if (num.empty() || den.empty()) throw bad();
        return make_rat(Int(num), Int(den));
    } catch (const std::runtime_error&) {
        throw bad();
    }
}

std::string format_rat(const Rat& q) {
    if (denominator(q) == 1) {
        return numerator(q).str();
    }
    return numerator(q).str() + "/" + denominator(q).str();
}

double rat_to_double(const Rat& q) {
    return q.convert_to<double>();
}

RatInterval iv_add(const RatInterval& a, const RatInterval& b) {
    return {a.lo + b.lo, a.hi + b.hi};
}

RatInterval iv_sub(const RatInterval& a, const RatInterval& b) {
    return {a.lo - b.hi, a.hi - b.lo};
}

RatInterval iv_mul(const RatInterval& a, const RatInterval& b) {
    Rat p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
    Rat lo = std::min(std::min(p1, p2), std::min(p3, p4));
    Rat hi = std::max(std::max(p1, p2), std::max(p3, p4));
    return {lo, hi};
}

RatInterval iv_scale(const Rat& c, const RatInterval& a) {
    if (c >= 0) return {c * a.lo, c * a.hi};
    return {c * a.hi, c * a.lo};
}

RatPoly poly_trim(RatPoly p) {
    while (!p.empty() && p.back() == 0) p.pop_back();
    return p;
}

int poly_degree(const RatPoly& p) {
    for (size_t i = p.size(); i > 0; --i) {
        if (p[i - 1] != 0) return static_cast<int>(i - 1);
    }
    return -1;
}

bool poly_is_zero(const RatPoly& p) {
    return poly_degree(p) < 0;
}

RatPoly poly_add(const RatPoly& a, const RatPoly& b) {
    RatPoly r(std::max(a.size(), b.size()), Rat(0));
    for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
    for (size_t i = 0; i < b.size(); ++i) r[i] += b[i];
    return poly_trim(std::move(r));
}

RatPoly poly_sub(const RatPoly& a, const RatPoly& b) {
    RatPoly r(std::max(a.size(), b.size()), Rat(0));
    for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
    for (size_t i = 0; i < b.size(); ++i) r[i] -= b[i];
    return poly_trim(std::move(r));
}

RatPoly poly_mul(const RatPoly& a, const RatPoly& b) {
    if (poly_is_zero(a) || poly_is_zero(b)) return {};
    RatPoly r(a.size() + b.size() - 1, Rat(0));
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0) continue;
        for (size_t j = 0; j < b.size(); ++j) {
            if (b[j] == 0) continue;
            r[i + j] += a[i] * b[j];
        }
    }
    return poly_trim(std::move(r));
}

RatPoly poly_scale(const Rat& c, const RatPoly& p) {
    if (c == 0) return {};
    RatPoly r = p;
    for (auto& x : r) x *= c;
    return poly_trim(std::move(r));
}

RatPoly poly_derivative(const RatPoly& p) {
    if (p.size() <= 1) return {};
    RatPoly r(p.size() - 1);
    for (size_t i = 1; i < p.size(); ++i) r[i - 1] = p[i] * Rat(static_cast<long>(i));
    return poly_trim(std::move(r));
}

RatPoly poly_monic(const RatPoly& p) {
    RatPoly t = poly_trim(p);
    if (t.empty()) return t;
    Rat lead = t.back();
    for (auto& c : t) c /= lead;
    return t;
}

std::pair<RatPoly, RatPoly> poly_divmod(const RatPoly& a, const RatPoly& b) {
    RatPoly rem = poly_trim(a);
    RatPoly den = poly_trim(b);
    if (den.empty()) throw DivisionByZeroError("polynomial division by zero");
    int db = static_cast<int>(den.size()) - 1;
    if (static_cast<int>(rem.size()) - 1 < db) return {{}, rem};
    RatPoly quot(rem.size() - den.size() + 1, Rat(0));
    while (static_cast<int>(rem.size()) - 1 >= db && !rem.empty()) {
        int dr = static_cast<int>(rem.size()) - 1;
        Rat c = rem.back() / den.back();
        int shift = dr - db;
        quot[shift] = c;
        for (int i = 0; i <= db; ++i) {
            rem[shift + i] -= c * den[i];
        }
        rem = poly_trim(std::move(rem));
        if (rem.empty()) break;
    }
    return {poly_trim(std::move(quot)), rem};
}

RatPoly poly_gcd(const RatPoly& a, const RatPoly& b) {
    RatPoly x = poly_trim(a), y = poly_trim(b);
    while (!y.empty()) {
        RatPoly r = poly_divmod(x, y).second;
        x = std::move(y);
        y = poly_monic(std::move(r)); // monic keeps coefficient growth in check
    }
    return poly_monic(x);
}

Rat poly_eval(const RatPoly& p, const Rat& x) {
    Rat acc(0);
    for (size_t i = p.size(); i > 0; --i) {
        acc = acc * x + p[i - 1];
    }
    return acc;
}

RatInterval poly_eval_interval(const RatPoly& p, const RatInterval& x) {
    RatInterval acc{Rat(0), Rat(0)};
    for (size_t i = p.size(); i > 0; --i) {
        acc = iv_mul(acc, x);
        acc.lo += p[i - 1];
        acc.hi += p[i - 1];
    }
    return acc;
}

std::vector<RatPoly> sturm_chain(const RatPoly& p) {
    std::vector<RatPoly> chain;
    RatPoly p0 = poly_trim(p);
    if (p0.empty()) return chain;
    chain.push_back(p0);
    RatPoly p1 = poly_derivative(p0);
    while (!p1.empty()) {
        chain.push_back(p1);
        RatPoly rem = poly_divmod(chain[chain.size() - 2], p1).second;
        p1 = poly_scale(Rat(-1), rem);
    }
    return chain;
}

namespace {

int sign_variations(const std::vector<RatPoly>& chain, const Rat& x) {
    int variations = 0;
    int prev = 0;
    for (const auto& q : chain) {
        Rat v = poly_eval(q, x);
        int s = v > 0 ? 1 : (v < 0 ? -1 : 0);
        if (s == 0) continue;
        if (prev != 0 && s != prev) ++variations;
        prev = s;
    }
    return variations;
}

} // namespace

int count_roots_in(const std::vector<RatPoly>& chain, const Rat& lo, const Rat& hi) {
    if (chain.empty()) return 0;
    return sign_variations(chain, lo) - sign_variations(chain, hi);
}

namespace {

// Divisors of |n| by trial division; empty result signals "too big".
std::vector<Int> small_divisors(Int n, const Int& bound) {
    if (n < 0) n = -n;
    std::vector<Int> divs;
    if (n == 0 || n > bound) return divs;
    for (Int d = 1; d * d <= n; ++d) {
        if (n % d == 0) {
            divs.push_back(d);
            if (d != n / d) divs.push_back(n / d);
        }
    }
    return divs;
}

} // namespace

bool poly_has_rational_root(const RatPoly& p) {
    RatPoly t = poly_trim(p);
    if (t.size() <= 1) return false;
    // clear denominators to a primitive integer polynomial
    Int lcm = 1;
    for (const auto& c : t) {
        Int d = denominator(c);
        lcm = boost::multiprecision::lcm(lcm, d);
    }
    std::vector<Int> z(t.size());
    for (size_t i = 0; i < t.size(); ++i) {
        z[i] = numerator(t[i] * Rat(lcm));
    }
    if (z.front() == 0) return true; // root at 0
    const Int bound("1000000000000");
    std::vector<Int> ps = small_divisors(z.front(), bound);
    std::vector<Int> qs = small_divisors(z.back(), bound);
    if (ps.empty() || qs.empty()) return false; // coefficients too large; skip heuristic
    for (const Int& pn : ps) {
        for (const Int& qn : qs) {
            for (int s : {1, -1}) {
                Rat cand = make_rat(s * pn, qn);
                if (poly_eval(t, cand) == 0) return true;
            }
        }
    }
    return false;
}

} // namespace nilflow
