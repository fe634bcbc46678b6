#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <string>
#include <vector>

#include "nilflow/errors.hpp"

namespace nilflow {

using Int = boost::multiprecision::mpz_int;
using Rat = boost::multiprecision::mpq_rational;

// GMP rationals are only canonical after arithmetic, not after raw
// construction from (num, den) or strings, so all entry points go
// through make_rat / parse_rat.
Rat make_rat(const Int& num, const Int& den);

// Accepts "p", "p/q" and plain integer strings with optional sign.
Rat parse_rat(const std::string& text);

std::string format_rat(const Rat& q);

double rat_to_double(const Rat& q);

// Closed interval [lo, hi] with rational endpoints.
struct RatInterval {
    Rat lo;
    Rat hi;

    Rat width() const { return hi - lo; }
    Rat midpoint() const { return (lo + hi) / 2; }
    bool contains_zero() const { return lo <= 0 && hi >= 0; }
};

RatInterval iv_add(const RatInterval& a, const RatInterval& b);
RatInterval iv_sub(const RatInterval& a, const RatInterval& b);
RatInterval iv_mul(const RatInterval& a, const RatInterval& b);
RatInterval iv_scale(const Rat& c, const RatInterval& a);

// Dense univariate polynomial over Q, coeffs[i] multiplies x^i.
// The zero polynomial is the empty vector.
using RatPoly = std::vector<Rat>;

RatPoly poly_trim(RatPoly p);
int poly_degree(const RatPoly& p); // -1 for the zero polynomial
bool poly_is_zero(const RatPoly& p);
RatPoly poly_add(const RatPoly& a, const RatPoly& b);
RatPoly poly_sub(const RatPoly& a, const RatPoly& b);
RatPoly poly_mul(const RatPoly& a, const RatPoly& b);
RatPoly poly_scale(const Rat& c, const RatPoly& p);
RatPoly poly_derivative(const RatPoly& p);
RatPoly poly_monic(const RatPoly& p);

// Euclidean division, b != 0; returns {quotient, remainder}.
std::pair<RatPoly, RatPoly> poly_divmod(const RatPoly& a, const RatPoly& b);

// Monic gcd; gcd(0, 0) = 0.
RatPoly poly_gcd(const RatPoly& a, const RatPoly& b);

Rat poly_eval(const RatPoly& p, const Rat& x);
RatInterval poly_eval_interval(const RatPoly& p, const RatInterval& x);

// Sturm chain of p (assumed squarefree for exact counts).
std::vector<RatPoly> sturm_chain(const RatPoly& p);

// Number of distinct real roots of p in (lo, hi); requires p(lo), p(hi) != 0.
int count_roots_in(const std::vector<RatPoly>& chain, const Rat& lo, const Rat& hi);

// True if p has a rational root; exhaustive over divisors of the primitive
// integer form, bailing out (returning false) when the coefficient bound
// makes divisor enumeration unreasonable. Used only as a validation
// heuristic for number-field declarations.
bool poly_has_rational_root(const RatPoly& p);

} // namespace nilflow
