#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nilflow/rat.hpp"

namespace nilflow {

class NumberField;
using FieldPtr = std::shared_ptr<const NumberField>;

/// A real number field Q(theta), given by a monic squarefree minimal
/// polynomial together with a rational interval isolating one real root.
/// Degree 1 is plain Q. One field instance is shared by every exact value
/// of a scenario; instances are immutable.
class NumberField : public std::enable_shared_from_this<NumberField> {
public:
    static FieldPtr rationals();

    // minpoly coefficients by ascending degree, monic, degree >= 1.
    // (lo, hi) must contain exactly one real root, with a sign change.
    static FieldPtr make(RatPoly minpoly, Rat lo, Rat hi);

    int degree() const { return degree_; }
    const RatPoly& minpoly() const { return minpoly_; }
    const RatInterval& declared_interval() const { return declared_; }

    // Isolating interval refined at construction (width <= 2^-64 unless the
    // root is rational, in which case the interval is a point).
    const RatInterval& root_interval() const { return refined_; }

    // Bisect a copy of the refined interval down to the requested width.
    RatInterval refine_root(const Rat& max_width) const;

    bool same_field(const NumberField& other) const;

private:
    NumberField() = default;

    RatPoly minpoly_;
    RatInterval declared_{Rat(0), Rat(0)};
    RatInterval refined_{Rat(0), Rat(0)};
    int degree_ = 0;
};

/// Element of Q(theta): coefficient vector of length degree(field),
/// value = sum coeffs[k] * theta^k. Immutable value type.
class Scalar {
public:
    Scalar(); // zero over Q
    explicit Scalar(const Rat& q);
    explicit Scalar(long n);
    Scalar(FieldPtr field, std::vector<Rat> coeffs);
    Scalar(FieldPtr field, const Rat& q); // rational embedded in the field

    static Scalar theta(const FieldPtr& field);
    static Scalar zero(const FieldPtr& field);
    static Scalar one(const FieldPtr& field);

    const FieldPtr& field() const { return field_; }
    const std::vector<Rat>& coeffs() const { return coeffs_; }

    // Q-basis expansion (a copy of coeffs); length = degree of the field.
    std::vector<Rat> rational_coords() const { return coeffs_; }

    bool is_zero() const;     // exact, handles reducible minpoly via gcd test
    bool is_rational() const; // value lies in Q
    Rat rational_value() const;

    int sign() const;                       // -1, 0, +1, exact
    RatInterval approx(const Rat& eps) const; // certified interval, width <= eps
    double to_double() const;               // approx at 1e-12, then rounded

    Scalar operator-() const;
    Scalar operator+(const Scalar& o) const;
    Scalar operator-(const Scalar& o) const;
    Scalar operator*(const Scalar& o) const;
    Scalar operator/(const Scalar& o) const;
    Scalar& operator+=(const Scalar& o);
    Scalar& operator-=(const Scalar& o);
    Scalar& operator*=(const Scalar& o);

    Scalar inv() const;

    bool operator==(const Scalar& o) const;
    bool operator!=(const Scalar& o) const { return !(*this == o); }

    std::string str() const; // e.g. "1+2*th", "-1/2", "th"

private:
    // Lift both operands into a common field; plain rationals promote freely,
    // genuinely different extensions are a domain mismatch.
    static void align(Scalar& a, Scalar& b);

    RatInterval refine_root_step(const RatInterval& iv) const;

    FieldPtr field_;
    std::vector<Rat> coeffs_;
};

Scalar operator*(const Rat& c, const Scalar& a);

} // namespace nilflow
