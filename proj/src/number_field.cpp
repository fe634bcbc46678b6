#include "nilflow/number_field.hpp"

#include <sstream>

namespace nilflow {

namespace {

int rat_sign(const Rat& q) {
    return q > 0 ? 1 : (q < 0 ? -1 : 0);
}

// One bisection step preserving the sign change; collapses to a point if the
// midpoint is an exact root.
RatInterval bisect_once(const RatPoly& p, const RatInterval& iv) {
    if (iv.lo == iv.hi) return iv;
    Rat mid = iv.midpoint();
    Rat vm = poly_eval(p, mid);
    if (vm == 0) return {mid, mid};
    int slo = rat_sign(poly_eval(p, iv.lo));
    if (slo == 0) return {iv.lo, iv.lo};
    if (rat_sign(vm) != slo) return {iv.lo, mid};
    return {mid, iv.hi};
}

RatInterval bisect_to_width(const RatPoly& p, RatInterval iv, const Rat& max_width) {
    while (iv.width() > max_width) {
        iv = bisect_once(p, iv);
    }
    return iv;
}

} // namespace

FieldPtr NumberField::rationals() {
    static FieldPtr q = [] {
        RatPoly x = {Rat(0), Rat(1)}; // minpoly x, root 0
        return NumberField::make(x, Rat(-1), Rat(1));
    }();
    return q;
}

FieldPtr NumberField::make(RatPoly minpoly, Rat lo, Rat hi) {
    minpoly = poly_trim(std::move(minpoly));
    int deg = poly_degree(minpoly);
    if (deg < 1) {
        throw ScenarioError("minpoly must have degree >= 1");
    }
    if (minpoly.back() != 1) {
        throw ScenarioError("minpoly must be monic");
    }
    RatPoly g = poly_gcd(minpoly, poly_derivative(minpoly));
    if (poly_degree(g) > 0) {
        throw ScenarioError("minpoly must be squarefree");
    }
    if (!(lo < hi)) {
        throw ScenarioError("root interval must satisfy lo < hi");
    }
    Rat vlo = poly_eval(minpoly, lo);
    Rat vhi = poly_eval(minpoly, hi);
    if (vlo == 0 || vhi == 0 || rat_sign(vlo) == rat_sign(vhi)) {
        throw ScenarioError("minpoly must change sign strictly between lo and hi");
    }
    auto chain = sturm_chain(minpoly);
    if (count_roots_in(chain, lo, hi) != 1) {
        throw ScenarioError("root interval must isolate exactly one root of minpoly");
    }
    if (deg >= 2 && poly_has_rational_root(minpoly)) {
        // Heuristic stand-in for irreducibility: a rational root would make
        // {1, theta, ..., theta^(d-1)} dependent over Q.
        throw ScenarioError("minpoly has a rational root; powers of theta would be Q-dependent");
    }

    auto f = std::shared_ptr<NumberField>(new NumberField());
    f->minpoly_ = std::move(minpoly);
    f->degree_ = deg;
    f->declared_ = {lo, hi};
    Rat target = make_rat(1, Int(1) << 64);
    f->refined_ = bisect_to_width(f->minpoly_, f->declared_, target);
    return f;
}

RatInterval NumberField::refine_root(const Rat& max_width) const {
    return bisect_to_width(minpoly_, refined_, max_width);
}

bool NumberField::same_field(const NumberField& other) const {
    if (this == &other) return true;
    return minpoly_ == other.minpoly_ && declared_.lo == other.declared_.lo &&
           declared_.hi == other.declared_.hi;
}

Scalar::Scalar() : field_(NumberField::rationals()), coeffs_{Rat(0)} {}

Scalar::Scalar(const Rat& q) : field_(NumberField::rationals()), coeffs_{q} {}

Scalar::Scalar(long n) : Scalar(Rat(n)) {}

Scalar::Scalar(FieldPtr field, std::vector<Rat> coeffs)
    : field_(std::move(field)), coeffs_(std::move(coeffs)) {
    if (static_cast<int>(coeffs_.size()) != field_->degree()) {
        throw DimensionError("scalar coefficient count must equal the field degree");
    }
}

Scalar::Scalar(FieldPtr field, const Rat& q) : field_(std::move(field)) {
    coeffs_.assign(field_->degree(), Rat(0));
    coeffs_[0] = q;
}

Scalar Scalar::theta(const FieldPtr& field) {
    if (field->degree() < 2) {
        // For degree 1 the generator is the rational root itself.
        return Scalar(field, -field->minpoly()[0]);
    }
    std::vector<Rat> c(field->degree(), Rat(0));
    c[1] = 1;
    return Scalar(field, std::move(c));
}

Scalar Scalar::zero(const FieldPtr& field) { return Scalar(field, Rat(0)); }
Scalar Scalar::one(const FieldPtr& field) { return Scalar(field, Rat(1)); }

void Scalar::align(Scalar& a, Scalar& b) {
    if (a.field_->same_field(*b.field_)) return;
    if (a.field_->degree() == 1 && a.is_rational()) {
        a = Scalar(b.field_, a.coeffs_[0]);
        return;
    }
    if (b.field_->degree() == 1 && b.is_rational()) {
        b = Scalar(a.field_, b.coeffs_[0]);
        return;
    }
    throw DomainMismatchError("scalars from different number fields");
}

bool Scalar::is_zero() const {
    bool all_zero = true;
    for (const auto& c : coeffs_) {
        if (c != 0) { all_zero = false; break; }
    }
    if (all_zero) return true;
    if (field_->degree() == 1) return false;
    // The minpoly is only asserted irreducible; a nonzero coefficient vector
    // can still evaluate to zero at theta if it shares a factor with minpoly.
    RatPoly g = poly_gcd(RatPoly(coeffs_), field_->minpoly());
    if (poly_degree(g) < 1) return false;
    const RatInterval& iv = field_->root_interval();
    if (iv.lo == iv.hi) return poly_eval(g, iv.lo) == 0;
    auto chain = sturm_chain(g);
    return count_roots_in(chain, iv.lo, iv.hi) > 0;
}

bool Scalar::is_rational() const {
    for (size_t k = 1; k < coeffs_.size(); ++k) {
        if (coeffs_[k] != 0) return false;
    }
    return true;
}

Rat Scalar::rational_value() const {
    if (!is_rational()) {
        // The value may still be rational when minpoly is reducible, but the
        // supported contract is coefficient-level rationality.
        throw DomainMismatchError("scalar is not rational");
    }
    return coeffs_[0];
}

int Scalar::sign() const {
    if (is_zero()) return 0;
    if (is_rational()) return rat_sign(coeffs_[0]);
    RatInterval iv = field_->root_interval();
    for (int iter = 0; iter < 100000; ++iter) {
        RatInterval val = poly_eval_interval(RatPoly(coeffs_), iv);
        if (val.lo > 0) return 1;
        if (val.hi < 0) return -1;
        if (iv.lo == iv.hi) {
            return rat_sign(poly_eval(RatPoly(coeffs_), iv.lo));
        }
        iv = refine_root_step(iv);
    }
    throw Error("sign refinement failed to terminate");
}

// out-of-class helper so sign() can share the field's minpoly
RatInterval Scalar::refine_root_step(const RatInterval& iv) const {
    Rat mid = iv.midpoint();
    Rat vm = poly_eval(field_->minpoly(), mid);
    if (vm == 0) return {mid, mid};
    int slo = rat_sign(poly_eval(field_->minpoly(), iv.lo));
    if (rat_sign(vm) != slo) return {iv.lo, mid};
    return {mid, iv.hi};
}

RatInterval Scalar::approx(const Rat& eps) const {
    if (eps <= 0) throw DimensionError("approx requires eps > 0");
    if (is_rational()) return {coeffs_[0], coeffs_[0]};
    RatInterval iv = field_->root_interval();
    RatInterval val = poly_eval_interval(RatPoly(coeffs_), iv);
    while (val.width() > eps && iv.lo != iv.hi) {
        iv = refine_root_step(iv);
        val = poly_eval_interval(RatPoly(coeffs_), iv);
    }
    return val;
}

double Scalar::to_double() const {
    static const Rat eps = make_rat(1, Int("1000000000000"));
    RatInterval iv = approx(eps);
    return rat_to_double(iv.midpoint());
}

Scalar Scalar::operator-() const {
    std::vector<Rat> c = coeffs_;
    for (auto& x : c) x = -x;
    return Scalar(field_, std::move(c));
}

Scalar Scalar::operator+(const Scalar& o) const {
    Scalar a = *this, b = o;
    align(a, b);
    std::vector<Rat> c = a.coeffs_;
    for (size_t i = 0; i < c.size(); ++i) c[i] += b.coeffs_[i];
    return Scalar(a.field_, std::move(c));
}

Scalar Scalar::operator-(const Scalar& o) const {
    return *this + (-o);
}

Scalar Scalar::operator*(const Scalar& o) const {
    Scalar a = *this, b = o;
    align(a, b);
    RatPoly prod = poly_mul(RatPoly(a.coeffs_), RatPoly(b.coeffs_));
    RatPoly rem = poly_divmod(prod, a.field_->minpoly()).second;
    rem.resize(a.field_->degree(), Rat(0));
    return Scalar(a.field_, std::move(rem));
}

Scalar Scalar::operator/(const Scalar& o) const {
    return *this * o.inv();
}

Scalar& Scalar::operator+=(const Scalar& o) { return *this = *this + o; }
Scalar& Scalar::operator-=(const Scalar& o) { return *this = *this - o; }
Scalar& Scalar::operator*=(const Scalar& o) { return *this = *this * o; }

Scalar Scalar::inv() const {
    if (is_zero()) throw DivisionByZeroError("inverse of zero");
    if (is_rational()) return Scalar(field_, Rat(1) / coeffs_[0]);
    // extended Euclid on (a, minpoly) over Q[x]
    RatPoly r0 = field_->minpoly(), r1 = poly_trim(RatPoly(coeffs_));
    RatPoly s0 = {}, s1 = {Rat(1)}; // s tracks the coefficient of a
    while (!r1.empty()) {
        auto [q, r2] = poly_divmod(r0, r1);
        RatPoly s2 = poly_sub(s0, poly_mul(q, s1));
        r0 = std::move(r1);
        r1 = std::move(r2);
        s0 = std::move(s1);
        s1 = std::move(s2);
    }
    // r0 = gcd, s0 * a = r0 (mod minpoly)
    if (poly_degree(r0) > 0) {
        throw DomainMismatchError(
            "element has no inverse modulo minpoly (minpoly is reducible)");
    }
    RatPoly inv_poly = poly_scale(Rat(1) / r0[0], s0);
    RatPoly rem = poly_divmod(inv_poly, field_->minpoly()).second;
    rem.resize(field_->degree(), Rat(0));
    return Scalar(field_, std::move(rem));
}

bool Scalar::operator==(const Scalar& o) const {
    Scalar a = *this, b = o;
    align(a, b);
    return (a - b).is_zero();
}

std::string Scalar::str() const {
    std::ostringstream out;
    bool wrote = false;
    for (size_t k = 0; k < coeffs_.size(); ++k) {
        if (coeffs_[k] == 0) continue;
        if (wrote && coeffs_[k] > 0) out << "+";
        if (k == 0) {
            out << format_rat(coeffs_[k]);
        } else {
            if (coeffs_[k] == 1) {
            } else if (coeffs_[k] == -1) {
                out << "-";
            } else {
                out << format_rat(coeffs_[k]) << "*";
            }
            out << "th";
            if (k > 1) out << "^" << k;
        }
        wrote = true;
    }
    if (!wrote) out << "0";
    return out.str();
}

Scalar operator*(const Rat& c, const Scalar& a) {
    std::vector<Rat> r = a.coeffs();
    for (auto& x : r) x *= c;
    return Scalar(a.field(), std::move(r));
}

} // namespace nilflow
