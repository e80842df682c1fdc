#pragma once

#include <cmath>
#include <compare>
#include <iosfwd>
#include <string>

namespace dicke {

/**
 * Unevaluated sum of two doubles, hi + lo with |lo| <= ulp(hi)/2.
 *
 * Gives roughly 106 bits of significand (about 32 decimal digits) with the
 * exponent range of binary64. Arithmetic is built from the error-free
 * transformations two_sum and two_prod (the latter relies on a fused
 * multiply-add), so translation units using this type must not enable
 * floating-point contraction or fast-math.
 */
class DoubleDouble {
public:
    constexpr DoubleDouble() = default;
    constexpr DoubleDouble(double x) : hi_(x), lo_(0.0) {}
    constexpr DoubleDouble(int x) : hi_(static_cast<double>(x)), lo_(0.0) {}
    constexpr DoubleDouble(double hi, double lo) : hi_(hi), lo_(lo) {}

    constexpr double hi() const { return hi_; }
    constexpr double lo() const { return lo_; }
    explicit constexpr operator double() const { return hi_ + lo_; }

    static DoubleDouble from_sum(double a, double b);
    static DoubleDouble from_product(double a, double b);

    friend DoubleDouble operator+(DoubleDouble a, DoubleDouble b);
    friend DoubleDouble operator-(DoubleDouble a, DoubleDouble b);
    friend DoubleDouble operator*(DoubleDouble a, DoubleDouble b);
    friend DoubleDouble operator/(DoubleDouble a, DoubleDouble b);
    friend DoubleDouble operator*(DoubleDouble a, double b);
    friend constexpr DoubleDouble operator-(DoubleDouble a) { return {-a.hi_, -a.lo_}; }

    DoubleDouble& operator+=(DoubleDouble b) { return *this = *this + b; }
    DoubleDouble& operator-=(DoubleDouble b) { return *this = *this - b; }
    DoubleDouble& operator*=(DoubleDouble b) { return *this = *this * b; }
    DoubleDouble& operator/=(DoubleDouble b) { return *this = *this / b; }

    friend constexpr bool operator==(DoubleDouble a, DoubleDouble b) {
        return a.hi_ == b.hi_ && a.lo_ == b.lo_;
    }
    friend constexpr std::partial_ordering operator<=>(DoubleDouble a, DoubleDouble b) {
        if (auto c = a.hi_ <=> b.hi_; c != 0) return c;
        return a.lo_ <=> b.lo_;
    }

private:
    double hi_ = 0.0;
    double lo_ = 0.0;
};

namespace dd_detail {

inline DoubleDouble quick_two_sum(double a, double b) {
    const double s = a + b;
    return {s, b - (s - a)};
}

inline DoubleDouble two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

inline DoubleDouble two_prod(double a, double b) {
    const double p = a * b;
    return {p, std::fma(a, b, -p)};
}

}  // namespace dd_detail

inline DoubleDouble DoubleDouble::from_sum(double a, double b) { return dd_detail::two_sum(a, b); }
inline DoubleDouble DoubleDouble::from_product(double a, double b) { return dd_detail::two_prod(a, b); }

inline DoubleDouble operator+(DoubleDouble a, DoubleDouble b) {
    using namespace dd_detail;
    DoubleDouble s = two_sum(a.hi_, b.hi_);
    DoubleDouble t = two_sum(a.lo_, b.lo_);
    double e = s.lo_ + t.hi_;
    s = quick_two_sum(s.hi_, e);
    e = s.lo_ + t.lo_;
    return quick_two_sum(s.hi_, e);
}

inline DoubleDouble operator-(DoubleDouble a, DoubleDouble b) { return a + (-b); }

inline DoubleDouble operator*(DoubleDouble a, DoubleDouble b) {
    using namespace dd_detail;
    DoubleDouble p = two_prod(a.hi_, b.hi_);
    const double e = p.lo_ + (a.hi_ * b.lo_ + a.lo_ * b.hi_);
    return quick_two_sum(p.hi_, e);
}

inline DoubleDouble operator*(DoubleDouble a, double b) {
    using namespace dd_detail;
    DoubleDouble p = two_prod(a.hi_, b);
    return quick_two_sum(p.hi_, p.lo_ + a.lo_ * b);
}

inline DoubleDouble operator/(DoubleDouble a, DoubleDouble b) {
    using namespace dd_detail;
    const double q1 = a.hi_ / b.hi_;
    DoubleDouble r = a - b * q1;
    const double q2 = r.hi_ / b.hi_;
    r = r - b * q2;
    const double q3 = r.hi_ / b.hi_;
    return quick_two_sum(q1, q2) + DoubleDouble(q3);
}

// Mixed-mode overloads so that generic code can write `x * 2.0`, `1.0 - x`.
inline DoubleDouble operator+(DoubleDouble a, double b) { return a + DoubleDouble(b); }
inline DoubleDouble operator+(double a, DoubleDouble b) { return DoubleDouble(a) + b; }
inline DoubleDouble operator-(DoubleDouble a, double b) { return a - DoubleDouble(b); }
inline DoubleDouble operator-(double a, DoubleDouble b) { return DoubleDouble(a) - b; }
inline DoubleDouble operator*(double a, DoubleDouble b) { return b * a; }
inline DoubleDouble operator/(DoubleDouble a, double b) { return a / DoubleDouble(b); }
inline DoubleDouble operator/(double a, DoubleDouble b) { return DoubleDouble(a) / b; }

inline DoubleDouble abs(DoubleDouble a) { return a.hi() < 0.0 ? -a : a; }
inline DoubleDouble ldexp(DoubleDouble a, int e) { return {std::ldexp(a.hi(), e), std::ldexp(a.lo(), e)}; }
inline bool isfinite(DoubleDouble a) { return std::isfinite(a.hi()); }
inline double to_double(DoubleDouble a) { return static_cast<double>(a); }

DoubleDouble sqrt(DoubleDouble a);
DoubleDouble exp(DoubleDouble a);
DoubleDouble log(DoubleDouble a);
DoubleDouble sin(DoubleDouble a);
DoubleDouble cos(DoubleDouble a);

namespace dd_const {
inline constexpr DoubleDouble pi{3.141592653589793116e+00, 1.224646799147353207e-16};
inline constexpr DoubleDouble half_pi{1.570796326794896558e+00, 6.123233995736766036e-17};
inline constexpr DoubleDouble ln2{6.931471805599452862e-01, 2.319046813846299558e-17};
// 2^-104, half an ulp of the combined significand.
inline constexpr double epsilon = 4.93038065763132e-32;
}  // namespace dd_const

/// Shortest round-trippable form is not attempted; prints ~32 significant digits.
std::string to_string(DoubleDouble a, int digits = 32);
std::ostream& operator<<(std::ostream& os, DoubleDouble a);

}  // namespace dicke
