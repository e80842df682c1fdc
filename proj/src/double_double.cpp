#include "dicke/double_double.hpp"

#include <limits>
#include <ostream>

namespace dicke {

namespace {

constexpr double kTaylorCutoff = 1e-35;

// Taylor series for sin and cos on |r| <= pi/4.
void sin_cos_reduced(DoubleDouble r, DoubleDouble& s, DoubleDouble& c) {
    const DoubleDouble r2 = r * r;
    DoubleDouble term = r;
    s = r;
    for (int k = 1; k < 40; ++k) {
        term = -term * r2 / DoubleDouble(static_cast<double>((2 * k) * (2 * k + 1)));
        s += term;
        if (std::abs(term.hi()) < kTaylorCutoff) break;
    }
    term = DoubleDouble(1.0);
    c = term;
    for (int k = 1; k < 40; ++k) {
        term = -term * r2 / DoubleDouble(static_cast<double>((2 * k - 1) * (2 * k)));
        c += term;
        if (std::abs(term.hi()) < kTaylorCutoff) break;
    }
}

// Returns r with a = k*pi/2 + r, |r| <= pi/4, and k mod 4 in `quadrant`.
DoubleDouble reduce_half_pi(DoubleDouble a, int& quadrant) {
    const double k = std::nearbyint(a.hi() / dd_const::half_pi.hi());
    DoubleDouble r = a - dd_const::half_pi * k;
    quadrant = static_cast<int>(std::fmod(k, 4.0));
    if (quadrant < 0) quadrant += 4;
    return r;
}

}  // namespace

DoubleDouble sqrt(DoubleDouble a) {
    if (a.hi() <= 0.0) return DoubleDouble(a.hi() == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN());
    const double x = std::sqrt(a.hi());
    const DoubleDouble y(x);
    return y + (a - DoubleDouble::from_product(x, x)) * (0.5 / x);
}

DoubleDouble exp(DoubleDouble a) {
    if (a.hi() < -745.0) return DoubleDouble(0.0);
    if (a.hi() > 709.0) return DoubleDouble(std::numeric_limits<double>::infinity());
    if (a.hi() == 0.0) return DoubleDouble(1.0);

    const double k = std::nearbyint(a.hi() / dd_const::ln2.hi());
    DoubleDouble r = a - dd_const::ln2 * k;
    r = ldexp(r, -10);

    // expm1 of the reduced argument, then undo the 2^-10 scaling by squaring.
    DoubleDouble term = r;
    DoubleDouble em1 = r;
    for (int i = 2; i < 30; ++i) {
        term = term * r / DoubleDouble(static_cast<double>(i));
        em1 += term;
        if (std::abs(term.hi()) < kTaylorCutoff) break;
    }
    for (int i = 0; i < 10; ++i) em1 = em1 * 2.0 + em1 * em1;
    const DoubleDouble result = em1 + 1.0;
    return ldexp(result, static_cast<int>(k));
}

DoubleDouble log(DoubleDouble a) {
    if (a.hi() <= 0.0) return DoubleDouble(std::numeric_limits<double>::quiet_NaN());
    DoubleDouble y(std::log(a.hi()));
    y = y + a * exp(-y) - 1.0;
    return y;
}

DoubleDouble sin(DoubleDouble a) {
    int q = 0;
    const DoubleDouble r = reduce_half_pi(a, q);
    DoubleDouble s, c;
    sin_cos_reduced(r, s, c);
    switch (q) {
        case 0: return s;
        case 1: return c;
        case 2: return -s;
        default: return -c;
    }
}

DoubleDouble cos(DoubleDouble a) {
    int q = 0;
    const DoubleDouble r = reduce_half_pi(a, q);
    DoubleDouble s, c;
    sin_cos_reduced(r, s, c);
    switch (q) {
        case 0: return c;
        case 1: return -s;
        case 2: return -c;
        default: return s;
    }
}

std::string to_string(DoubleDouble a, int digits) {
    if (!std::isfinite(a.hi())) return std::to_string(a.hi());
    if (a.hi() == 0.0) return "0";
    std::string out;
    if (a.hi() < 0.0) {
        out += '-';
        a = -a;
    }
    int e10 = static_cast<int>(std::floor(std::log10(a.hi())));
    DoubleDouble scale(1.0);
    const DoubleDouble ten(10.0);
    for (int i = 0; i < std::abs(e10); ++i) scale *= ten;
    DoubleDouble x = e10 >= 0 ? a / scale : a * scale;
    if (x.hi() >= 10.0) {
        x = x / ten;
        ++e10;
    } else if (x.hi() < 1.0) {
        x *= ten;
        --e10;
    }
    std::string mant;
    for (int i = 0; i < digits; ++i) {
        int d = static_cast<int>(std::floor(x.hi()));
        DoubleDouble rem = x - DoubleDouble(static_cast<double>(d));
        if (rem.hi() < 0.0) {
            --d;
            rem += 1.0;
        }
        if (d < 0) d = 0;
        if (d > 9) d = 9;
        mant += static_cast<char>('0' + d);
        x = rem * ten;
    }
    out += mant.substr(0, 1);
    out += '.';
    out += mant.substr(1);
    out += 'e';
    out += std::to_string(e10);
    return out;
}

std::ostream& operator<<(std::ostream& os, DoubleDouble a) { return os << to_string(a); }

}  // namespace dicke
