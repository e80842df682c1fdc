#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <string_view>

#include "dicke/double_double.hpp"

namespace dicke {

/// 120-decimal-digit MPFR float; the fallback when double-double runs out of digits.
using MpFloat = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<120, boost::multiprecision::allocate_stack>,
                                              boost::multiprecision::et_off>;

enum class Precision { Double, Extended };

std::string_view to_string(Precision p);
Precision parse_precision(std::string_view s);

/// Uniform access to constants and conversions for the three arithmetic backends.
template <class T>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
    static constexpr std::string_view name = "double";
    static double epsilon() { return 1.1102230246251565e-16; }
    static double from(double x) { return x; }
    static double to_double(double x) { return x; }
    static double pi() { return 3.141592653589793; }
};

template <>
struct ScalarTraits<DoubleDouble> {
    static constexpr std::string_view name = "double-double";
    static double epsilon() { return dd_const::epsilon; }
    static DoubleDouble from(double x) { return DoubleDouble(x); }
    static double to_double(DoubleDouble x) { return static_cast<double>(x); }
    static DoubleDouble pi() { return dd_const::pi; }
};

template <>
struct ScalarTraits<MpFloat> {
    static constexpr std::string_view name = "mpfr-120";
    static double epsilon() { return 1e-120; }
    static MpFloat from(double x) { return MpFloat(x); }
    static double to_double(const MpFloat& x) { return x.convert_to<double>(); }
    static MpFloat pi() {
        static const MpFloat value = [] {
            MpFloat p;
            mpfr_const_pi(p.backend().data(), MPFR_RNDN);
            return p;
        }();
        return value;
    }
};

}  // namespace dicke
