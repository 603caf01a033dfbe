#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace pentropy {

/// 50 decimal digit binary float; used for circle-rotation endpoint
/// arithmetic so that arc-coincidence decisions are stable.
using Real50 = boost::multiprecision::cpp_bin_float_50;

/// Exact rational with arbitrary-precision integer parts; used for all
/// tower-level interval endpoints.
using Rational = boost::multiprecision::cpp_rational;

/// Fractional part in [0, 1).
inline Real50 frac(const Real50& x) {
    Real50 f = x - boost::multiprecision::floor(x);
    if (f >= 1) f -= 1;  // guards the boundary rounding case
    if (f < 0) f += 1;
    return f;
}

}  // namespace pentropy
