#pragma once

// Plain double overloads of the primitives the account and impact code is
// written against. The tape type in deephedge::ad provides the same names,
// so templated code picks either through ordinary lookup or ADL.

#include <cmath>

namespace deephedge {

inline double pos_part(double x) { return x > 0.0 ? x : 0.0; }
inline double neg_part(double x) { return x < 0.0 ? -x : 0.0; }
inline double pow_const(double x, double exponent) { return std::pow(x, exponent); }
inline double expm1(double x) { return std::expm1(x); }
inline double log1p(double x) { return std::log1p(x); }

// 1 when x > threshold, else 0. Not differentiable on a tape.
inline double greater_than(double x, double threshold) { return x > threshold ? 1.0 : 0.0; }

// Constant with the same shape as `like`; a plain number for doubles.
inline double constant_like(double /*like*/, double value) { return value; }

inline double value_of(double x) { return x; }

}  // namespace deephedge
