#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace psjs {

using Rational = mpq_class;

// Accepts "3", "0.25", "1/4", "-2", ".5" and "1e-3" as exact values.
Rational parse_rational(std::string_view text);

// Always "num/den" in lowest terms, including "1/1".
std::string to_fraction_string(const Rational& r);

Rational rational_from_double(double x);

inline double to_double(const Rational& r) { return r.get_d(); }

} // namespace psjs
