#pragma once

#include <string>

#include "grid.hpp"

namespace flowcast {

// Supported conversions: K <-> degC, Pa <-> hPa, plus identity for any unit.
bool unit_convertible(const std::string& from, const std::string& to);

double convert_value(double value, const std::string& from, const std::string& to);

// Returns a copy of the field in the target unit. Identity conversions
// return a bit-identical copy. Unsupported pairs raise an error.
ScalarField convert_units(const ScalarField& f, const std::string& target_unit);

}  // namespace flowcast
