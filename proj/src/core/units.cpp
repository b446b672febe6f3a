#include "units.hpp"

namespace flowcast {

namespace {

constexpr double kKelvinOffset = 273.15;

bool is_celsius(const std::string& u) { return u == "degC" || u == "C" || u == "\xc2\xb0" "C"; }

}  // namespace

bool unit_convertible(const std::string& from, const std::string& to) {
    if (from == to) return true;
    if (from == "K" && is_celsius(to)) return true;
    if (is_celsius(from) && to == "K") return true;
    if (from == "Pa" && to == "hPa") return true;
    if (from == "hPa" && to == "Pa") return true;
    return false;
}

double convert_value(double value, const std::string& from, const std::string& to) {
    if (from == to) return value;
    if (from == "K" && is_celsius(to)) return value - kKelvinOffset;
    if (is_celsius(from) && to == "K") return value + kKelvinOffset;
    if (from == "Pa" && to == "hPa") return value / 100.0;
    if (from == "hPa" && to == "Pa") return value * 100.0;
    throw runtime_error("unsupported unit conversion '" + from + "' -> '" + to + "'");
}

ScalarField convert_units(const ScalarField& f, const std::string& target_unit) {
    if (f.unit() == target_unit) {
        return f;
    }
    if (!unit_convertible(f.unit(), target_unit)) {
        throw runtime_error("unsupported unit conversion '" + f.unit() + "' -> '" + target_unit + "'");
    }
    ScalarField out = f;
    for (double& v : out.values()) v = convert_value(v, f.unit(), target_unit);
    out.set_unit(target_unit);
    return out;
}

}  // namespace flowcast
