#include "grid.hpp"

#include <algorithm>
#include <cmath>

namespace flowcast {

GridSpec::GridSpec(int h, int w, double lx, double ly) : height(h), width(w), length_x(lx), length_y(ly) {
    if (h < 8 || w < 8 || h % 2 != 0 || w % 2 != 0) {
        throw config_error("grid dimensions must be even and at least 8, got " + std::to_string(h) + "x" +
                           std::to_string(w));
    }
    if (lx <= 0.0 || ly <= 0.0) {
        throw config_error("grid domain lengths must be positive");
    }
}

ScalarField::ScalarField(GridSpec grid, std::string variable, std::string unit, double fill)
    : grid_(grid), variable_(std::move(variable)), unit_(std::move(unit)),
      values_(static_cast<size_t>(grid.cells()), fill) {}

ScalarField::ScalarField(GridSpec grid, std::string variable, std::string unit, std::vector<double> values)
    : grid_(grid), variable_(std::move(variable)), unit_(std::move(unit)), values_(std::move(values)) {
    if (values_.size() != static_cast<size_t>(grid_.cells())) {
        throw runtime_error("field '" + variable_ + "': value count does not match grid " +
                            std::to_string(grid_.height) + "x" + std::to_string(grid_.width));
    }
}

double ScalarField::at_wrapped(int row, int col) const {
    int h = grid_.height, w = grid_.width;
    row = ((row % h) + h) % h;
    col = ((col % w) + w) % w;
    return at(row, col);
}

bool ScalarField::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void ScalarField::require_finite(const std::string& context) const {
    if (!all_finite()) {
        throw runtime_error(context + ": field '" + variable_ + "' contains non-finite values");
    }
}

VectorField::VectorField(ScalarField u_in, ScalarField v_in) : u(std::move(u_in)), v(std::move(v_in)) {
    if (!(u.grid() == v.grid())) {
        throw runtime_error("velocity components live on different grids");
    }
}

void FlowState::add_channel(ScalarField field) {
    if (has_channel(field.variable())) {
        throw runtime_error("duplicate channel '" + field.variable() + "'");
    }
    if (!channels_.empty() && !(channels_.front().grid() == field.grid())) {
        throw runtime_error("channel '" + field.variable() + "' grid does not match state grid");
    }
    channels_.push_back(std::move(field));
}

bool FlowState::has_channel(const std::string& variable) const {
    return std::any_of(channels_.begin(), channels_.end(),
                       [&](const ScalarField& f) { return f.variable() == variable; });
}

const ScalarField& FlowState::channel(const std::string& variable) const {
    for (const auto& f : channels_) {
        if (f.variable() == variable) return f;
    }
    throw runtime_error("unknown channel '" + variable + "'");
}

ScalarField& FlowState::channel(const std::string& variable) {
    for (auto& f : channels_) {
        if (f.variable() == variable) return f;
    }
    throw runtime_error("unknown channel '" + variable + "'");
}

VectorField FlowState::velocity() const {
    return VectorField(channel("u"), channel("v"));
}

FieldStats field_stats(const ScalarField& f) {
    f.require_finite("field_stats");
    const auto& v = f.values();
    FieldStats s;
    s.min = v[0];
    s.max = v[0];
    double sum = 0.0;
    for (double x : v) {
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
        sum += x;
    }
    s.mean = sum / static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) {
        double d = x - s.mean;
        var += d * d;
    }
    s.std_dev = std::sqrt(var / static_cast<double>(v.size()));
    return s;
}

double kinetic_energy(const VectorField& f) {
    double sum = 0.0;
    const auto& uu = f.u.values();
    const auto& vv = f.v.values();
    for (size_t i = 0; i < uu.size(); ++i) sum += uu[i] * uu[i] + vv[i] * vv[i];
    return sum * f.grid().cell_area();
}

double enstrophy(const ScalarField& vorticity_field) {
    double sum = 0.0;
    for (double w : vorticity_field.values()) sum += w * w;
    return sum * vorticity_field.grid().cell_area();
}

}  // namespace flowcast
