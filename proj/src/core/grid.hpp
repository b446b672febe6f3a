#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "error.hpp"

namespace flowcast {

// Uniform periodic grid. Spectral transforms require even dimensions >= 8.
struct GridSpec {
    int height = 0;  // rows (y direction)
    int width = 0;   // columns (x direction)
    double length_x = 2.0 * M_PI;
    double length_y = 2.0 * M_PI;
    bool periodic = true;  // always true in v1; spectral operators require it

    GridSpec() = default;
    GridSpec(int h, int w, double lx = 2.0 * M_PI, double ly = 2.0 * M_PI);

    int cells() const { return height * width; }
    double dx() const { return length_x / width; }
    double dy() const { return length_y / height; }
    double cell_area() const { return dx() * dy(); }
    double x(int col) const { return dx() * col; }
    double y(int row) const { return dy() * row; }

    bool operator==(const GridSpec& o) const = default;
};

struct FieldStats {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    double std_dev = 0.0;
};

// One channel of the physical state: H x W values in row-major order,
// tagged with a variable name and unit string.
class ScalarField {
public:
    ScalarField() = default;
    ScalarField(GridSpec grid, std::string variable, std::string unit, double fill = 0.0);
    ScalarField(GridSpec grid, std::string variable, std::string unit, std::vector<double> values);

    const GridSpec& grid() const { return grid_; }
    const std::string& variable() const { return variable_; }
    const std::string& unit() const { return unit_; }
    void set_variable(std::string v) { variable_ = std::move(v); }
    void set_unit(std::string u) { unit_ = std::move(u); }

    double& at(int row, int col) { return values_[static_cast<size_t>(row) * grid_.width + col]; }
    double at(int row, int col) const { return values_[static_cast<size_t>(row) * grid_.width + col]; }
    // Periodic accessor: indices wrap.
    double at_wrapped(int row, int col) const;

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool all_finite() const;
    void require_finite(const std::string& context) const;

private:
    GridSpec grid_;
    std::string variable_;
    std::string unit_;
    std::vector<double> values_;
};

// Velocity pair on a shared grid (u: x component, v: y component).
struct VectorField {
    ScalarField u;
    ScalarField v;

    VectorField() = default;
    VectorField(ScalarField u_in, ScalarField v_in);
    const GridSpec& grid() const { return u.grid(); }
};

// Multi-channel physical state exchanged between the loops.
class FlowState {
public:
    FlowState() = default;
    explicit FlowState(double time) : time_(time) {}

    double time() const { return time_; }
    void set_time(double t) { time_ = t; }

    void add_channel(ScalarField field);
    bool has_channel(const std::string& variable) const;
    const ScalarField& channel(const std::string& variable) const;
    ScalarField& channel(const std::string& variable);
    const std::vector<ScalarField>& channels() const { return channels_; }
    std::vector<ScalarField>& channels() { return channels_; }

    // Velocity pair if both u and v channels exist.
    bool has_velocity() const { return has_channel("u") && has_channel("v"); }
    VectorField velocity() const;

private:
    double time_ = 0.0;
    std::vector<ScalarField> channels_;
};

FieldStats field_stats(const ScalarField& f);

// Total squared speed times cell area.
double kinetic_energy(const VectorField& f);
// Integral of squared vorticity: sum of squares times cell area.
double enstrophy(const ScalarField& vorticity_field);

}  // namespace flowcast
