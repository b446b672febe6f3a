#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "grid.hpp"
#include "rng.hpp"

namespace flowcast::test {

inline ScalarField make_field(const GridSpec& g, const std::string& var, const std::string& unit,
                              const std::function<double(double, double)>& fn) {
    ScalarField f(g, var, unit);
    for (int i = 0; i < g.height; ++i) {
        for (int j = 0; j < g.width; ++j) {
            f.at(i, j) = fn(g.x(j), g.y(i));
        }
    }
    return f;
}

// Taylor-Green vorticity 2 sin(x) sin(y) exp(-2 nu t) on [0, 2pi]^2.
inline ScalarField taylor_green_vorticity(const GridSpec& g, double viscosity = 0.0, double t = 0.0) {
    const double decay = std::exp(-2.0 * viscosity * t);
    return make_field(g, "vorticity", "1/s",
                      [&](double x, double y) { return 2.0 * std::sin(x) * std::sin(y) * decay; });
}

// Smooth random periodic field: a few low-wavenumber harmonics with seeded
// amplitudes and phases. max_mode stays well inside any truncation band.
inline ScalarField random_smooth_field(const GridSpec& g, uint64_t seed, int max_mode = 5,
                                       const std::string& var = "vorticity",
                                       const std::string& unit = "1/s") {
    Rng rng(seed);
    struct Harmonic {
        int m, n;
        double amp, phase_x, phase_y;
    };
    std::vector<Harmonic> harmonics;
    for (int m = 0; m <= max_mode; ++m) {
        for (int n = 0; n <= max_mode; ++n) {
            if (m == 0 && n == 0) continue;
            harmonics.push_back({m, n, (rng.next_double() - 0.5) / (1.0 + m + n),
                                 2.0 * M_PI * rng.next_double(), 2.0 * M_PI * rng.next_double()});
        }
    }
    return make_field(g, var, unit, [&](double x, double y) {
        double v = 0.0;
        for (const auto& h : harmonics) {
            v += h.amp * std::cos(h.m * x * 2.0 * M_PI / g.length_x + h.phase_x) *
                 std::cos(h.n * y * 2.0 * M_PI / g.length_y + h.phase_y);
        }
        return v;
    });
}

inline double max_abs(const ScalarField& f) {
    double m = 0.0;
    for (double v : f.values()) m = std::max(m, std::abs(v));
    return m;
}

inline double max_abs_diff(const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.values().size(); ++i) {
        m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    }
    return m;
}

inline double rms_diff(const ScalarField& a, const ScalarField& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.values().size(); ++i) {
        const double d = a.values()[i] - b.values()[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(a.values().size()));
}

}  // namespace flowcast::test
