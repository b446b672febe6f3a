#include "topology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "spectral.hpp"

namespace flowcast {

namespace {

bool is_local_extremum(const ScalarField& f, int i, int j, bool maximum) {
    const double c = f.at(i, j);
    for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
            if (di == 0 && dj == 0) continue;
            const double n = f.at_wrapped(i + di, j + dj);
            if (maximum ? (c <= n) : (c >= n)) return false;
        }
    }
    return true;
}

// Strict 1D ridge: a local maximum along at least one grid axis.
bool is_directional_ridge(const ScalarField& f, int i, int j) {
    const double c = f.at(i, j);
    const bool ridge_x = c > f.at_wrapped(i, j - 1) && c > f.at_wrapped(i, j + 1);
    const bool ridge_y = c > f.at_wrapped(i - 1, j) && c > f.at_wrapped(i + 1, j);
    return ridge_x || ridge_y;
}

}  // namespace

std::vector<TopologicalDescriptor> extract_topology(const FlowState& state,
                                                    const TopologyThresholds& thresholds) {
    ScalarField omega;
    VectorField vel;
    if (state.has_channel("vorticity")) {
        omega = state.channel("vorticity");
        vel = state.has_velocity() ? state.velocity() : velocity_from_vorticity(omega);
    } else if (state.has_velocity()) {
        vel = state.velocity();
        omega = vorticity(vel);
    } else {
        throw runtime_error("extract_topology: state has neither vorticity nor velocity channels");
    }
    omega.require_finite("extract_topology");

    const GridSpec& g = omega.grid();
    ScalarField abs_omega(g, "abs_vorticity", omega.unit());
    for (size_t i = 0; i < omega.values().size(); ++i) {
        abs_omega.values()[i] = std::abs(omega.values()[i]);
    }
    ScalarField speed(g, "speed", vel.u.unit());
    for (size_t i = 0; i < speed.values().size(); ++i) {
        speed.values()[i] = std::hypot(vel.u.values()[i], vel.v.values()[i]);
    }
    const ScalarField strain = strain_magnitude(vel);

    const double vortex_threshold = thresholds.vortex_std_factor * field_stats(omega).std_dev;
    const double speed_threshold = thresholds.stagnation_speed_factor * field_stats(speed).max;
    const double shear_threshold = thresholds.shear_std_factor * field_stats(strain).std_dev;

    std::vector<TopologicalDescriptor> out;
    for (int i = 0; i < g.height; ++i) {
        for (int j = 0; j < g.width; ++j) {
            if (abs_omega.at(i, j) > vortex_threshold && is_local_extremum(abs_omega, i, j, true)) {
                out.push_back({DescriptorKind::vortex, i, j, abs_omega.at(i, j),
                               omega.at(i, j) >= 0.0 ? 1 : -1});
            }
            if (speed.at(i, j) < speed_threshold && is_local_extremum(speed, i, j, false)) {
                out.push_back({DescriptorKind::stagnation_point, i, j, speed.at(i, j), 0});
            }
            if (strain.at(i, j) > shear_threshold && is_directional_ridge(strain, i, j)) {
                out.push_back({DescriptorKind::shear_line, i, j, strain.at(i, j), 0});
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const TopologicalDescriptor& a, const TopologicalDescriptor& b) {
        if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
        if (a.row != b.row) return a.row < b.row;
        return a.col < b.col;
    });
    return out;
}

std::string descriptor_kind_name(DescriptorKind kind) {
    switch (kind) {
        case DescriptorKind::vortex: return "vortex";
        case DescriptorKind::stagnation_point: return "stagnation_point";
        case DescriptorKind::shear_line: return "shear_line";
    }
    return "vortex";
}

std::string render_descriptors(const std::vector<TopologicalDescriptor>& descriptors) {
    if (descriptors.empty()) return "no salient structures detected";
    // Rendering caps each kind so dense strain fields do not drown the
    // narrative; extraction itself is uncapped.
    constexpr int kMaxRenderedPerKind = 8;
    int rendered_count[3] = {0, 0, 0};
    bool truncated[3] = {false, false, false};
    std::string text;
    char line[160];
    for (const auto& d : descriptors) {
        int& count = rendered_count[static_cast<int>(d.kind)];
        if (count >= kMaxRenderedPerKind) {
            truncated[static_cast<int>(d.kind)] = true;
            continue;
        }
        ++count;
        switch (d.kind) {
            case DescriptorKind::vortex:
                std::snprintf(line, sizeof(line), "%s vortex at (%d, %d), core vorticity %.4f",
                              d.sign >= 0 ? "cyclonic" : "anticyclonic", d.row, d.col, d.magnitude);
                break;
            case DescriptorKind::stagnation_point:
                std::snprintf(line, sizeof(line), "stagnation point at (%d, %d), local speed %.4f", d.row,
                              d.col, d.magnitude);
                break;
            case DescriptorKind::shear_line:
                std::snprintf(line, sizeof(line), "shear line segment at (%d, %d), strain %.4f", d.row,
                              d.col, d.magnitude);
                break;
        }
        if (!text.empty()) text += "\n";
        text += line;
    }
    return text;
}

}  // namespace flowcast
