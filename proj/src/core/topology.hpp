#pragma once

#include <string>
#include <vector>

#include "grid.hpp"

namespace flowcast {

enum class DescriptorKind { vortex, stagnation_point, shear_line };

struct TopologicalDescriptor {
    DescriptorKind kind = DescriptorKind::vortex;
    int row = 0;
    int col = 0;
    double magnitude = 0.0;  // core |vorticity|, local speed, or strain
    int sign = 0;            // +-1 for vortices, 0 otherwise
};

// Detection thresholds; the defaults scale with the field statistics
// (2 * std of vorticity, 5% of max speed, 2 * std of strain).
struct TopologyThresholds {
    double vortex_std_factor = 2.0;
    double stagnation_speed_factor = 0.05;
    double shear_std_factor = 2.0;
};

// Discrete structures of the flow: vortices are local maxima of |vorticity|
// above threshold, stagnation points local minima of speed below threshold,
// shear lines directional ridges of the strain magnitude. Results are
// ordered by (magnitude desc, row, col). Works from a vorticity channel or a
// velocity pair (one is derived from the other as needed).
std::vector<TopologicalDescriptor> extract_topology(const FlowState& state,
                                                    const TopologyThresholds& thresholds = {});

std::string descriptor_kind_name(DescriptorKind kind);

// Deterministic one-line-per-descriptor narrative; the empty list renders as
// "no salient structures detected".
std::string render_descriptors(const std::vector<TopologicalDescriptor>& descriptors);

}  // namespace flowcast
