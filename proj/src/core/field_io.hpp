#pragma once

#include <filesystem>
#include <string>

#include "grid.hpp"

namespace flowcast {

// On-disk field format: <name>.bin holds row-major little-endian float64
// values, <name>.json is the sidecar header {H, W, variable, unit, Lx, Ly, t}.
// `path` is the stem; the two suffixes are appended.
void save_field(const ScalarField& f, const std::filesystem::path& stem, double time = 0.0);
ScalarField load_field(const std::filesystem::path& stem, double* time_out = nullptr);

// Matrix CSV: H rows of W comma-separated values at full precision.
void export_csv(const ScalarField& f, const std::filesystem::path& path);

// A FlowState is stored as one field pair per channel: <stem>_<variable>.bin/.json.
void save_state(const FlowState& state, const std::filesystem::path& stem);
FlowState load_state(const std::filesystem::path& stem, const std::vector<std::string>& variables);

}  // namespace flowcast
