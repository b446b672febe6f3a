#pragma once

#include <filesystem>

#include "grid.hpp"

namespace flowcast {

// 8-bit grayscale PNG of the field, linearly normalized from min..max
// (a constant field renders mid-gray).
void write_png(const ScalarField& field, const std::filesystem::path& path);

}  // namespace flowcast
