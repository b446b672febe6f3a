#include "doctest.h"

#include <cmath>

#include "support.hpp"
#include "topology.hpp"

using namespace flowcast;
using namespace flowcast::test;

namespace {

const GridSpec kGrid(64, 64);

ScalarField gaussian_vortex(const GridSpec& g, double amplitude, int center_row, int center_col,
                            double sigma = 0.5) {
    const double cx = g.x(center_col), cy = g.y(center_row);
    return make_field(g, "vorticity", "1/s", [&](double x, double y) {
        // Nearest periodic image distance.
        double dx = std::remainder(x - cx, g.length_x);
        double dy = std::remainder(y - cy, g.length_y);
        return amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    });
}

FlowState vorticity_state(ScalarField omega) {
    FlowState s;
    s.add_channel(std::move(omega));
    return s;
}

std::vector<TopologicalDescriptor> vortices_only(const std::vector<TopologicalDescriptor>& all) {
    std::vector<TopologicalDescriptor> out;
    for (const auto& d : all) {
        if (d.kind == DescriptorKind::vortex) out.push_back(d);
    }
    return out;
}

}  // namespace

TEST_CASE("zero field yields no descriptors") {
    auto descriptors = extract_topology(vorticity_state(ScalarField(kGrid, "vorticity", "1/s")));
    CHECK(descriptors.empty());
    CHECK(render_descriptors(descriptors) == "no salient structures detected");
}

TEST_CASE("a single Gaussian vortex is detected at its center") {
    auto descriptors = extract_topology(vorticity_state(gaussian_vortex(kGrid, 3.0, 20, 36)));
    auto vortices = vortices_only(descriptors);
    REQUIRE(vortices.size() == 1);
    CHECK(vortices[0].row == 20);
    CHECK(vortices[0].col == 36);
    CHECK(vortices[0].sign == 1);
    CHECK(vortices[0].magnitude == doctest::Approx(3.0).epsilon(1e-6));

    auto negative = extract_topology(vorticity_state(gaussian_vortex(kGrid, -3.0, 20, 36)));
    auto neg_vortices = vortices_only(negative);
    REQUIRE(neg_vortices.size() == 1);
    CHECK(neg_vortices[0].sign == -1);
}

TEST_CASE("two opposite-sign vortices are ordered by magnitude") {
    auto omega = gaussian_vortex(kGrid, 3.0, 16, 16);
    auto second = gaussian_vortex(kGrid, -2.0, 48, 48);
    for (size_t i = 0; i < omega.values().size(); ++i) omega.values()[i] += second.values()[i];
    auto vortices = vortices_only(extract_topology(vorticity_state(omega)));
    REQUIRE(vortices.size() == 2);
    CHECK(vortices[0].magnitude > vortices[1].magnitude);
    CHECK(vortices[0].sign == 1);
    CHECK(vortices[0].row == 16);
    CHECK(vortices[1].sign == -1);
    CHECK(vortices[1].row == 48);
}

TEST_CASE("detection is equivariant under periodic shifts") {
    // Non-degenerate structures shift exactly with the field. Descriptors on
    // near-flat plateaus can legitimately move by a cell under FFT roundoff,
    // so the assertions stick to the peaked kinds of each construction.
    const int shift_row = 23, shift_col = 41;
    auto shift_field = [&](const ScalarField& f) {
        ScalarField shifted(f.grid(), f.variable(), f.unit());
        for (int i = 0; i < f.grid().height; ++i) {
            for (int j = 0; j < f.grid().width; ++j) {
                shifted.at(i, j) = f.at_wrapped(i - shift_row, j - shift_col);
            }
        }
        return shifted;
    };
    auto keep = [](const std::vector<TopologicalDescriptor>& all, DescriptorKind kind) {
        std::vector<TopologicalDescriptor> out;
        for (const auto& d : all) {
            if (d.kind == kind) out.push_back(d);
        }
        return out;
    };

    SUBCASE("vortices in a vortex-pair field") {
        auto omega = gaussian_vortex(kGrid, 3.0, 16, 16);
        auto second = gaussian_vortex(kGrid, -2.0, 40, 48);
        for (size_t i = 0; i < omega.values().size(); ++i) omega.values()[i] += second.values()[i];
        auto base = keep(extract_topology(vorticity_state(omega)), DescriptorKind::vortex);
        auto moved = keep(extract_topology(vorticity_state(shift_field(omega))), DescriptorKind::vortex);
        REQUIRE(moved.size() == base.size());
        for (size_t i = 0; i < base.size(); ++i) {
            CHECK(moved[i].row == (base[i].row + shift_row) % kGrid.height);
            CHECK(moved[i].col == (base[i].col + shift_col) % kGrid.width);
            CHECK(moved[i].sign == base[i].sign);
        }
    }
    SUBCASE("shear lines in a tanh band") {
        auto u = make_field(kGrid, "u", "m/s", [](double, double y) {
            return std::tanh((y - M_PI / 2.0) / 0.3) - std::tanh((y - 3.0 * M_PI / 2.0) / 0.3) - 1.0;
        });
        FlowState state;
        state.add_channel(u);
        state.add_channel(ScalarField(kGrid, "v", "m/s"));
        FlowState shifted;
        shifted.add_channel(shift_field(u));
        shifted.add_channel(ScalarField(kGrid, "v", "m/s"));

        auto base = keep(extract_topology(state), DescriptorKind::shear_line);
        auto moved = keep(extract_topology(shifted), DescriptorKind::shear_line);
        REQUIRE(!base.empty());
        REQUIRE(moved.size() == base.size());
        // Same multiset of shifted locations.
        auto location_set = [&](const std::vector<TopologicalDescriptor>& ds, int dr, int dc) {
            std::vector<std::pair<int, int>> locs;
            for (const auto& d : ds) {
                locs.emplace_back((d.row + dr) % kGrid.height, (d.col + dc) % kGrid.width);
            }
            std::sort(locs.begin(), locs.end());
            return locs;
        };
        CHECK(location_set(base, shift_row, shift_col) == location_set(moved, 0, 0));
    }
}

TEST_CASE("shear layers produce shear-line descriptors") {
    // Periodic pair of opposing bands; ridges of strain sit on the two band
    // center lines.
    auto u = make_field(kGrid, "u", "m/s", [](double, double y) {
        return std::tanh((y - M_PI / 2.0) / 0.3) - std::tanh((y - 3.0 * M_PI / 2.0) / 0.3) - 1.0;
    });
    FlowState state;
    state.add_channel(u);
    state.add_channel(ScalarField(kGrid, "v", "m/s"));
    auto descriptors = extract_topology(state);
    bool found_shear = false;
    for (const auto& d : descriptors) {
        if (d.kind == DescriptorKind::shear_line) {
            found_shear = true;
            const double y = kGrid.y(d.row);
            CHECK(std::min(std::abs(y - M_PI / 2.0), std::abs(y - 3.0 * M_PI / 2.0)) < 0.2);
        }
    }
    CHECK(found_shear);
}

TEST_CASE("stagnation points appear where the speed vanishes") {
    // Velocity of a single vortex is zero at the core.
    auto state = vorticity_state(gaussian_vortex(kGrid, 3.0, 32, 32));
    auto descriptors = extract_topology(state);
    bool found = false;
    for (const auto& d : descriptors) {
        if (d.kind == DescriptorKind::stagnation_point && d.row == 32 && d.col == 32) found = true;
    }
    CHECK(found);
}

TEST_CASE("rendering uses the deterministic template") {
    auto descriptors = extract_topology(vorticity_state(gaussian_vortex(kGrid, 3.0, 20, 36)));
    auto text = render_descriptors(descriptors);
    CHECK(text.find("cyclonic vortex at (20, 36), core vorticity") != std::string::npos);
    auto negative = extract_topology(vorticity_state(gaussian_vortex(kGrid, -3.0, 20, 36)));
    CHECK(render_descriptors(negative).find("anticyclonic vortex") != std::string::npos);
}
