#include "doctest.h"

#include "critic.hpp"
#include "latent.hpp"
#include "simulator.hpp"
#include "support.hpp"

using namespace flowcast;
using namespace flowcast::test;

namespace {

const GridSpec kGrid(64, 64);

SimulatorConfig sim_config() {
    SimulatorConfig cfg;
    cfg.viscosity = 0.01;
    cfg.dt = 1e-3;
    cfg.steps_per_output = 5;
    cfg.seed = 9;
    return cfg;
}

ConstraintSpec simulator_spec() {
    ConstraintSpec spec;
    spec.divergence_tolerance = 1e-8;
    return spec;
}

FlowState decoded_state() {
    return decode(encode(taylor_green_vorticity(kGrid)));
}

}  // namespace

TEST_CASE("constraint spec validation") {
    ConstraintSpec spec;
    spec.divergence_tolerance = 0.0;
    CHECK_THROWS_AS(spec.validate(), Error);
    spec.divergence_tolerance = 1e-6;
    spec.bounds["temperature"] = {300.0, 200.0};
    CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("decoded simulator states pass the divergence check at 1e-8") {
    auto verdict = check_state(decoded_state(), simulator_spec());
    CHECK(verdict.passed);
    CHECK(verdict.violations.empty());
}

TEST_CASE("linear ramp injected into u violates mass conservation") {
    auto state = decoded_state();
    auto& u = state.channel("u");
    for (int i = 0; i < kGrid.height; ++i) {
        for (int j = 0; j < kGrid.width; ++j) u.at(i, j) += kGrid.x(j);
    }
    auto verdict = check_state(state, simulator_spec(), 4);
    REQUIRE_FALSE(verdict.passed);
    REQUIRE(verdict.violations.size() == 1);
    CHECK(verdict.violations[0].constraint == "mass_conservation");
    CHECK(verdict.violations[0].step_index == 4);
    CHECK(verdict.violations[0].measured > verdict.violations[0].threshold);
}

TEST_CASE("a NaN cell is a finiteness violation naming the step") {
    auto state = decoded_state();
    state.channel("vorticity").at(7, 7) = std::numeric_limits<double>::quiet_NaN();
    auto verdict = check_state(state, simulator_spec(), 3);
    REQUIRE_FALSE(verdict.passed);
    CHECK(verdict.violations[0].constraint == "finiteness");
    CHECK(verdict.violations[0].detail.find("step 3") != std::string::npos);
}

TEST_CASE("bounds violations report the offending variable") {
    FlowState state;
    state.add_channel(ScalarField(kGrid, "temperature", "K", 500.0));
    ConstraintSpec spec;
    spec.bounds["temperature"] = {150.0, 350.0};
    auto verdict = check_state(state, spec);
    REQUIRE_FALSE(verdict.passed);
    CHECK(verdict.violations[0].constraint == "bounds:temperature");
}

TEST_CASE("all violated constraints are reported, no early exit") {
    auto state = decoded_state();
    state.channel("vorticity").at(0, 0) = std::numeric_limits<double>::quiet_NaN();
    state.add_channel(ScalarField(kGrid, "temperature", "K", 500.0));
    ConstraintSpec spec = simulator_spec();
    spec.bounds["temperature"] = {150.0, 350.0};
    auto verdict = check_state(state, spec);
    REQUIRE_FALSE(verdict.passed);
    bool has_finiteness = false, has_bounds = false;
    for (const auto& v : verdict.violations) {
        if (v.constraint == "finiteness") has_finiteness = true;
        if (v.constraint == "bounds:temperature") has_bounds = true;
    }
    CHECK(has_finiteness);
    CHECK(has_bounds);
}

TEST_CASE("trajectory validation") {
    auto cfg = sim_config();
    FlowState init;
    init.add_channel(taylor_green_vorticity(kGrid));
    auto traj = rollout(init, 6, cfg);

    ConstraintSpec spec = simulator_spec();
    spec.enstrophy_monotone = true;

    SUBCASE("unforced viscous rollout passes") {
        auto verdict = validate_trajectory(traj, spec);
        CHECK(verdict.passed);
    }
    SUBCASE("artificially doubled enstrophy is flagged at the right index") {
        auto corrupted = traj;
        for (double& v : corrupted[3].channel("vorticity").values()) v *= 2.0;
        auto verdict = validate_trajectory(corrupted, spec);
        REQUIRE_FALSE(verdict.passed);
        bool found = false;
        for (const auto& v : verdict.violations) {
            if (v.constraint == "enstrophy_monotone" && v.step_index == 3) found = true;
        }
        CHECK(found);
    }
    SUBCASE("empty trajectory passes vacuously") {
        auto verdict = validate_trajectory({}, spec);
        CHECK(verdict.passed);
        CHECK(verdict.violations.empty());
    }
    SUBCASE("verdicts are pure functions of their inputs") {
        auto a = validate_trajectory(traj, spec);
        auto b = validate_trajectory(traj, spec);
        CHECK(a.to_json() == b.to_json());
    }
}

TEST_CASE("tightening the divergence tolerance never turns a violation into a pass") {
    auto state = decoded_state();
    auto& u = state.channel("u");
    for (int i = 0; i < kGrid.height; ++i) {
        for (int j = 0; j < kGrid.width; ++j) u.at(i, j) += 0.01 * std::sin(kGrid.x(j));
    }
    ConstraintSpec loose, tight;
    loose.divergence_tolerance = 1e-4;
    tight.divergence_tolerance = 1e-9;
    auto loose_verdict = check_state(state, loose);
    auto tight_verdict = check_state(state, tight);
    if (!loose_verdict.passed) CHECK_FALSE(tight_verdict.passed);
    CHECK(tight_verdict.violations.size() >= loose_verdict.violations.size());
}

TEST_CASE("verdicts serialize to JSON") {
    auto verdict = check_state(decoded_state(), simulator_spec());
    auto doc = verdict.to_json();
    CHECK(doc.at("passed").get<bool>());
    CHECK(doc.at("violations").is_array());
}
