#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "grid.hpp"
#include "json.hpp"

namespace flowcast {

// Rule set the consistency critic enforces on physical states. Divergence is
// checked wherever a (u, v) channel pair exists; enstrophy monotonicity only
// when flagged (unforced viscous runs); bounds per variable name.
struct ConstraintSpec {
    double divergence_tolerance = 1e-6;  // 1e-8 for simulator-produced fields
    bool enstrophy_monotone = false;
    double enstrophy_tolerance = 1e-12;  // relative slack per step
    bool require_finite = true;
    std::map<std::string, std::pair<double, double>> bounds;  // variable -> [lo, hi]

    void validate() const;
};

struct ConstraintViolation {
    std::string constraint;  // e.g. "mass_conservation", "finiteness", "bounds:temperature"
    int step_index = 0;      // position in the trajectory; 0 for single states
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct ConsistencyVerdict {
    bool passed = true;
    std::vector<ConstraintViolation> violations;

    nlohmann::ordered_json to_json() const;
};

// All constraints are evaluated; nothing short-circuits, so the verdict is a
// complete audit of the state.
ConsistencyVerdict check_state(const FlowState& state, const ConstraintSpec& spec, int step_index = 0);

// Per-state checks plus cross-step checks (enstrophy monotonicity when
// flagged). An empty trajectory passes vacuously.
ConsistencyVerdict validate_trajectory(const std::vector<FlowState>& trajectory, const ConstraintSpec& spec);

}  // namespace flowcast
