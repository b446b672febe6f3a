#include "critic.hpp"

#include <cmath>

#include "spectral.hpp"

namespace flowcast {

void ConstraintSpec::validate() const {
    if (divergence_tolerance <= 0.0) throw config_error("divergence tolerance must be positive");
    for (const auto& [var, range] : bounds) {
        if (range.first >= range.second) {
            throw config_error("bounds for '" + var + "' must satisfy lo < hi");
        }
    }
}

nlohmann::ordered_json ConsistencyVerdict::to_json() const {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& v : violations) {
        arr.push_back({{"constraint", v.constraint},
                       {"step", v.step_index},
                       {"measured", v.measured},
                       {"threshold", v.threshold},
                       {"detail", v.detail}});
    }
    return {{"passed", passed}, {"violations", arr}};
}

ConsistencyVerdict check_state(const FlowState& state, const ConstraintSpec& spec, int step_index) {
    spec.validate();
    ConsistencyVerdict verdict;
    auto flag = [&](ConstraintViolation v) {
        verdict.passed = false;
        verdict.violations.push_back(std::move(v));
    };

    bool finite = true;
    if (spec.require_finite) {
        for (const auto& ch : state.channels()) {
            if (!ch.all_finite()) {
                finite = false;
                flag({"finiteness", step_index, std::nan(""), 0.0,
                      "channel '" + ch.variable() + "' contains non-finite values at step " +
                          std::to_string(step_index)});
            }
        }
    }

    if (finite && state.has_velocity()) {
        const double max_div = [&] {
            auto div = divergence(state.velocity());
            double m = 0.0;
            for (double v : div.values()) m = std::max(m, std::abs(v));
            return m;
        }();
        if (max_div > spec.divergence_tolerance) {
            flag({"mass_conservation", step_index, max_div, spec.divergence_tolerance,
                  "max |div v| exceeds tolerance"});
        }
    }

    for (const auto& [var, range] : spec.bounds) {
        if (!state.has_channel(var)) continue;
        const auto& ch = state.channel(var);
        if (!ch.all_finite()) continue;  // already flagged above
        auto s = field_stats(ch);
        if (s.min < range.first || s.max > range.second) {
            flag({"bounds:" + var, step_index, s.min < range.first ? s.min : s.max,
                  s.min < range.first ? range.first : range.second,
                  "values leave [" + std::to_string(range.first) + ", " + std::to_string(range.second) +
                      "]"});
        }
    }
    return verdict;
}

ConsistencyVerdict validate_trajectory(const std::vector<FlowState>& trajectory,
                                       const ConstraintSpec& spec) {
    spec.validate();
    ConsistencyVerdict verdict;
    for (size_t i = 0; i < trajectory.size(); ++i) {
        auto state_verdict = check_state(trajectory[i], spec, static_cast<int>(i));
        if (!state_verdict.passed) {
            verdict.passed = false;
            for (auto& v : state_verdict.violations) verdict.violations.push_back(std::move(v));
        }
    }
    if (spec.enstrophy_monotone && trajectory.size() > 1) {
        for (size_t i = 0; i + 1 < trajectory.size(); ++i) {
            if (!trajectory[i].has_channel("vorticity") || !trajectory[i + 1].has_channel("vorticity")) {
                continue;
            }
            if (!trajectory[i].channel("vorticity").all_finite() ||
                !trajectory[i + 1].channel("vorticity").all_finite()) {
                continue;
            }
            const double z0 = enstrophy(trajectory[i].channel("vorticity"));
            const double z1 = enstrophy(trajectory[i + 1].channel("vorticity"));
            const double slack = spec.enstrophy_tolerance * std::max(1.0, z0);
            if (z1 > z0 + slack) {
                verdict.passed = false;
                verdict.violations.push_back({"enstrophy_monotone", static_cast<int>(i + 1), z1, z0 + slack,
                                              "enstrophy increased between steps " + std::to_string(i) +
                                                  " and " + std::to_string(i + 1)});
            }
        }
    }
    return verdict;
}

}  // namespace flowcast
