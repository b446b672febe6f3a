#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "simulator.hpp"

namespace flowcast {

// Rectangular cell mask; absent = whole grid.
struct RegionMask {
    int row0 = 0;
    int col0 = 0;
    int rows = 0;
    int cols = 0;
};

enum class InterventionOp { scale, add, zero };

// do-intervention on the initial condition: one operator applied to one
// channel over a region, everything else untouched.
struct Intervention {
    std::string channel = "vorticity";
    std::optional<RegionMask> region;  // nullopt = full grid
    InterventionOp op = InterventionOp::scale;
    double amount = 1.0;  // scale factor or additive delta
    std::string label;    // e.g. "weak_high"

    // {"channel": ..., "op": "scale"|"add"|"zero", "amount": ...,
    //  "region": {"row0", "col0", "rows", "cols"}?, "label": ...?}
    static Intervention from_json(const nlohmann::json& doc);
    nlohmann::ordered_json to_json() const;
};

struct CounterfactualResult {
    EnsembleForecast factual;
    EnsembleForecast counterfactual;
    ScalarField delta;           // mean(counterfactual) - mean(factual), final output
    double mean_abs_delta = 0.0; // over the probed channel
    double mean_spread = 0.0;    // pooled factual spread, same channel
    double sensitivity = 0.0;    // in [0, 1]
    std::string channel;
};

// Applies the operator on the masked region only; all other cells are
// bit-identical. Unknown channels raise.
FlowState apply_intervention(const FlowState& x_init, const Intervention& intervention);

// Paired design: both ensembles share ensemble size, perturbation, member
// seeds and config; only the initial condition differs.
CounterfactualResult counterfactual_rollout(const FlowState& x_init, const Intervention& intervention,
                                            int ensemble_size, double perturbation, int n_outputs,
                                            const SimulatorConfig& cfg);

// Bounded signal-to-spread ratio: S = d / (d + s + eps) with d the mean
// absolute forecast shift and s the pooled factual ensemble spread. Zero iff
// the intervention leaves the forecast unchanged; monotone in d for fixed s.
double causal_sensitivity(double mean_abs_delta, double mean_spread);

}  // namespace flowcast
