#include "probe.hpp"

#include <cmath>

namespace flowcast {

namespace {

constexpr double kSensitivityEpsilon = 1e-12;

InterventionOp parse_op(const std::string& name) {
    if (name == "scale") return InterventionOp::scale;
    if (name == "add") return InterventionOp::add;
    if (name == "zero") return InterventionOp::zero;
    throw config_error("unknown intervention op '" + name + "' (expected scale, add or zero)");
}

std::string op_name(InterventionOp op) {
    switch (op) {
        case InterventionOp::scale: return "scale";
        case InterventionOp::add: return "add";
        case InterventionOp::zero: return "zero";
    }
    return "scale";
}

}  // namespace

Intervention Intervention::from_json(const nlohmann::json& doc) {
    Intervention i;
    i.channel = doc.value("channel", std::string("vorticity"));
    i.op = parse_op(doc.value("op", std::string("scale")));
    i.amount = doc.value("amount", i.op == InterventionOp::scale ? 1.0 : 0.0);
    if (i.op == InterventionOp::scale && i.amount < 0.0) {
        throw config_error("intervention scale factor must be non-negative");
    }
    i.label = doc.value("label", std::string());
    if (doc.contains("region")) {
        const auto& r = doc.at("region");
        i.region = RegionMask{r.at("row0").get<int>(), r.at("col0").get<int>(), r.at("rows").get<int>(),
                              r.at("cols").get<int>()};
    }
    return i;
}

nlohmann::ordered_json Intervention::to_json() const {
    nlohmann::ordered_json doc = {{"channel", channel}, {"op", op_name(op)}, {"amount", amount}};
    if (region) {
        doc["region"] = {{"row0", region->row0}, {"col0", region->col0}, {"rows", region->rows},
                         {"cols", region->cols}};
    }
    if (!label.empty()) doc["label"] = label;
    return doc;
}

FlowState apply_intervention(const FlowState& x_init, const Intervention& intervention) {
    if (!x_init.has_channel(intervention.channel)) {
        throw runtime_error("intervention targets unknown channel '" + intervention.channel + "'");
    }
    FlowState out = x_init;
    ScalarField& field = out.channel(intervention.channel);
    const GridSpec& g = field.grid();

    int row0 = 0, col0 = 0, rows = g.height, cols = g.width;
    if (intervention.region) {
        row0 = intervention.region->row0;
        col0 = intervention.region->col0;
        rows = intervention.region->rows;
        cols = intervention.region->cols;
        if (row0 < 0 || col0 < 0 || rows < 0 || cols < 0 || row0 + rows > g.height ||
            col0 + cols > g.width) {
            throw config_error("intervention region does not fit inside the grid");
        }
    }
    for (int i = row0; i < row0 + rows; ++i) {
        for (int j = col0; j < col0 + cols; ++j) {
            double& v = field.at(i, j);
            switch (intervention.op) {
                case InterventionOp::scale: v *= intervention.amount; break;
                case InterventionOp::add: v += intervention.amount; break;
                case InterventionOp::zero: v = 0.0; break;
            }
        }
    }
    return out;
}

double causal_sensitivity(double mean_abs_delta, double mean_spread) {
    if (mean_abs_delta < 0.0 || mean_spread < 0.0) {
        throw runtime_error("causal_sensitivity expects non-negative inputs");
    }
    return mean_abs_delta / (mean_abs_delta + mean_spread + kSensitivityEpsilon);
}

CounterfactualResult counterfactual_rollout(const FlowState& x_init, const Intervention& intervention,
                                            int ensemble_size, double perturbation, int n_outputs,
                                            const SimulatorConfig& cfg) {
    CounterfactualResult result;
    result.channel = intervention.channel;
    result.factual = ensemble_rollout(x_init, ensemble_size, perturbation, n_outputs, cfg);
    result.counterfactual =
        ensemble_rollout(apply_intervention(x_init, intervention), ensemble_size, perturbation, n_outputs, cfg);

    const std::string& probe_channel =
        result.factual.mean_trajectory.back().has_channel(intervention.channel) ? intervention.channel
                                                                                : "vorticity";
    const ScalarField& factual_mean = result.factual.mean_trajectory.back().channel(probe_channel);
    const ScalarField& counter_mean = result.counterfactual.mean_trajectory.back().channel(probe_channel);

    result.delta = ScalarField(factual_mean.grid(), "delta_" + probe_channel, factual_mean.unit());
    double abs_sum = 0.0;
    for (size_t i = 0; i < factual_mean.values().size(); ++i) {
        const double d = counter_mean.values()[i] - factual_mean.values()[i];
        result.delta.values()[i] = d;
        abs_sum += std::abs(d);
    }
    result.mean_abs_delta = abs_sum / static_cast<double>(factual_mean.values().size());

    const ScalarField& spread = result.factual.spread_trajectory.back().channel(probe_channel);
    double spread_sum = 0.0;
    for (double s : spread.values()) spread_sum += s;
    result.mean_spread = spread_sum / static_cast<double>(spread.values().size());

    result.sensitivity = causal_sensitivity(result.mean_abs_delta, result.mean_spread);
    result.channel = probe_channel;
    return result;
}

}  // namespace flowcast
