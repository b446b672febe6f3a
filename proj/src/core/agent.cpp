#include "agent.hpp"

#include <cmath>
#include <cstdio>

#include "rng.hpp"

namespace flowcast {

void EpisodeConfig::validate() const {
    if (max_steps < 1) throw config_error("max_steps must be at least 1");
    if (rollback_limit < 0) throw config_error("rollback_limit must be non-negative");
    if (history_char_budget < 64) throw config_error("history budget is unreasonably small");
    if (retrieval_k < 1) throw config_error("retrieval k must be at least 1");
    if (ensemble_size < 1) throw config_error("ensemble size must be at least 1");
    if (perturbation < 0.0) throw config_error("perturbation must be non-negative");
    if (forecast_outputs < 1) throw config_error("forecast outputs must be at least 1");
    constraints.validate();
}

std::string episode_status_name(EpisodeStatus status) {
    switch (status) {
        case EpisodeStatus::finalized: return "finalized";
        case EpisodeStatus::failed: return "failed";
        case EpisodeStatus::truncated: return "truncated";
    }
    return "truncated";
}

FaultInjection parse_fault_injection(const std::string& name) {
    if (name.empty() || name == "none") return FaultInjection::none;
    if (name == "divergence-once") return FaultInjection::divergence_once;
    if (name == "divergence-always") return FaultInjection::divergence_always;
    throw config_error("unknown fault injection '" + name +
                       "' (expected none, divergence-once or divergence-always)");
}

nlohmann::ordered_json ReasoningTrace::to_json() const {
    nlohmann::ordered_json doc;
    doc["episode_id"] = episode_id;
    doc["status"] = episode_status_name(status);
    doc["seed"] = seed;
    doc["config_hash"] = config_hash;
    auto node_array = nlohmann::ordered_json::array();
    for (const auto& n : nodes) {
        nlohmann::ordered_json item;
        item["id"] = n.id;
        item["parent"] = n.parent;
        item["kind"] = n.kind;
        item["pruned"] = n.pruned;
        if (n.action) {
            item["action"] = n.action->to_json();
            item["rationale"] = n.action->rationale;
        }
        if (!n.text.empty()) item["text"] = n.text;
        if (!n.tool_call_id.empty()) item["tool_call_id"] = n.tool_call_id;
        if (n.verdict) item["verdict"] = n.verdict->to_json();
        if (!n.data.is_null()) item["data"] = n.data;
        node_array.push_back(std::move(item));
    }
    doc["nodes"] = std::move(node_array);
    doc["active_path"] = active_path;
    auto rb = nlohmann::ordered_json::array();
    for (const auto& r : rollbacks) {
        rb.push_back({{"cause", r.cause}, {"pruned_node", r.pruned_node}, {"retry", r.retry}});
    }
    doc["rollbacks"] = std::move(rb);
    return doc;
}

std::string assemble_prompt(const std::string& system_instruction, const std::string& retrieved_context,
                            const std::string& field_observation, const std::vector<std::string>& history,
                            size_t history_char_budget) {
    std::string history_text;
    if (history.empty()) {
        history_text = "none";
    } else {
        size_t total = 0;
        size_t first = 0;
        for (size_t i = history.size(); i-- > 0;) {
            total += history[i].size() + 1;
            if (total > history_char_budget) {
                first = i + 1;
                break;
            }
        }
        if (first > 0) history_text = "[earlier steps elided]\n";
        for (size_t i = first; i < history.size(); ++i) {
            history_text += history[i];
            if (i + 1 < history.size()) history_text += "\n";
        }
        if (history_text.empty()) history_text = "[earlier steps elided]";
    }

    std::string prompt;
    prompt += "## SYSTEM INSTRUCTION\n" + system_instruction + "\n\n";
    prompt += "## RETRIEVED CONTEXT\n" + (retrieved_context.empty() ? "none" : retrieved_context) + "\n\n";
    prompt += "## FIELD OBSERVATION\n" + field_observation + "\n\n";
    prompt += "## HISTORY\n" + history_text + "\n";
    return prompt;
}

bool uncertainty_gate(const ScalarField& spread, const ScalarField& mean_field, double threshold,
                      double* ratio_out) {
    double spread_sum = 0.0, magnitude_sum = 0.0;
    for (double v : spread.values()) spread_sum += v;
    for (double v : mean_field.values()) magnitude_sum += std::abs(v);
    const double n = static_cast<double>(spread.values().size());
    const double ratio = (spread_sum / n) / (magnitude_sum / n + 1e-300);
    if (ratio_out) *ratio_out = ratio;
    return ratio > threshold;
}

namespace {

std::string fmt4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string stats_lines(const FlowState& state) {
    std::string out;
    for (const auto& ch : state.channels()) {
        auto s = field_stats(ch);
        out += ch.variable() + " [" + ch.unit() + "]: mean=" + fmt4(s.mean) + " min=" + fmt4(s.min) +
               " max=" + fmt4(s.max) + " std=" + fmt4(s.std_dev) + "\n";
    }
    return out;
}

std::string human_constraint_name(const std::string& constraint) {
    if (constraint == "mass_conservation") return "mass conservation";
    if (constraint == "enstrophy_monotone") return "enstrophy decay";
    if (constraint == "finiteness") return "finiteness";
    if (constraint.rfind("bounds:", 0) == 0) return "bounds on " + constraint.substr(7);
    return constraint;
}

std::string violation_summary(const ConsistencyVerdict& verdict) {
    if (verdict.violations.empty()) return "unspecified violation";
    const auto& v = verdict.violations.front();
    return human_constraint_name(v.constraint) + " violated at output " + std::to_string(v.step_index) +
           " (measured " + fmt4(v.measured) + ", threshold " + fmt4(v.threshold) + ")";
}

// Test hook: a linear ramp added to u makes the state visibly divergent.
void inject_divergence(FlowState& state) {
    if (!state.has_channel("u")) return;
    auto& u = state.channel("u");
    const GridSpec& g = u.grid();
    for (int i = 0; i < g.height; ++i) {
        for (int j = 0; j < g.width; ++j) u.at(i, j) += g.x(j);
    }
}

std::string first_line(const std::string& text) {
    const size_t pos = text.find('\n');
    return pos == std::string::npos ? text : text.substr(0, pos);
}

struct EpisodeState {
    ReasoningTrace trace;
    std::vector<std::string> history;
    std::string retrieved_context = "none";
    int retries = 0;

    int add_node(TraceNode node) {
        node.id = static_cast<int>(trace.nodes.size());
        trace.nodes.push_back(std::move(node));
        return trace.nodes.back().id;
    }
    int active_tail() const { return trace.active_path.empty() ? -1 : trace.active_path.back(); }
};

}  // namespace

EpisodeResult run_episode(const EpisodeInputs& inputs, const EpisodeConfig& cfg, PolicyBackend& policy,
                          FaultInjection fault) {
    cfg.validate();

    EpisodeResult result;
    EpisodeState ep;
    ep.trace.seed = inputs.sim.seed;
    ep.trace.config_hash = cfg.config_hash;
    {
        char id[32];
        std::snprintf(id, sizeof(id), "ep-%016llx",
                      static_cast<unsigned long long>(fnv1a(cfg.config_hash) ^ inputs.sim.seed));
        ep.trace.episode_id = id;
    }

    // The field observation tracks the latest accepted forecast; before any
    // Simulate it describes the initial state.
    const FlowState* observed_state = &inputs.initial_state;
    auto refresh_tokens = [&](const FlowState& state) {
        try {
            result.descriptors = extract_topology(state);
            result.rendered_tokens = render_descriptors(result.descriptors);
        } catch (const Error&) {
            result.descriptors.clear();
            result.rendered_tokens = "no salient structures detected";
        }
    };
    refresh_tokens(inputs.initial_state);

    bool fault_pending = fault != FaultInjection::none;
    std::string advisory;
    EpisodeStatus status = EpisodeStatus::truncated;

    for (int step = 1; step <= cfg.max_steps; ++step) {
        const double threshold =
            cfg.uncertainty_threshold * std::pow(cfg.uncertainty_decay, double(step - 1));
        std::string field_observation = result.rendered_tokens + "\n" + stats_lines(*observed_state);
        if (!advisory.empty()) field_observation += advisory + "\n";

        const std::string prompt = assemble_prompt(cfg.system_instruction, ep.retrieved_context,
                                                   field_observation, ep.history, cfg.history_char_budget);
        const std::string completion = policy.propose(prompt);
        AgentAction action = parse_action(completion);

        TraceNode action_node;
        action_node.kind = "action";
        action_node.parent = ep.active_tail();
        action_node.action = action;
        const int action_id = ep.add_node(std::move(action_node));
        ep.trace.active_path.push_back(action_id);
        const std::string call_id = "call-" + std::to_string(action_id);

        TraceNode obs;
        obs.kind = "observation";
        obs.parent = action_id;
        obs.tool_call_id = call_id;
        std::optional<ConsistencyVerdict> verdict;
        std::optional<EnsembleForecast> accepted_forecast;
        std::optional<CounterfactualResult> accepted_probe;

        try {
            switch (action.kind) {
                case ActionKind::retrieve: {
                    if (!inputs.store || !inputs.embedder) {
                        throw runtime_error("no knowledge store is attached to this episode");
                    }
                    const int k = action.retrieval_k > 0 ? action.retrieval_k : cfg.retrieval_k;
                    auto retrieval = inputs.store->query(action.query, k, *inputs.embedder,
                                                         action.partition);
                    std::string context_text, id_list;
                    auto ranked = nlohmann::ordered_json::array();
                    for (size_t r = 0; r < retrieval.ranked.size(); ++r) {
                        const auto& hit = retrieval.ranked[r];
                        const auto& chunk = inputs.store->chunk_by_id(hit.id);
                        context_text += "(" + std::to_string(r + 1) + ") " + hit.id +
                                        " score=" + fmt4(hit.score) + "\n" + chunk.text + "\n";
                        if (!id_list.empty()) id_list += ", ";
                        id_list += hit.id;
                        ranked.push_back({{"id", hit.id}, {"score", hit.score}});
                    }
                    ep.retrieved_context = retrieval.ranked.empty() ? "none" : context_text;
                    result.retrieved = retrieval.ranked;
                    obs.text = "retrieved " + std::to_string(retrieval.ranked.size()) +
                               " chunks: " + (id_list.empty() ? "none" : id_list);
                    obs.data = {{"query", action.query}, {"ranked", ranked}};
                    break;
                }
                case ActionKind::simulate: {
                    const int members = action.ensemble_size.value_or(cfg.ensemble_size);
                    const double magnitude = action.perturbation.value_or(cfg.perturbation);
                    const int outputs = action.outputs.value_or(cfg.forecast_outputs);
                    if (action.simulate_kind == "counterfactual") {
                        if (!action.intervention) {
                            throw runtime_error("counterfactual simulate requires an intervention");
                        }
                        auto intervention = Intervention::from_json(*action.intervention);
                        auto probe = counterfactual_rollout(inputs.initial_state, intervention, members,
                                                            magnitude, outputs, inputs.sim);
                        verdict = validate_trajectory(probe.counterfactual.mean_trajectory,
                                                      cfg.constraints);
                        obs.text = "counterfactual probe '" + intervention.label +
                                   "': sensitivity=" + fmt4(probe.sensitivity) +
                                   " mean_abs_delta=" + fmt4(probe.mean_abs_delta) +
                                   " mean_spread=" + fmt4(probe.mean_spread);
                        obs.data = {{"intervention", intervention.to_json()},
                                    {"sensitivity", probe.sensitivity},
                                    {"mean_abs_delta", probe.mean_abs_delta},
                                    {"mean_spread", probe.mean_spread}};
                        if (verdict->passed) accepted_probe = std::move(probe);
                    } else {
                        auto forecast = ensemble_rollout(inputs.initial_state, members, magnitude, outputs,
                                                         inputs.sim);
                        if (fault_pending) {
                            inject_divergence(forecast.mean_trajectory.back());
                            if (fault == FaultInjection::divergence_once) fault_pending = false;
                        }
                        verdict = validate_trajectory(forecast.mean_trajectory, cfg.constraints);
                        const auto& final_mean = forecast.mean_trajectory.back();
                        const std::string channel =
                            final_mean.has_channel("vorticity") ? "vorticity"
                                                                : final_mean.channels().front().variable();
                        double ratio = 0.0;
                        const bool flagged =
                            uncertainty_gate(forecast.spread_trajectory.back().channel(channel),
                                             final_mean.channel(channel), threshold, &ratio);
                        auto spread_stats =
                            field_stats(forecast.spread_trajectory.back().channel(channel));
                        obs.text = "ensemble forecast: members=" + std::to_string(members) +
                                   " outputs=" + std::to_string(outputs) + " perturbation=" +
                                   fmt4(magnitude) + "; final " + channel + " spread mean=" +
                                   fmt4(spread_stats.mean) + " max=" + fmt4(spread_stats.max) +
                                   "; spread/mean ratio=" + fmt4(ratio);
                        obs.data = {{"members", members},
                                    {"outputs", outputs},
                                    {"perturbation", magnitude},
                                    {"spread_mean", spread_stats.mean},
                                    {"spread_max", spread_stats.max},
                                    {"uncertainty_ratio", ratio},
                                    {"uncertainty_flag", flagged}};
                        if (verdict->passed) {
                            result.uncertainty_flag = flagged;
                            result.uncertainty_ratio = ratio;
                            advisory = flagged
                                           ? "uncertainty advisory: spread ratio " + fmt4(ratio) +
                                                 " exceeds threshold " + fmt4(threshold) +
                                                 "; a counterfactual probe is recommended"
                                           : "uncertainty advisory: spread ratio " + fmt4(ratio) +
                                                 " within threshold " + fmt4(threshold);
                            accepted_forecast = std::move(forecast);
                        }
                    }
                    break;
                }
                case ActionKind::reason: {
                    obs.text = "note recorded";
                    obs.data = {{"note", action.note}};
                    break;
                }
                case ActionKind::finalize: {
                    obs.text = "episode finalized";
                    result.title = action.title;
                    status = EpisodeStatus::finalized;
                    break;
                }
            }
        } catch (const Error& e) {
            // Tool failures become observations the policy can react to.
            obs.text = std::string("tool error: ") + e.what();
            obs.data = {{"error", e.what()}};
        }

        obs.verdict = verdict;
        const int obs_id = ep.add_node(std::move(obs));
        ep.trace.active_path.push_back(obs_id);

        if (verdict && !verdict->passed) {
            // Prune the branch; it stays in the tree for audit but leaves the
            // active path.
            ep.trace.nodes[static_cast<size_t>(action_id)].pruned = true;
            ep.trace.nodes[static_cast<size_t>(obs_id)].pruned = true;
            ep.trace.active_path.pop_back();
            ep.trace.active_path.pop_back();
            const std::string cause = violation_summary(*verdict);

            if (ep.retries >= cfg.rollback_limit) {
                // Retry budget exhausted: terminal failure, no further retry.
                status = EpisodeStatus::failed;
                break;
            }
            ++ep.retries;
            ep.trace.rollbacks.push_back({cause, action_id, ep.retries});

            TraceNode correction;
            correction.kind = "rollback";
            correction.parent = ep.active_tail();
            correction.text = "consistency check failed: " + cause +
                              "; the simulate result was discarded, propose a corrected action";
            correction.data = ep.trace.nodes[static_cast<size_t>(obs_id)].verdict->to_json();
            const int correction_id = ep.add_node(std::move(correction));
            ep.trace.active_path.push_back(correction_id);
            ep.history.push_back("[step " + std::to_string(step) + "] action: " +
                                 action_kind_name(action.kind) + " -> rejected: " + cause);
            continue;
        }

        // Accepted step: fold any new physical output into the working state.
        if (accepted_forecast) {
            result.mean_trajectory = std::move(accepted_forecast->mean_trajectory);
            result.spread_state = std::move(accepted_forecast->spread_trajectory.back());
            observed_state = &result.mean_trajectory.back();
            refresh_tokens(*observed_state);
        }
        if (accepted_probe) {
            result.sensitivity = accepted_probe->sensitivity;
            if (!accepted_probe->factual.mean_trajectory.empty() && result.mean_trajectory.empty()) {
                result.mean_trajectory = std::move(accepted_probe->factual.mean_trajectory);
                observed_state = &result.mean_trajectory.back();
                refresh_tokens(*observed_state);
            }
            for (const auto& n : ep.trace.nodes) {
                if (n.action && n.action->intervention && n.action->intervention->contains("label")) {
                    result.probe_label = n.action->intervention->at("label").get<std::string>();
                }
            }
        }
        ep.history.push_back(
            "[step " + std::to_string(step) + "] action: " + action_kind_name(action.kind) +
            (action.kind == ActionKind::retrieve ? "(\"" + action.query + "\")" : "") +
            " -> " + first_line(ep.trace.nodes[static_cast<size_t>(obs_id)].text));

        if (status == EpisodeStatus::finalized) break;
    }

    ep.trace.status = status;
    result.status = status;
    result.trace = std::move(ep.trace);
    if (result.mean_trajectory.empty()) {
        result.mean_trajectory.push_back(inputs.initial_state);
    }
    return result;
}

}  // namespace flowcast
