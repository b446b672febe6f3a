#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "critic.hpp"
#include "knowledge.hpp"
#include "policy.hpp"
#include "probe.hpp"
#include "projector.hpp"
#include "simulator.hpp"
#include "topology.hpp"

namespace flowcast {

struct EpisodeConfig {
    std::string system_instruction =
        "You are a physics-grounded forecasting analyst. Ground every claim in the retrieved context and "
        "the simulated evidence, respect conservation laws, and reply with exactly one fenced action "
        "block per turn.";
    int max_steps = 8;
    int rollback_limit = 3;            // retries allowed after critic violations
    double uncertainty_threshold = 0.5;  // spread/mean ratio that recommends a probe
    double uncertainty_decay = 1.0;      // per-step multiplier on the threshold
    size_t history_char_budget = 4000;
    int retrieval_k = 3;
    int ensemble_size = 8;       // default members per Simulate
    double perturbation = 0.02;  // default latent noise magnitude
    int forecast_outputs = 2;    // outputs per Simulate
    ConstraintSpec constraints;
    std::string config_hash;  // provenance, echoed into traces and reports

    void validate() const;
};

enum class EpisodeStatus { finalized, failed, truncated };
std::string episode_status_name(EpisodeStatus status);

// Debug/test hook: corrupt Simulate results so the critic path is exercised.
enum class FaultInjection { none, divergence_once, divergence_always };
FaultInjection parse_fault_injection(const std::string& name);

struct TraceNode {
    int id = 0;
    int parent = -1;
    std::string kind;  // "action" | "observation" | "rollback"
    bool pruned = false;
    std::optional<AgentAction> action;
    std::string text;                      // observation / correction text
    nlohmann::ordered_json data;           // structured payload
    std::optional<ConsistencyVerdict> verdict;
    std::string tool_call_id;              // observations carry their producing call
};

struct RollbackEvent {
    std::string cause;
    int pruned_node = -1;
    int retry = 0;
};

struct ReasoningTrace {
    std::string episode_id;
    uint64_t seed = 0;
    std::string config_hash;
    EpisodeStatus status = EpisodeStatus::truncated;
    std::vector<TraceNode> nodes;
    std::vector<int> active_path;
    std::vector<RollbackEvent> rollbacks;

    nlohmann::ordered_json to_json() const;
};

// Everything the report generator needs from a finished episode.
struct EpisodeResult {
    ReasoningTrace trace;
    EpisodeStatus status = EpisodeStatus::truncated;
    std::vector<FlowState> mean_trajectory;   // last accepted forecast
    std::optional<FlowState> spread_state;    // spread at the final output
    std::vector<TopologicalDescriptor> descriptors;
    std::string rendered_tokens;
    std::vector<ScoredChunk> retrieved;       // last retrieval, score order
    std::optional<double> sensitivity;        // from a counterfactual probe
    std::optional<std::string> probe_label;
    bool uncertainty_flag = false;
    double uncertainty_ratio = 0.0;
    std::string title;
};

struct EpisodeInputs {
    FlowState initial_state;
    const KnowledgeStore* store = nullptr;  // optional; Retrieve fails as a tool error without it
    const Embedder* embedder = nullptr;
    SimulatorConfig sim;
};

// Prompt assembly in the fixed section order: system instruction, retrieved
// context, field observation (token rendering), history. The history section
// elides oldest entries first when over budget.
std::string assemble_prompt(const std::string& system_instruction, const std::string& retrieved_context,
                            const std::string& field_observation, const std::vector<std::string>& history,
                            size_t history_char_budget);

// True when mean(spread) / mean(|mean field|) exceeds the threshold.
bool uncertainty_gate(const ScalarField& spread, const ScalarField& mean_field, double threshold,
                      double* ratio_out = nullptr);

EpisodeResult run_episode(const EpisodeInputs& inputs, const EpisodeConfig& cfg, PolicyBackend& policy,
                          FaultInjection fault = FaultInjection::none);

}  // namespace flowcast
