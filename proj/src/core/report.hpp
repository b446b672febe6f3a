#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agent.hpp"
#include "knowledge.hpp"

namespace flowcast {

// A protocol threshold that the forecast actually violates, carrying the
// retrieved directive. `observed` is expressed in the rule's unit so the
// trigger can be re-checked from the report alone.
struct AlertBox {
    std::string chunk_id;
    std::string variable;
    double observed = 0.0;
    std::string unit;
    std::string comparator;
    double threshold = 0.0;
    std::string directive;
};

struct VariableStats {
    std::string variable;
    std::string unit;
    FieldStats stats;
};

struct AnalysisReport {
    std::string title = "Forecast Analysis Report";
    std::string executive_summary;
    std::vector<VariableStats> statistical_overview;
    std::string spatial_pattern_analysis;
    std::string insights_conclusion;
    std::vector<AlertBox> alerts;
    // Provenance
    std::string episode_id;
    uint64_t seed = 0;
    std::string config_hash;
    std::string policy_name;
    std::optional<double> sensitivity;
    bool uncertainty_flag = false;
    double uncertainty_ratio = 0.0;
};

struct ReportOptions {
    // Render a variable in a preferred unit, e.g. {"pressure", "hPa"}.
    std::map<std::string, std::string> unit_preferences;
};

// Evaluates every rule against the extremal statistic across the given
// states: max for ">", min for "<", strict comparison, units converted
// before comparing. Unit mismatches that cannot be converted raise.
std::vector<AlertBox> trigger_alerts(const std::vector<FlowState>& states,
                                     const std::vector<std::pair<std::string, ThresholdRule>>& rules);

// Rewrites every standalone numeric token to the 4-decimal form used
// throughout report markdown. Identifier-embedded digits are left alone.
std::string sanitize_numbers(const std::string& text);

// Summary and insight text. The policy backend writes them when it can
// (remote backends); the scripted mock falls back to deterministic
// templates filled from the computed data, so golden runs are reproducible.
// All numbers in either path come from computed statistics.
std::pair<std::string, std::string> narrative_sections(PolicyBackend& policy,
                                                       const AnalysisReport& report);

// Assembles a report from a finished episode plus the protocol rules.
AnalysisReport build_report(const EpisodeResult& episode, const KnowledgeStore* store,
                            PolicyBackend& policy, const ReportOptions& options = {});

struct RenderedReport {
    std::string markdown;
    nlohmann::ordered_json sidecar;
};

// Deterministic markdown in the template section order plus a JSON sidecar
// mirroring every number at full precision. Empty sections render as "n/a".
RenderedReport render_report(const AnalysisReport& report);

}  // namespace flowcast
