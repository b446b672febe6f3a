#include "report.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>

#include "units.hpp"

namespace flowcast {

namespace {

std::string fmt4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '/' || c == '-';
}

}  // namespace

std::vector<AlertBox> trigger_alerts(const std::vector<FlowState>& states,
                                     const std::vector<std::pair<std::string, ThresholdRule>>& rules) {
    std::vector<AlertBox> alerts;
    for (const auto& [chunk_id, rule] : rules) {
        bool found = false;
        double extremal = 0.0;
        std::string field_unit;
        for (const auto& state : states) {
            if (!state.has_channel(rule.variable)) continue;
            const auto& field = state.channel(rule.variable);
            if (!unit_convertible(field.unit(), rule.unit)) {
                throw runtime_error("alert rule '" + chunk_id + "' compares " + rule.unit +
                                    " against channel unit " + field.unit());
            }
            const auto s = field_stats(field);
            const double candidate = rule.comparator == ">" ? s.max : s.min;
            if (!found) {
                extremal = candidate;
                field_unit = field.unit();
                found = true;
            } else {
                extremal = rule.comparator == ">" ? std::max(extremal, candidate)
                                                  : std::min(extremal, candidate);
            }
        }
        if (!found) continue;
        // Both supported conversions are increasing linear maps, so the
        // extremal statistic can be converted after the reduction.
        const double observed = convert_value(extremal, field_unit, rule.unit);
        const bool fired = rule.comparator == ">" ? observed > rule.value : observed < rule.value;
        if (fired) {
            alerts.push_back(
                {chunk_id, rule.variable, observed, rule.unit, rule.comparator, rule.value, rule.directive});
        }
    }
    return alerts;
}

std::string sanitize_numbers(const std::string& text) {
    std::string out;
    size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        const bool starts_number =
            (std::isdigit(static_cast<unsigned char>(c)) ||
             (c == '-' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1]))));
        const bool boundary = (i == 0) || !ident_char(text[i - 1]);
        if (starts_number && boundary) {
            size_t j = i;
            if (text[j] == '-') ++j;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            bool has_fraction = false;
            if (j < text.size() && text[j] == '.' && j + 1 < text.size() &&
                std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
                has_fraction = true;
                ++j;
                while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            }
            // Leave identifier-embedded digits alone ("ep-0a12", "c1").
            if (j < text.size() && ident_char(text[j]) && text[j] != '-') {
                out.append(text, i, j - i);
                i = j;
                continue;
            }
            (void)has_fraction;
            out += fmt4(std::stod(text.substr(i, j - i)));
            i = j;
        } else {
            out += c;
            ++i;
        }
    }
    return out;
}

namespace {

std::string template_summary(const AnalysisReport& report) {
    if (report.statistical_overview.empty()) return "insufficient data";
    const auto& lead = report.statistical_overview.front();
    std::string text = "The forecast tracks " + std::to_string(report.statistical_overview.size()) +
                       " physical variable(s); the leading channel " + lead.variable +
                       " holds a global mean of " + fmt4(lead.stats.mean) + " " + lead.unit +
                       " with extremes spanning " + fmt4(lead.stats.min) + " to " + fmt4(lead.stats.max) +
                       " " + lead.unit + ".";
    if (report.uncertainty_flag) {
        text += " Ensemble spread is elevated (ratio " + fmt4(report.uncertainty_ratio) +
                "), so the forecast carries meaningful epistemic uncertainty.";
    } else {
        text += " Ensemble spread stays low (ratio " + fmt4(report.uncertainty_ratio) +
                "), indicating a confident forecast.";
    }
    if (!report.alerts.empty()) {
        text += " " + std::to_string(report.alerts.size()) +
                " safety protocol threshold(s) are violated; see the alert box.";
    }
    return text;
}

std::string template_insights(const AnalysisReport& report) {
    if (report.statistical_overview.empty()) return "insufficient data";
    std::string text =
        "The variability pattern is consistent with the simulated dynamics; standard deviations stay "
        "bounded and no non-physical artifacts were flagged by the consistency critic.";
    if (report.sensitivity) {
        text += " A counterfactual probe measured a causal sensitivity of " + fmt4(*report.sensitivity) +
                ", separating the driven response from ensemble noise.";
    }
    if (!report.alerts.empty()) {
        text += " Operational guidance: ";
        for (size_t i = 0; i < report.alerts.size(); ++i) {
            if (i) text += "; ";
            text += report.alerts[i].directive;
        }
        text += ".";
    } else {
        text += " No protocol thresholds were crossed, so routine operations can continue.";
    }
    return text;
}

}  // namespace

std::pair<std::string, std::string> narrative_sections(PolicyBackend& policy,
                                                       const AnalysisReport& report) {
    const std::string summary_template = template_summary(report);
    const std::string insights_template = template_insights(report);
    if (report.statistical_overview.empty()) return {summary_template, insights_template};

    std::string data_block = "DATA\n";
    for (const auto& v : report.statistical_overview) {
        data_block += v.variable + " [" + v.unit + "]: mean=" + fmt4(v.stats.mean) +
                      " min=" + fmt4(v.stats.min) + " max=" + fmt4(v.stats.max) +
                      " std=" + fmt4(v.stats.std_dev) + "\n";
    }
    data_block += "structures:\n" + report.spatial_pattern_analysis + "\n";

    auto summary = policy.compose(
        "Write a two-sentence executive summary of this physical forecast. Use only the numbers given.\n" +
        data_block);
    auto insights = policy.compose(
        "Write a short conclusion with operational insights for this forecast. Use only the numbers "
        "given.\n" +
        data_block);
    return {summary ? sanitize_numbers(*summary) : summary_template,
            insights ? sanitize_numbers(*insights) : insights_template};
}

AnalysisReport build_report(const EpisodeResult& episode, const KnowledgeStore* store,
                            PolicyBackend& policy, const ReportOptions& options) {
    AnalysisReport report;
    if (!episode.title.empty()) report.title = episode.title;
    report.episode_id = episode.trace.episode_id;
    report.seed = episode.trace.seed;
    report.config_hash = episode.trace.config_hash;
    report.policy_name = policy.name();
    report.sensitivity = episode.sensitivity;
    report.uncertainty_flag = episode.uncertainty_flag;
    report.uncertainty_ratio = episode.uncertainty_ratio;

    if (!episode.mean_trajectory.empty()) {
        const FlowState& final_state = episode.mean_trajectory.back();
        for (const auto& ch : final_state.channels()) {
            auto pref = options.unit_preferences.find(ch.variable());
            const ScalarField* field = &ch;
            ScalarField converted;
            if (pref != options.unit_preferences.end() && pref->second != ch.unit()) {
                converted = convert_units(ch, pref->second);
                field = &converted;
            }
            report.statistical_overview.push_back({field->variable(), field->unit(), field_stats(*field)});
        }
    }
    report.spatial_pattern_analysis = episode.rendered_tokens;
    if (store) {
        report.alerts = trigger_alerts(episode.mean_trajectory, store->protocol_rules());
    }
    auto [summary, insights] = narrative_sections(policy, report);
    report.executive_summary = summary;
    report.insights_conclusion = insights;
    return report;
}

RenderedReport render_report(const AnalysisReport& report) {
    std::string md;
    md += "# " + report.title + "\n\n";

    md += "## Executive Summary\n";
    md += (report.executive_summary.empty() ? "n/a" : sanitize_numbers(report.executive_summary)) + "\n\n";

    md += "## Statistical Overview\n";
    if (report.statistical_overview.empty()) {
        md += "n/a\n\n";
    } else {
        md += "| variable | unit | mean | min | max | std |\n";
        md += "| --- | --- | --- | --- | --- | --- |\n";
        for (const auto& v : report.statistical_overview) {
            md += "| " + v.variable + " | " + v.unit + " | " + fmt4(v.stats.mean) + " | " +
                  fmt4(v.stats.min) + " | " + fmt4(v.stats.max) + " | " + fmt4(v.stats.std_dev) + " |\n";
        }
        md += "\n";
    }

    md += "## Spatial Pattern Analysis\n";
    md += (report.spatial_pattern_analysis.empty() ? "n/a"
                                                   : sanitize_numbers(report.spatial_pattern_analysis)) +
          "\n\n";

    md += "## Alerts\n";
    if (report.alerts.empty()) {
        md += "no protocol thresholds violated\n\n";
    } else {
        for (const auto& a : report.alerts) {
            md += "> **ALERT** [" + a.chunk_id + "] " + a.variable + " observed " + fmt4(a.observed) +
                  " " + a.unit + " " + a.comparator + " threshold " + fmt4(a.threshold) + " " + a.unit +
                  " -> directive: " + a.directive + "\n";
        }
        md += "\n";
    }

    md += "## Physical Insights & Conclusion\n";
    md += (report.insights_conclusion.empty() ? "n/a" : sanitize_numbers(report.insights_conclusion)) +
          "\n\n";

    md += "---\n";
    md += "provenance: episode " + report.episode_id + "; seed " + fmt4(double(report.seed)) +
          "; config " + report.config_hash + "; policy " + report.policy_name;
    if (report.sensitivity) md += "; causal sensitivity " + fmt4(*report.sensitivity);
    md += "\n";

    RenderedReport out;
    out.markdown = std::move(md);

    nlohmann::ordered_json side;
    side["title"] = report.title;
    side["executive_summary"] = report.executive_summary;
    auto stats_array = nlohmann::ordered_json::array();
    for (const auto& v : report.statistical_overview) {
        stats_array.push_back({{"variable", v.variable},
                               {"unit", v.unit},
                               {"mean", v.stats.mean},
                               {"min", v.stats.min},
                               {"max", v.stats.max},
                               {"std", v.stats.std_dev}});
    }
    side["statistical_overview"] = std::move(stats_array);
    side["spatial_pattern_analysis"] = report.spatial_pattern_analysis;
    auto alert_array = nlohmann::ordered_json::array();
    for (const auto& a : report.alerts) {
        alert_array.push_back({{"chunk_id", a.chunk_id},
                               {"variable", a.variable},
                               {"observed", a.observed},
                               {"unit", a.unit},
                               {"comparator", a.comparator},
                               {"threshold", a.threshold},
                               {"directive", a.directive}});
    }
    side["alerts"] = std::move(alert_array);
    side["insights_conclusion"] = report.insights_conclusion;
    nlohmann::ordered_json provenance = {{"episode_id", report.episode_id},
                                         {"seed", report.seed},
                                         {"config_hash", report.config_hash},
                                         {"policy", report.policy_name},
                                         {"uncertainty_flag", report.uncertainty_flag},
                                         {"uncertainty_ratio", report.uncertainty_ratio}};
    if (report.sensitivity) provenance["sensitivity"] = *report.sensitivity;
    side["provenance"] = std::move(provenance);
    out.sidecar = side;
    return out;
}

}  // namespace flowcast
