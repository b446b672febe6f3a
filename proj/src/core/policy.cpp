#include "policy.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"

namespace flowcast {

std::string action_kind_name(ActionKind kind) {
    switch (kind) {
        case ActionKind::retrieve: return "retrieve";
        case ActionKind::simulate: return "simulate";
        case ActionKind::reason: return "reason";
        case ActionKind::finalize: return "finalize";
    }
    return "reason";
}

nlohmann::ordered_json AgentAction::to_json() const {
    nlohmann::ordered_json doc;
    doc["action"] = action_kind_name(kind);
    switch (kind) {
        case ActionKind::retrieve:
            doc["query"] = query;
            doc["partition"] = partition ? partition_name(*partition) : "all";
            if (retrieval_k > 0) doc["k"] = retrieval_k;
            break;
        case ActionKind::simulate:
            doc["kind"] = simulate_kind;
            if (ensemble_size) doc["ensemble_size"] = *ensemble_size;
            if (perturbation) doc["perturbation"] = *perturbation;
            if (outputs) doc["outputs"] = *outputs;
            if (intervention) doc["intervention"] = *intervention;
            break;
        case ActionKind::reason:
            doc["note"] = note;
            break;
        case ActionKind::finalize:
            if (!title.empty()) doc["title"] = title;
            break;
    }
    return doc;
}

AgentAction parse_action(const std::string& completion) {
    const std::string open_tag = "```action";
    const size_t open = completion.rfind(open_tag);
    if (open == std::string::npos) {
        throw runtime_error("policy reply lacks a fenced action block");
    }
    const size_t body_start = completion.find('\n', open);
    if (body_start == std::string::npos) {
        throw runtime_error("policy action block is empty");
    }
    const size_t close = completion.find("```", body_start);
    if (close == std::string::npos) {
        throw runtime_error("policy action block is not closed");
    }
    const std::string body = completion.substr(body_start + 1, close - body_start - 1);

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw runtime_error(std::string("policy action block is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("action")) {
        throw runtime_error("policy action block must be an object with an 'action' field");
    }

    AgentAction action;
    action.raw_completion = completion;
    {
        std::string rationale = completion.substr(0, open);
        const size_t tail_start = close + 3;
        if (tail_start < completion.size()) rationale += completion.substr(tail_start);
        const size_t a = rationale.find_first_not_of(" \t\r\n");
        const size_t b = rationale.find_last_not_of(" \t\r\n");
        action.rationale = a == std::string::npos ? "" : rationale.substr(a, b - a + 1);
    }

    const std::string kind = doc.at("action").get<std::string>();
    if (kind == "retrieve") {
        action.kind = ActionKind::retrieve;
        if (!doc.contains("query")) throw runtime_error("retrieve action requires a 'query'");
        action.query = doc.at("query").get<std::string>();
        const std::string partition = doc.value("partition", std::string("all"));
        if (partition != "all") action.partition = parse_partition(partition);
        action.retrieval_k = doc.value("k", 0);
    } else if (kind == "simulate") {
        action.kind = ActionKind::simulate;
        action.simulate_kind = doc.value("kind", std::string("ensemble"));
        if (action.simulate_kind != "ensemble" && action.simulate_kind != "counterfactual") {
            throw runtime_error("simulate kind must be 'ensemble' or 'counterfactual'");
        }
        if (doc.contains("ensemble_size")) action.ensemble_size = doc.at("ensemble_size").get<int>();
        if (doc.contains("perturbation")) action.perturbation = doc.at("perturbation").get<double>();
        if (doc.contains("outputs")) action.outputs = doc.at("outputs").get<int>();
        if (doc.contains("intervention")) action.intervention = doc.at("intervention");
    } else if (kind == "reason") {
        action.kind = ActionKind::reason;
        if (!doc.contains("note")) throw runtime_error("reason action requires a 'note'");
        action.note = doc.at("note").get<std::string>();
    } else if (kind == "finalize") {
        action.kind = ActionKind::finalize;
        action.title = doc.value("title", std::string());
    } else {
        throw runtime_error("unknown action '" + kind + "'");
    }
    return action;
}

namespace {

std::string fenced(const std::string& rationale, const std::string& json_body) {
    return rationale + "\n\n```action\n" + json_body + "\n```\n";
}

std::vector<std::string> script_completions(const std::string& name, bool& cycle) {
    cycle = false;
    if (name == "golden") {
        return {
            fenced("The governing constraints should be on record before any forecast is issued.",
                   R"({"action": "retrieve", "query": "mass conservation", "partition": "phy", "k": 2})"),
            fenced("With the conservation context in hand, run a perturbed ensemble to gauge uncertainty.",
                   R"({"action": "simulate", "kind": "ensemble"})"),
            fenced("The spread stays small against the mean flow; record the conclusion.",
                   R"({"action": "reason", "note": "Ensemble members remain mutually consistent and the vorticity field decays smoothly; no counterfactual probe is required."})"),
            fenced("All evidence is gathered; produce the report.", R"({"action": "finalize"})"),
        };
    }
    if (name == "recover") {
        return {
            fenced("Check the conservation constraints first.",
                   R"({"action": "retrieve", "query": "mass conservation", "partition": "phy", "k": 2})"),
            fenced("Run the ensemble forecast.", R"({"action": "simulate", "kind": "ensemble"})"),
            fenced("The previous simulation was rejected; rerun it.",
                   R"({"action": "simulate", "kind": "ensemble"})"),
            fenced("The rerun is physically consistent; note it.",
                   R"({"action": "reason", "note": "The corrected simulation passes the consistency check."})"),
            fenced("Close out the analysis.", R"({"action": "finalize"})"),
        };
    }
    if (name == "stubborn") {
        cycle = true;
        return {fenced("Simulate again.", R"({"action": "simulate", "kind": "ensemble"})")};
    }
    if (name == "finalize") {
        return {fenced("Nothing further is needed.", R"({"action": "finalize"})")};
    }
    if (name == "reason-loop") {
        cycle = true;
        return {fenced("Still thinking.", R"({"action": "reason", "note": "Deliberating."})")};
    }
    if (name == "probe") {
        return {
            fenced("Gauge the uncertainty first.", R"({"action": "simulate", "kind": "ensemble"})"),
            fenced("Probe the sensitivity to a weakened initial structure.",
                   R"({"action": "simulate", "kind": "counterfactual", "intervention": {"channel": "vorticity", "op": "scale", "amount": 0.5, "label": "weak_high"}})"),
            fenced("Summarize and close.", R"({"action": "finalize"})"),
        };
    }
    throw config_error("unknown scripted policy '" + name +
                       "' (available: golden, recover, stubborn, finalize, reason-loop, probe)");
}

}  // namespace

ScriptedPolicy::ScriptedPolicy(const std::string& script_name) : script_name_(script_name) {
    completions_ = script_completions(script_name, cycle_);
}

std::string ScriptedPolicy::propose(const std::string&) {
    if (completions_.empty()) throw runtime_error("scripted policy has no completions");
    const size_t idx = cycle_ ? next_ % completions_.size() : std::min(next_, completions_.size() - 1);
    ++next_;
    return completions_[idx];
}

RemotePolicy::RemotePolicy(RemotePolicyOptions options) : options_(std::move(options)) {
    if (options_.url.empty()) throw config_error("remote policy requires a URL");
}

namespace {

// Splits "http://host:port/path" into client base and path.
std::pair<std::string, std::string> split_url(const std::string& url) {
    const size_t scheme = url.find("://");
    if (scheme == std::string::npos) {
        throw config_error("remote URL '" + url + "' needs a scheme");
    }
    const size_t path_start = url.find('/', scheme + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string http_post_json(const std::string& url, const nlohmann::json& body,
                           const std::string& api_key_env, int timeout_seconds, int max_attempts,
                           const char* what) {
    auto [base, path] = split_url(url);
    httplib::Client client(base);
    client.set_connection_timeout(5, 0);
    client.set_read_timeout(timeout_seconds, 0);

    httplib::Headers headers;
    if (const char* key = std::getenv(api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    std::string last_error;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (res) {
            if (res->status != 200) {
                throw Error(ErrorKind::runtime, std::string(what) + " endpoint returned HTTP " +
                                                    std::to_string(res->status) + ": " + res->body);
            }
            return res->body;
        }
        last_error = httplib::to_string(res.error());
        if (attempt < max_attempts) {
            std::this_thread::sleep_for(std::chrono::milliseconds(250 * attempt));
        }
    }
    throw Error(ErrorKind::runtime, std::string(what) + " transport failure after " +
                                        std::to_string(max_attempts) + " attempts to " + url + ": " +
                                        last_error);
}

}  // namespace

std::string RemotePolicy::propose(const std::string& prompt) {
    nlohmann::json body = {
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", options_.temperature},
        {"max_tokens", options_.max_tokens},
    };
    if (!options_.model.empty()) body["model"] = options_.model;
    const std::string response = http_post_json(options_.url, body, options_.api_key_env,
                                                options_.timeout_seconds, options_.max_attempts, "policy");
    try {
        auto doc = nlohmann::json::parse(response);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::runtime,
                    std::string("policy endpoint returned an unexpected payload: ") + e.what());
    }
}

std::unique_ptr<PolicyBackend> make_policy(const std::string& spec) {
    if (spec.rfind("scripted:", 0) == 0) {
        return std::make_unique<ScriptedPolicy>(spec.substr(9));
    }
    if (spec.rfind("remote:", 0) == 0) {
        RemotePolicyOptions options;
        options.url = spec.substr(7);
        if (const char* model = std::getenv("FLOWCAST_POLICY_MODEL"); model && *model) {
            options.model = model;
        }
        return std::make_unique<RemotePolicy>(std::move(options));
    }
    throw config_error("unknown policy spec '" + spec + "' (expected scripted:<name> or remote:<url>)");
}

namespace {

class RemoteEmbedder : public Embedder {
public:
    RemoteEmbedder(int dimension, std::string url) : dimension_(dimension), url_(std::move(url)) {}
    int dimension() const override { return dimension_; }

    std::vector<double> embed(const std::string& text) const override {
        nlohmann::json body = {{"input", text}};
        const std::string response = http_post_json(url_, body, "FLOWCAST_API_KEY", 30, 3, "embedder");
        try {
            auto doc = nlohmann::json::parse(response);
            const auto& arr =
                doc.contains("embedding") ? doc.at("embedding") : doc.at("data").at(0).at("embedding");
            auto v = arr.get<std::vector<double>>();
            if (static_cast<int>(v.size()) != dimension_) {
                throw Error(ErrorKind::runtime,
                            "embedder returned dimension " + std::to_string(v.size()) + ", expected " +
                                std::to_string(dimension_));
            }
            return v;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::runtime,
                        std::string("embedder endpoint returned an unexpected payload: ") + e.what());
        }
    }

private:
    int dimension_;
    std::string url_;
};

}  // namespace

std::unique_ptr<Embedder> make_remote_embedder(const std::string& spec) {
    // remote:<dim>:<url>
    const std::string rest = spec.substr(7);
    const size_t colon = rest.find(':');
    if (colon == std::string::npos) {
        throw config_error("remote embedder spec must be remote:<dim>:<url>");
    }
    int dim = 0;
    try {
        dim = std::stoi(rest.substr(0, colon));
    } catch (const std::exception&) {
        throw config_error("remote embedder spec must be remote:<dim>:<url>");
    }
    return std::make_unique<RemoteEmbedder>(dim, rest.substr(colon + 1));
}

}  // namespace flowcast
