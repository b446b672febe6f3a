#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "knowledge.hpp"

namespace flowcast {

enum class ActionKind { retrieve, simulate, reason, finalize };

std::string action_kind_name(ActionKind kind);

// One parsed policy decision. The wire format is a fenced block tagged
// `action` holding a JSON object; free text outside the fence is rationale.
//
//   ```action
//   {"action": "retrieve", "query": "...", "partition": "phy", "k": 2}
//   ```
//
// Supported shapes:
//   retrieve: query (required), partition (phy|prot|hist|all), k
//   simulate: kind ("ensemble"|"counterfactual"), ensemble_size,
//             perturbation, outputs, intervention (JSON object)
//   reason:   note (required)
//   finalize: title (optional)
struct AgentAction {
    ActionKind kind = ActionKind::reason;
    std::string rationale;
    std::string raw_completion;

    std::string query;
    std::optional<Partition> partition;  // nullopt = all partitions
    int retrieval_k = 0;                 // 0 = episode default

    std::string simulate_kind = "ensemble";
    std::optional<nlohmann::json> intervention;
    std::optional<int> ensemble_size;
    std::optional<double> perturbation;
    std::optional<int> outputs;

    std::string note;
    std::string title;

    nlohmann::ordered_json to_json() const;
};

// Parses a raw completion against the action grammar. A missing or
// malformed action block is an error, never a guess.
AgentAction parse_action(const std::string& completion);

class PolicyBackend {
public:
    virtual ~PolicyBackend() = default;
    virtual std::string name() const = 0;
    virtual bool scripted() const = 0;
    // Returns the raw completion for an action prompt.
    virtual std::string propose(const std::string& prompt) = 0;
    // Free-text generation for report narratives; nullopt means the caller
    // should fall back to its deterministic template.
    virtual std::optional<std::string> compose(const std::string& prompt) = 0;
};

// Deterministic mock cycling through a named completion script. Available
// scripts: golden, recover, stubborn, finalize, reason-loop.
class ScriptedPolicy : public PolicyBackend {
public:
    explicit ScriptedPolicy(const std::string& script_name);
    std::string name() const override { return "scripted:" + script_name_; }
    bool scripted() const override { return true; }
    std::string propose(const std::string& prompt) override;
    std::optional<std::string> compose(const std::string&) override { return std::nullopt; }

private:
    std::string script_name_;
    std::vector<std::string> completions_;
    bool cycle_ = false;
    size_t next_ = 0;
};

struct RemotePolicyOptions {
    std::string url;
    std::string model;           // optional; omitted from the body when empty
    double temperature = 0.0;
    int max_tokens = 1024;
    int timeout_seconds = 30;
    int max_attempts = 3;        // 1 try + 2 retries on transport failure
    std::string api_key_env = "FLOWCAST_API_KEY";
};

// Chat-completion client: POST {model?, messages: [{role, content}],
// temperature, max_tokens} and read choices[0].message.content. The API key
// comes from the environment, never from config files.
class RemotePolicy : public PolicyBackend {
public:
    explicit RemotePolicy(RemotePolicyOptions options);
    std::string name() const override { return "remote:" + options_.url; }
    bool scripted() const override { return false; }
    std::string propose(const std::string& prompt) override;
    std::optional<std::string> compose(const std::string& prompt) override { return propose(prompt); }

private:
    RemotePolicyOptions options_;
};

// "scripted:<name>" or "remote:<url>".
std::unique_ptr<PolicyBackend> make_policy(const std::string& spec);

}  // namespace flowcast
