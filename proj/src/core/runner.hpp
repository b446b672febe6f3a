#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "json.hpp"

namespace flowcast {

// One CLI subcommand invocation: resolved config plus an output directory.
// Flags land in `overrides` as key=value pairs (flags > file > defaults).
struct RunRequest {
    std::string command;
    std::optional<std::filesystem::path> config_file;
    std::vector<std::string> overrides;
    std::optional<std::filesystem::path> out_dir;
};

struct RunOutcome {
    int exit_code = 0;  // 0 ok, 4 physics-failure; errors are thrown instead
    nlohmann::ordered_json summary;
};

// Dispatches simulate, ensemble, probe, retrieve, agent-run, report,
// evaluate and train-projector. Every artifact-producing run writes a
// manifest.json naming inputs, resolved config, config hash, seed and
// outputs; reruns of the same request are byte-identical.
RunOutcome run_command(const RunRequest& request);

}  // namespace flowcast
