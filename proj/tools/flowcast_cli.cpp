// Operator CLI. Talks to the core exclusively through the C API so it doubles
// as a reference consumer of the shared library.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flowcast/flowcast.h"

namespace {

struct CommonArgs {
    std::string config;
    std::string out_dir;
    std::vector<std::string> sets;
    long long seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool out_required) {
    cmd->add_option("--config", args.config, "key = value config file (supports 'include <path>')");
    auto* out = cmd->add_option("--out", args.out_dir, "output directory for artifacts + manifest.json");
    if (out_required) out->required();
    cmd->add_option("--set", args.sets, "override a config key, e.g. --set viscosity=0.001")
        ->take_all();
    cmd->add_option("--seed", args.seed, "random seed (shorthand for --set seed=N)");
}

int dispatch(const std::string& command, const CommonArgs& args, std::vector<std::string> extra_sets,
             bool print_summary) {
    std::vector<std::string> overrides = args.sets;
    for (auto& s : extra_sets) overrides.push_back(std::move(s));
    if (args.seed >= 0) overrides.push_back("seed=" + std::to_string(args.seed));

    std::vector<const char*> override_ptrs;
    override_ptrs.reserve(overrides.size());
    for (const auto& s : overrides) override_ptrs.push_back(s.c_str());

    char* summary = nullptr;
    const fc_status status = fc_run(command.c_str(), args.config.empty() ? nullptr : args.config.c_str(),
                                    override_ptrs.empty() ? nullptr : override_ptrs.data(),
                                    override_ptrs.size(),
                                    args.out_dir.empty() ? nullptr : args.out_dir.c_str(), &summary);
    if (status == FC_OK || status == FC_PHYSICS_FAILURE) {
        if (summary && print_summary) std::printf("%s\n", summary);
        if (status == FC_PHYSICS_FAILURE) {
            std::fprintf(stderr, "flowcast: %s\n", fc_last_error());
        }
    } else {
        std::fprintf(stderr, "flowcast: %s\n", fc_last_error());
    }
    fc_string_free(summary);
    return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowcast: spectral flow forecasting with a physics-checked reasoning loop"};
    app.require_subcommand(1);

    CommonArgs simulate_args;
    auto* simulate = app.add_subcommand("simulate", "deterministic rollout of the initial state");
    add_common(simulate, simulate_args, true);

    CommonArgs ensemble_args;
    auto* ensemble = app.add_subcommand("ensemble", "perturbed ensemble rollout with mean and spread");
    add_common(ensemble, ensemble_args, true);

    CommonArgs probe_args;
    std::string intervention_file;
    auto* probe = app.add_subcommand("probe", "paired counterfactual rollout and causal sensitivity");
    add_common(probe, probe_args, true);
    probe->add_option("--intervention", intervention_file, "intervention JSON document");

    CommonArgs retrieve_args;
    std::string query, partition;
    long long top_k = -1;
    auto* retrieve = app.add_subcommand("retrieve", "query the knowledge store");
    add_common(retrieve, retrieve_args, false);
    retrieve->add_option("--query", query, "query text")->required();
    retrieve->add_option("--k", top_k, "number of chunks to return");
    retrieve->add_option("--partition", partition, "phy, prot, hist or all");
    std::string corpus_r, store_r;
    retrieve->add_option("--corpus", corpus_r, "corpus root with phy/ prot/ hist/ subdirectories");
    retrieve->add_option("--store", store_r, "persisted store stem");

    CommonArgs agent_args;
    std::string policy, fault, corpus_a, store_a;
    auto* agent = app.add_subcommand("agent-run", "physics-guided reasoning episode");
    add_common(agent, agent_args, true);
    agent->add_option("--policy", policy, "scripted:<name> or remote:<url>");
    agent->add_option("--corpus", corpus_a, "corpus root with phy/ prot/ hist/ subdirectories");
    agent->add_option("--store", store_a, "persisted store stem");
    agent->add_option("--fault", fault, "none, divergence-once or divergence-always (debug hook)");

    CommonArgs report_args;
    std::string run_dir, corpus_p, store_p, policy_p;
    auto* report = app.add_subcommand("report", "structured analysis report for a state or run");
    add_common(report, report_args, true);
    report->add_option("--run", run_dir, "previous run directory to report on");
    report->add_option("--corpus", corpus_p, "corpus root with phy/ prot/ hist/ subdirectories");
    report->add_option("--store", store_p, "persisted store stem");
    report->add_option("--policy", policy_p, "narrative backend");

    CommonArgs evaluate_args;
    std::string pred_dir, ref_dir, channel;
    auto* evaluate = app.add_subcommand("evaluate", "RMSE/SSIM/PSNR between two trajectories");
    add_common(evaluate, evaluate_args, true);
    evaluate->add_option("--pred", pred_dir, "prediction run directory")->required();
    evaluate->add_option("--ref", ref_dir, "reference run directory")->required();
    evaluate->add_option("--channel", channel, "channel to score (default vorticity)");

    CommonArgs train_args;
    auto* train = app.add_subcommand("train-projector", "contrastive training of the token projector");
    add_common(train, train_args, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    auto opt = [](const std::string& key, const std::string& value) {
        return key + "=" + value;
    };

    if (simulate->parsed()) return dispatch("simulate", simulate_args, {}, true);
    if (ensemble->parsed()) return dispatch("ensemble", ensemble_args, {}, true);
    if (probe->parsed()) {
        std::vector<std::string> extra;
        if (!intervention_file.empty()) extra.push_back(opt("intervention", intervention_file));
        return dispatch("probe", probe_args, std::move(extra), true);
    }
    if (retrieve->parsed()) {
        std::vector<std::string> extra{opt("query", query)};
        if (top_k >= 0) extra.push_back(opt("k", std::to_string(top_k)));
        if (!partition.empty()) extra.push_back(opt("partition", partition));
        if (!corpus_r.empty()) extra.push_back(opt("corpus", corpus_r));
        if (!store_r.empty()) extra.push_back(opt("store", store_r));
        return dispatch("retrieve", retrieve_args, std::move(extra), true);
    }
    if (agent->parsed()) {
        std::vector<std::string> extra;
        if (!policy.empty()) extra.push_back(opt("policy", policy));
        if (!fault.empty()) extra.push_back(opt("fault", fault));
        if (!corpus_a.empty()) extra.push_back(opt("corpus", corpus_a));
        if (!store_a.empty()) extra.push_back(opt("store", store_a));
        return dispatch("agent-run", agent_args, std::move(extra), true);
    }
    if (report->parsed()) {
        std::vector<std::string> extra;
        if (!run_dir.empty()) extra.push_back(opt("run", run_dir));
        if (!corpus_p.empty()) extra.push_back(opt("corpus", corpus_p));
        if (!store_p.empty()) extra.push_back(opt("store", store_p));
        if (!policy_p.empty()) extra.push_back(opt("policy", policy_p));
        return dispatch("report", report_args, std::move(extra), true);
    }
    if (evaluate->parsed()) {
        std::vector<std::string> extra{opt("pred", pred_dir), opt("ref", ref_dir)};
        if (!channel.empty()) extra.push_back(opt("channel", channel));
        return dispatch("evaluate", evaluate_args, std::move(extra), true);
    }
    if (train->parsed()) return dispatch("train-projector", train_args, {}, true);
    return 1;
}
